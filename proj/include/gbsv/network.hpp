// Haar-random unitaries and the linear-network solution applied to
// trajectory batches: α' = Uα, β' = Uβ.

#ifndef GBSV_NETWORK_HPP
#define GBSV_NETWORK_HPP

#include "gbsv/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <fstream>

namespace gbsv {

struct UnitaryMatrix {
    CMatrix entries;
    std::uint64_t seed = 0;

    Eigen::Index dim() const { return entries.rows(); }
};

/// max |U†U − I|
inline double unitarity_defect(const CMatrix& u) {
    return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()))
        .cwiseAbs()
        .maxCoeff();
}

/// Haar-distributed M×M unitary: QR of an i.i.d. complex Ginibre matrix with
/// the R diagonal rotated to the positive real axis (the phase fix that makes
/// QR sampling uniform rather than merely unitary).
inline UnitaryMatrix haar_unitary(int modes, std::uint64_t seed) {
    if (modes < 1) throw ValidationError("haar_unitary: modes must be >= 1");
    Rng rng(seed);
    CMatrix ginibre(modes, modes);
    for (int i = 0; i < modes; ++i)
        for (int j = 0; j < modes; ++j) {
            const auto [re, im] = rng.normal_pair();
            ginibre(i, j) = Complex(re, im) * M_SQRT1_2;
        }
    Eigen::HouseholderQR<CMatrix> qr(ginibre);
    CMatrix q = qr.householderQ();
    const CMatrix& packed = qr.matrixQR();
    for (int j = 0; j < modes; ++j) {
        const Complex rjj = packed(j, j);
        const double a = std::abs(rjj);
        q.col(j) *= (a == 0.0) ? Complex(1.0) : rjj / a;
    }
    return {std::move(q), seed};
}

inline UnitaryMatrix identity_unitary(int modes) {
    if (modes < 1) throw ValidationError("identity_unitary: modes must be >= 1");
    return {CMatrix::Identity(modes, modes), 0};
}

namespace detail {

inline void apply_unitary(TrajectoryBatch& batch, const CMatrix& u) {
    if (u.rows() != u.cols() || u.rows() != batch.modes())
        throw ValidationError("transform: unitary dimension does not match batch modes");
    batch.alpha = (batch.alpha * u.transpose()).eval();
    batch.beta = (batch.beta * u.transpose()).eval();
    batch.stage = BatchStage::Transformed;
}

}  // namespace detail

/// Pass an Input-stage batch through the linear network. Total occupation
/// Σ_j α_j β_j* is preserved exactly in the algebra (Uᵀ U* = I), to roundoff
/// numerically.
inline TrajectoryBatch transform(TrajectoryBatch batch, const UnitaryMatrix& u) {
    if (batch.stage != BatchStage::Input)
        throw ValidationError("transform: batch already transformed");
    batch.check_shapes();
    detail::apply_unitary(batch, u.entries);
    return batch;
}

/// Evolve under H = ħ ω_ij a_i† a_j for time t, i.e. apply U(t) = exp(−iωt).
/// ω must be Hermitian; the exponential goes through the eigendecomposition
/// so the result is unitary to roundoff. Composes freely over time slices.
inline TrajectoryBatch evolve_linear(TrajectoryBatch batch, const CMatrix& omega,
                                     double t) {
    if (omega.rows() != omega.cols())
        throw ValidationError("evolve_linear: omega must be square");
    if ((omega - omega.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("evolve_linear: omega must be Hermitian to 1e-12");
    batch.check_shapes();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(omega);
    const auto& v = eig.eigenvectors();
    CVector phases(omega.rows());
    for (Eigen::Index k = 0; k < omega.rows(); ++k)
        phases(k) = std::polar(1.0, -eig.eigenvalues()(k) * t);
    const CMatrix u = v * phases.asDiagonal() * v.adjoint();
    detail::apply_unitary(batch, u);
    return batch;
}

// ---------------------------------------------------------------------------
// Flat-binary unitary files: M×M row-major, each entry stored as two
// little-endian float64 (real then imaginary), 16·M² bytes total with the
// dimension inferred from the file size.
// ---------------------------------------------------------------------------

inline void save_unitary(const UnitaryMatrix& u, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("save_unitary: cannot open " + path);
    const Eigen::Index m = u.dim();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const double re = u.entries(i, j).real();
            const double im = u.entries(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(double));
            out.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    if (!out) throw ValidationError("save_unitary: write failed for " + path);
}

inline UnitaryMatrix load_unitary(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ValidationError("load_unitary: cannot open " + path);
    const std::streamoff bytes = in.tellg();
    if (bytes <= 0 || bytes % 16 != 0)
        throw ValidationError("load_unitary: file size is not a whole number of complex entries");
    const auto entries = static_cast<std::uint64_t>(bytes) / 16;
    const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(entries))));
    if (m * m != static_cast<Eigen::Index>(entries))
        throw ValidationError("load_unitary: entry count is not a perfect square");
    in.seekg(0);
    UnitaryMatrix u;
    u.entries.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            double re = 0.0, im = 0.0;
            in.read(reinterpret_cast<char*>(&re), sizeof(double));
            in.read(reinterpret_cast<char*>(&im), sizeof(double));
            u.entries(i, j) = Complex(re, im);
        }
    if (!in) throw ValidationError("load_unitary: truncated read from " + path);
    if (unitarity_defect(u.entries) > 1e-10)
        throw ValidationError("load_unitary: matrix in " + path + " is not unitary");
    return u;
}

}  // namespace gbsv

#endif  // GBSV_NETWORK_HPP
