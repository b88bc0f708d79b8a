// Core domain types, run configuration, and the deterministic-seeding
// contract shared by every other gbsv module.

#ifndef GBSV_CORE_HPP
#define GBSV_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbsv {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Bad input: configs, file contents, contract violations. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A kernel was evaluated at a pole (e.g. coth at n = 0, cosh(n) = 0).
class SingularEvaluation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too many singular evaluations inside one sub-ensemble. CLI exit code 2.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Representation { PositiveP, MatrixPParity };
enum class BatchStage { Input, Transformed };
enum class ParityMode { Antithetic, RandomSign };
enum class HistogramWeighting { PaperValueWeighted, CountWeighted };

inline const char* to_string(Representation r) {
    return r == Representation::PositiveP ? "positive-p" : "matrix-p";
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// splitmix64 output mix (Steele, Lea, Flood 2014). Bijective on u64.
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Seed for sub-ensemble `index` derived from the run's master seed.
///
/// Fixed mixing function, part of the reproducibility contract:
///   splitmix64(master_seed XOR 0x9E3779B97F4A7C15 * (index + 1))
/// Injective in `index` for a fixed master seed (odd multiplier, bijective
/// finalizer), and independent of thread count by construction.
inline constexpr std::uint64_t derive_subensemble_seed(std::uint64_t master_seed,
                                                       std::uint64_t index) {
    return splitmix64(master_seed ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

/// Deterministic RNG used everywhere: mt19937_64 bit stream with an explicit
/// Box-Muller transform, so sequences do not depend on the C++ library's
/// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in (0, 1], 53-bit resolution.
    double u01() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    bool flip() { return (gen_() >> 63) != 0; }

    /// One standard-normal pair (Box-Muller).
    std::pair<double, double> normal_pair() {
        const double u1 = u01();
        const double u2 = u01();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Per-mode squeezing parameters r_j > 0 of the input state.
class SqueezerBank {
public:
    explicit SqueezerBank(std::vector<double> r) : r_(std::move(r)) {
        if (r_.empty())
            throw ValidationError("SqueezerBank: need at least one mode");
        for (double rj : r_)
            if (!(rj > 0.0) || !std::isfinite(rj))
                throw ValidationError("SqueezerBank: every r_j must be finite and > 0");
    }

    int modes() const { return static_cast<int>(r_.size()); }
    const std::vector<double>& r() const { return r_; }

    /// n̄_j = sinh²(r_j)
    double mean_photons(int j) const { return std::pow(std::sinh(r_.at(j)), 2); }

    double total_mean_photons() const {
        double s = 0.0;
        for (int j = 0; j < modes(); ++j) s += mean_photons(j);
        return s;
    }

private:
    std::vector<double> r_;
};

/// The NxN global-symmetry weight matrix Ω. Trace must be 1 so kernel
/// completeness reproduces total probability.
struct OmegaMatrix {
    int order = 2;
    CMatrix entries;

    OmegaMatrix(int order_, CMatrix entries_)
        : order(order_), entries(std::move(entries_)) {
        if (order < 1 || entries.rows() != order || entries.cols() != order)
            throw ValidationError("OmegaMatrix: entries must be order x order");
        if (std::abs(entries.trace() - Complex(1.0, 0.0)) > 1e-12)
            throw ValidationError("OmegaMatrix: trace must equal 1");
    }

    /// Ω = diag(1, 0): the pure-squeezed-vacuum parity case.
    static OmegaMatrix parity_even() {
        CMatrix m = CMatrix::Zero(2, 2);
        m(0, 0) = 1.0;
        return OmegaMatrix(2, std::move(m));
    }
};

/// A block of paired phase-space amplitude trajectories. Rows are samples,
/// columns are modes. Real (zero imaginary part) at stage Input.
struct TrajectoryBatch {
    CMatrix alpha;
    CMatrix beta;
    Representation representation = Representation::PositiveP;
    BatchStage stage = BatchStage::Input;
    /// Set by parity_symmetrize; downstream estimators for a symmetrized
    /// batch in Antithetic mode evaluate kernels at (α,+β) and (α,−β).
    bool parity_symmetrized = false;
    ParityMode parity_mode = ParityMode::Antithetic;

    Eigen::Index samples() const { return alpha.rows(); }
    Eigen::Index modes() const { return alpha.cols(); }

    void check_shapes() const {
        if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols())
            throw ValidationError("TrajectoryBatch: alpha and beta shapes differ");
    }
};

/// n^(k) = Σ_j α_kj (β_kj)*, one value per trajectory row.
inline CVector total_occupation(const TrajectoryBatch& batch) {
    return (batch.alpha.array() * batch.beta.array().conjugate()).rowwise().sum();
}

/// Same sum restricted to a mode subset, accumulated in subset order.
inline CVector subset_occupation(const TrajectoryBatch& batch,
                                 const std::vector<int>& subset) {
    CVector n = CVector::Zero(batch.samples());
    for (int j : subset)
        n += (batch.alpha.col(j).array() * batch.beta.col(j).array().conjugate()).matrix();
    return n;
}

/// Provenance carried by every emitted distribution.
struct DistributionMeta {
    std::string method;          // "positive-p" | "matrix-p" | "exact" | "file"
    int modes = 0;
    std::vector<double> r;
    std::uint64_t total_samples = 0;  // E_S; 0 for exact distributions
    std::uint64_t seed = 0;
};

/// Probabilities over photon counts m with one-standard-deviation sampling
/// errors (zero for exact distributions). Monte Carlo entries may be slightly
/// negative; they are reported as-is.
struct CountDistribution {
    int m_min = 0;
    int m_max = 0;
    std::vector<double> probability;
    std::vector<double> sigma;
    DistributionMeta meta;

    int size() const { return m_max - m_min + 1; }

    double at(int m) const {
        if (m < m_min || m > m_max)
            throw ValidationError("CountDistribution: count out of range");
        return probability[static_cast<std::size_t>(m - m_min)];
    }

    double sum() const {
        double s = 0.0;
        for (double p : probability) s += p;
        return s;
    }

    double mean_count() const {
        double s = 0.0;
        for (int m = m_min; m <= m_max; ++m)
            s += m * probability[static_cast<std::size_t>(m - m_min)];
        return s;
    }
};

/// Estimated probability density of a trajectory observable over N_b equally
/// spaced bins. Out-of-range samples are tallied, never binned.
struct DensityHistogram {
    double b_min = 0.0;
    double b_max = 0.0;
    int n_bins = 0;
    std::vector<double> density;
    std::vector<double> sigma;
    HistogramWeighting weighting = HistogramWeighting::PaperValueWeighted;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;

    double bin_width() const { return (b_max - b_min) / n_bins; }
    double bin_center(int j) const { return b_min + (j + 0.5) * bin_width(); }
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct UnitarySpec {
    enum class Kind { Identity, Haar, File };
    Kind kind = Kind::Identity;
    std::uint64_t seed = 0;  // Haar only
    std::string path;        // File only
};

struct EnsembleSpec {
    std::uint64_t subensembles = 0;     // N_S
    std::uint64_t per_subensemble = 0;  // N_R

    std::uint64_t total() const { return subensembles * per_subensemble; }  // E_S
};

struct RunConfig {
    int modes = 0;
    std::vector<double> squeezing;  // broadcast already resolved to length `modes`
    Representation representation = Representation::PositiveP;
    UnitarySpec unitary;
    EnsembleSpec ensemble;
    std::optional<int> m_max;
    std::optional<std::vector<int>> subset;
    std::uint64_t master_seed = 0;
    ParityMode parity_mode = ParityMode::Antithetic;
    int block_size = 1000;  // trajectories per transform block

    SqueezerBank squeezer_bank() const { return SqueezerBank(squeezing); }

    void validate() const {
        if (modes < 1) throw ValidationError("config: modes must be >= 1");
        if (squeezing.size() != static_cast<std::size_t>(modes))
            throw ValidationError("config: squeezing length must match modes");
        SqueezerBank check(squeezing);
        if (ensemble.subensembles < 2)
            throw ValidationError("config: need at least 2 sub-ensembles for error estimation");
        if (ensemble.per_subensemble < 1)
            throw ValidationError("config: per_subensemble must be >= 1");
        if (m_max && *m_max < 0) throw ValidationError("config: m_max must be >= 0");
        if (subset) {
            if (subset->empty()) throw ValidationError("config: subset must not be empty");
            for (int j : *subset)
                if (j < 0 || j >= modes)
                    throw ValidationError("config: subset index out of range");
        }
        if (block_size < 1) throw ValidationError("config: block_size must be >= 1");
        if (unitary.kind == UnitarySpec::Kind::File && unitary.path.empty())
            throw ValidationError("config: unitary file path missing");
    }
};

}  // namespace gbsv

#endif  // GBSV_CORE_HPP
