// Positive-P sampling of multi-mode pure squeezed vacuum, plus the parity
// (matrix-P) symmetrization layered on top.

#ifndef GBSV_SAMPLER_HPP
#define GBSV_SAMPLER_HPP

#include "gbsv/core.hpp"

#include <cmath>

namespace gbsv {

/// Zero-mean bivariate Gaussian law of one mode's (α, β) pair, obtained by
/// completing the square in the squeezed-state positive-P density:
/// ⟨α²⟩ = ⟨β²⟩ = sinh(r)cosh(r), ⟨αβ⟩ = sinh²(r).
struct BivariateModeLaw {
    double var = 0.0;
    double cov = 0.0;

    // Cholesky factor of [[var, cov], [cov, var]]
    double l11 = 0.0;
    double l21 = 0.0;
    double l22 = 0.0;
};

inline BivariateModeLaw mode_law(double r) {
    if (!(r > 0.0) || !std::isfinite(r))
        throw ValidationError("mode_law: squeezing must be finite and > 0");
    BivariateModeLaw law;
    law.var = std::sinh(r) * std::cosh(r);
    law.cov = std::pow(std::sinh(r), 2);
    law.l11 = std::sqrt(law.var);
    law.l21 = law.cov / law.l11;
    law.l22 = std::sqrt(law.var - law.cov * law.cov / law.var);
    return law;
}

namespace detail {

/// Draws `samples` rows into a fresh Input-stage batch, consuming exactly one
/// normal pair per (sample, mode) cell in row-major order. Keeping the
/// consumption order fixed is what makes block-wise streaming reproduce a
/// single monolithic draw bit for bit.
inline TrajectoryBatch draw_block(const std::vector<BivariateModeLaw>& laws,
                                  Representation representation,
                                  Eigen::Index samples, Rng& rng) {
    const Eigen::Index modes = static_cast<Eigen::Index>(laws.size());
    TrajectoryBatch batch;
    batch.representation = representation;
    batch.stage = BatchStage::Input;
    batch.alpha.resize(samples, modes);
    batch.beta.resize(samples, modes);
    for (Eigen::Index k = 0; k < samples; ++k) {
        for (Eigen::Index j = 0; j < modes; ++j) {
            const auto& law = laws[static_cast<std::size_t>(j)];
            const auto [z1, z2] = rng.normal_pair();
            batch.alpha(k, j) = law.l11 * z1;
            batch.beta(k, j) = law.l21 * z1 + law.l22 * z2;
        }
    }
    return batch;
}

inline std::vector<BivariateModeLaw> mode_laws(const SqueezerBank& bank) {
    std::vector<BivariateModeLaw> laws;
    laws.reserve(static_cast<std::size_t>(bank.modes()));
    for (double r : bank.r()) laws.push_back(mode_law(r));
    return laws;
}

}  // namespace detail

/// All N_R trajectories of one sub-ensemble, drawn from the per-mode
/// bivariate laws with the stream seeded by derive_subensemble_seed.
inline TrajectoryBatch draw_trajectories(const RunConfig& config,
                                         std::uint64_t subensemble_index) {
    config.validate();
    if (subensemble_index >= config.ensemble.subensembles)
        throw ValidationError("draw_trajectories: sub-ensemble index out of range");
    Rng rng(derive_subensemble_seed(config.master_seed, subensemble_index));
    const auto laws = detail::mode_laws(config.squeezer_bank());
    return detail::draw_block(laws, config.representation,
                              static_cast<Eigen::Index>(config.ensemble.per_subensemble),
                              rng);
}

/// Marks a matrix-P batch for parity-projected evaluation. Antithetic mode
/// leaves the samples alone; estimators then average kernels over (α, +β)
/// and (α, −β) with weight ½ each, the deterministic equivalent of the
/// random global sign flip. RandomSign applies the literal flip to whole
/// β rows, consuming one uniform per trajectory after the draws.
inline TrajectoryBatch parity_symmetrize(TrajectoryBatch batch, Rng* rng = nullptr) {
    if (batch.representation != Representation::MatrixPParity)
        throw ValidationError("parity_symmetrize: batch is not matrix-P");
    batch.check_shapes();
    if (rng != nullptr) {
        batch.parity_mode = ParityMode::RandomSign;
        for (Eigen::Index k = 0; k < batch.samples(); ++k)
            if (rng->flip()) batch.beta.row(k) = -batch.beta.row(k);
    } else {
        batch.parity_mode = ParityMode::Antithetic;
    }
    batch.parity_symmetrized = true;
    return batch;
}

}  // namespace gbsv

#endif  // GBSV_SAMPLER_HPP
