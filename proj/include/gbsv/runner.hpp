// Run orchestration: partitions sub-ensembles across a worker pool, streams
// trajectory blocks through the network and the kernel accumulators, and
// merges results with the order-independent sub-ensemble reduction.

#ifndef GBSV_RUNNER_HPP
#define GBSV_RUNNER_HPP

#include "gbsv/core.hpp"
#include "gbsv/exact.hpp"
#include "gbsv/network.hpp"
#include "gbsv/projectors.hpp"
#include "gbsv/sampler.hpp"
#include "gbsv/stats.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

namespace gbsv {

struct RunReportData {
    double wall_seconds = 0.0;
    std::uint64_t master_seed = 0;
    std::optional<std::uint64_t> haar_seed;
    std::vector<std::uint64_t> subensemble_seeds;
    std::uint64_t singular_evaluations = 0;
    double max_imag_residue = 0.0;
    int threads_used = 1;
    // sampling runs
    double distribution_sum = 0.0;
    double mean_count = 0.0;
    double mean_photon_estimate = 0.0;
    // density runs
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;
};

struct SampleRunResult {
    CountDistribution distribution;
    RunReportData report;
};

/// Observable binned by the density pipeline: the count-m projector of the
/// chosen representation, evaluated at the full-mode occupation.
struct DensitySpec {
    Representation kernel = Representation::PositiveP;
    int m = 0;
    double b_min = 0.0;
    double b_max = 0.0;
    int n_bins = 1;
    HistogramWeighting weighting = HistogramWeighting::PaperValueWeighted;

    void validate() const {
        if (m < 0) throw ValidationError("density: m must be >= 0");
        if (!(b_max > b_min)) throw ValidationError("density: need b_max > b_min");
        if (n_bins < 1) throw ValidationError("density: need at least one bin");
    }
};

struct DensityRunResult {
    DensityHistogram histogram;
    RunReportData report;
};

namespace detail {

inline std::optional<UnitaryMatrix> make_network(const RunConfig& config) {
    switch (config.unitary.kind) {
        case UnitarySpec::Kind::Identity:
            return std::nullopt;  // transform skipped
        case UnitarySpec::Kind::Haar:
            return haar_unitary(config.modes, config.unitary.seed);
        case UnitarySpec::Kind::File: {
            UnitaryMatrix u = load_unitary(config.unitary.path);
            if (u.dim() != config.modes)
                throw ValidationError("config: unitary file dimension does not match modes");
            return u;
        }
    }
    throw ValidationError("config: unknown unitary kind");
}

/// Runs `work(index)` for every sub-ensemble index on `threads` workers.
/// Indices are claimed from an atomic counter; since each index's work and
/// its slot in the reduction are independent of the claiming thread, results
/// are bit-identical for any thread count.
template <typename Work>
void parallel_subensembles(std::uint64_t n_s, int threads, Work&& work) {
    const int pool = std::max(1, std::min<int>(threads, static_cast<int>(n_s)));
    if (pool == 1) {
        for (std::uint64_t i = 0; i < n_s; ++i) work(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::uint64_t i = next.fetch_add(1);
            if (i >= n_s) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) workers.emplace_back(body);
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

/// Streams one sub-ensemble in blocks through draw → parity → network,
/// handing each transformed batch to `consume`.
inline void stream_subensemble(const RunConfig& config,
                               const std::vector<BivariateModeLaw>& laws,
                               const std::optional<UnitaryMatrix>& network,
                               std::uint64_t index,
                               const std::function<void(const TrajectoryBatch&)>& consume) {
    Rng rng(derive_subensemble_seed(config.master_seed, index));
    std::uint64_t remaining = config.ensemble.per_subensemble;
    while (remaining > 0) {
        const auto block =
            std::min<std::uint64_t>(remaining, static_cast<std::uint64_t>(config.block_size));
        TrajectoryBatch batch = draw_block(laws, config.representation,
                                           static_cast<Eigen::Index>(block), rng);
        if (config.representation == Representation::MatrixPParity)
            batch = parity_symmetrize(
                std::move(batch),
                config.parity_mode == ParityMode::RandomSign ? &rng : nullptr);
        if (network) batch = transform(std::move(batch), *network);
        consume(batch);
        remaining -= block;
    }
}

}  // namespace detail

inline int resolved_m_max(const RunConfig& config) {
    return config.m_max ? *config.m_max : default_count_cutoff(config.squeezer_bank());
}

/// Full sampling pipeline: estimate the count distribution prescribed by the
/// config. Bit-identical output for any `threads`.
inline SampleRunResult run_sampling(const RunConfig& config, int threads = 1) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const SqueezerBank bank = config.squeezer_bank();
    const auto laws = detail::mode_laws(bank);
    const auto network = detail::make_network(config);
    const int m_max = resolved_m_max(config);
    const KernelSpec spec = KernelSpec::for_config(config, m_max);

    const std::uint64_t n_s = config.ensemble.subensembles;
    std::vector<SubEnsembleResult> slots(n_s);
    detail::parallel_subensembles(n_s, threads, [&](std::uint64_t i) {
        KernelAccumulator acc(spec, config.ensemble.per_subensemble);
        detail::stream_subensemble(config, laws, network, i,
                                   [&](const TrajectoryBatch& b) { acc.add_batch(b); });
        slots[i] = acc.finalize();
    });

    SubEnsembleAccumulator merged;
    for (std::uint64_t i = 0; i < n_s; ++i) merged.insert(i, std::move(slots[i]));

    DistributionMeta meta{to_string(config.representation), config.modes, bank.r(),
                          config.ensemble.total(), config.master_seed};
    SampleRunResult out{combine_subensembles(merged, std::move(meta)), {}};

    out.report.master_seed = config.master_seed;
    if (config.unitary.kind == UnitarySpec::Kind::Haar)
        out.report.haar_seed = config.unitary.seed;
    out.report.subensemble_seeds.reserve(n_s);
    for (std::uint64_t i = 0; i < n_s; ++i)
        out.report.subensemble_seeds.push_back(derive_subensemble_seed(config.master_seed, i));
    out.report.singular_evaluations = merged.total_singular();
    out.report.max_imag_residue = merged.max_imag_residue();
    out.report.threads_used = std::max(1, std::min<int>(threads, static_cast<int>(n_s)));
    out.report.distribution_sum = out.distribution.sum();
    out.report.mean_count = out.distribution.mean_count();
    out.report.mean_photon_estimate = merged.mean_photon().real();
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// Density pipeline: bin the per-trajectory values of one count projector.
inline DensityRunResult run_density(const RunConfig& config, const DensitySpec& density,
                                    int threads = 1) {
    config.validate();
    density.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const SqueezerBank bank = config.squeezer_bank();
    const auto laws = detail::mode_laws(bank);
    const auto network = detail::make_network(config);
    const OmegaMatrix omega = OmegaMatrix::parity_even();

    const std::uint64_t n_s = config.ensemble.subensembles;
    std::vector<DensityAccumulator> slots(
        n_s, DensityAccumulator(density.b_min, density.b_max, density.n_bins,
                                density.weighting));
    std::vector<std::uint64_t> singulars(n_s, 0);

    detail::parallel_subensembles(n_s, threads, [&](std::uint64_t i) {
        DensityAccumulator& acc = slots[i];
        auto evaluate = [&](Complex n) -> std::optional<double> {
            try {
                const LogWeight w = density.kernel == Representation::PositiveP
                                        ? positive_p_count_kernel(n, density.m)
                                        : parity_count_kernel(n, n, density.m, omega);
                return w.value().real();
            } catch (const SingularEvaluation&) {
                singulars[i] += 1;
                return std::nullopt;
            }
        };
        detail::stream_subensemble(config, laws, network, i, [&](const TrajectoryBatch& b) {
            const CVector n = total_occupation(b);
            const bool antithetic =
                b.parity_symmetrized && b.parity_mode == ParityMode::Antithetic;
            for (Eigen::Index k = 0; k < b.samples(); ++k) {
                if (antithetic) {
                    if (auto v = evaluate(n(k))) acc.add_value(*v, 0.5);
                    if (auto v = evaluate(-n(k))) acc.add_value(*v, 0.5);
                } else {
                    if (auto v = evaluate(n(k))) acc.add_value(*v);
                }
            }
        });
        acc.end_subensemble(i, config.ensemble.per_subensemble);
        if (10000 * singulars[i] > 10 * config.ensemble.per_subensemble)
            throw NumericalAbort("sub-ensemble exceeded 0.1% singular kernel evaluations");
    });

    DensityAccumulator merged(density.b_min, density.b_max, density.n_bins,
                              density.weighting);
    for (const auto& acc : slots) merged.merge(acc);

    DensityRunResult out{merged.finalize(), {}};
    out.report.master_seed = config.master_seed;
    if (config.unitary.kind == UnitarySpec::Kind::Haar)
        out.report.haar_seed = config.unitary.seed;
    out.report.subensemble_seeds.reserve(n_s);
    for (std::uint64_t i = 0; i < n_s; ++i)
        out.report.subensemble_seeds.push_back(derive_subensemble_seed(config.master_seed, i));
    for (std::uint64_t s : singulars) out.report.singular_evaluations += s;
    out.report.threads_used = std::max(1, std::min<int>(threads, static_cast<int>(n_s)));
    out.report.underflow = out.histogram.underflow;
    out.report.overflow = out.histogram.overflow;
    out.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace gbsv

#endif  // GBSV_RUNNER_HPP
