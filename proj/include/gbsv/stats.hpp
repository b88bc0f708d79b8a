// Sub-ensemble accumulation, CLT error bars, trajectory-density histograms,
// and distribution comparison metrics.

#ifndef GBSV_STATS_HPP
#define GBSV_STATS_HPP

#include "gbsv/core.hpp"
#include "gbsv/projectors.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace gbsv {

/// Which count estimator a run accumulates.
struct KernelSpec {
    Representation representation = Representation::PositiveP;
    OmegaMatrix omega = OmegaMatrix::parity_even();
    std::optional<std::vector<int>> subset;  // nullopt = all modes
    int m_max = 0;

    static KernelSpec for_config(const RunConfig& config, int resolved_m_max) {
        KernelSpec spec;
        spec.representation = config.representation;
        spec.m_max = resolved_m_max;
        if (config.subset) {
            std::vector<int> s = *config.subset;
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            // A subset covering every mode is the total-count estimator; the
            // collapsed path keeps its odd-count zeros exact.
            if (static_cast<int>(s.size()) != config.modes) spec.subset = std::move(s);
        }
        return spec;
    }
};

/// Finalized per-sub-ensemble statistics. The per-count means stay complex;
/// probabilities are their real parts and the imaginary residue is kept as a
/// sampling-noise diagnostic.
struct SubEnsembleResult {
    CVector mean;
    std::uint64_t samples = 0;
    std::uint64_t singular = 0;
    double max_imag = 0.0;
    Complex mean_photon = 0.0;
};

/// Streaming kernel-mean accumulator for one sub-ensemble. Trajectories are
/// always consumed in draw order, so results are independent of how the
/// caller blocks them.
class KernelAccumulator {
public:
    KernelAccumulator(KernelSpec spec, std::uint64_t expected_samples)
        : spec_(std::move(spec)),
          expected_(expected_samples),
          sums_(CVector::Zero(spec_.m_max + 1)),
          row_(static_cast<std::size_t>(spec_.m_max) + 1) {}

    void add_batch(const TrajectoryBatch& batch) {
        batch.check_shapes();
        if (batch.representation != spec_.representation)
            throw ValidationError("accumulate: batch/kernel representation mismatch");
        const CVector n_total = total_occupation(batch);
        CVector n_subset;
        if (spec_.subset) n_subset = subset_occupation(batch, *spec_.subset);

        const bool antithetic = batch.parity_symmetrized &&
                                batch.parity_mode == ParityMode::Antithetic;
        for (Eigen::Index k = 0; k < batch.samples(); ++k) {
            const Complex n = n_total(k);
            const Complex ns = spec_.subset ? n_subset(k) : n;
            if (antithetic) {
                add_trajectory(ns, n, 0.5);
                add_trajectory(-ns, -n, 0.5);
            } else {
                add_trajectory(ns, n, 1.0);
            }
            seen_ += 1;
        }
    }

    SubEnsembleResult finalize() const {
        if (seen_ != expected_)
            throw ValidationError("accumulate: sample count does not match sub-ensemble size");
        if (seen_ == 0) throw ValidationError("accumulate: empty sub-ensemble");
        // >0.1% singular evaluations poisons the sub-ensemble mean
        if (10000 * singular_ > 10 * seen_)
            throw NumericalAbort("sub-ensemble exceeded 0.1% singular kernel evaluations");
        SubEnsembleResult out;
        out.mean = sums_ / static_cast<double>(seen_);
        out.samples = seen_;
        out.singular = singular_;
        out.max_imag = 0.0;
        for (Eigen::Index j = 0; j < out.mean.size(); ++j)
            out.max_imag = std::max(out.max_imag, std::abs(out.mean(j).imag()));
        out.mean_photon = photon_sum_ / static_cast<double>(seen_);
        return out;
    }

private:
    void add_trajectory(Complex ns, Complex n, double weight) {
        try {
            if (spec_.subset)
                subset_count_kernel_row(ns, n, spec_.representation, spec_.omega, row_);
            else
                total_count_kernel_row(n, spec_.representation, spec_.omega, row_);
            const Complex photon = mean_photon_kernel(n, spec_.representation, spec_.omega);
            for (Eigen::Index j = 0; j < sums_.size(); ++j)
                sums_(j) += weight * row_[static_cast<std::size_t>(j)];
            photon_sum_ += weight * photon;
        } catch (const SingularEvaluation&) {
            singular_ += 1;
        }
    }

    KernelSpec spec_;
    std::uint64_t expected_ = 0;
    std::uint64_t seen_ = 0;
    std::uint64_t singular_ = 0;
    CVector sums_;
    Complex photon_sum_ = 0.0;
    std::vector<Complex> row_;
};

/// Sub-ensemble mean vector of the configured kernel over one batch.
inline SubEnsembleResult accumulate_counts(const TrajectoryBatch& batch,
                                           const KernelSpec& spec) {
    KernelAccumulator acc(spec, static_cast<std::uint64_t>(batch.samples()));
    acc.add_batch(batch);
    return acc.finalize();
}

/// Finalized sub-ensemble results keyed by sub-ensemble index. Merging is a
/// disjoint union, hence associative and commutative; all order-sensitive
/// arithmetic happens later, in index order.
class SubEnsembleAccumulator {
public:
    void insert(std::uint64_t index, SubEnsembleResult result) {
        if (!results_.emplace(index, std::move(result)).second)
            throw ValidationError("accumulator: duplicate sub-ensemble index");
    }

    void merge(const SubEnsembleAccumulator& other) {
        for (const auto& [idx, res] : other.results_) insert(idx, res);
    }

    std::size_t count() const { return results_.size(); }

    const std::map<std::uint64_t, SubEnsembleResult>& results() const { return results_; }

    std::uint64_t total_singular() const {
        std::uint64_t s = 0;
        for (const auto& [idx, res] : results_) s += res.singular;
        return s;
    }

    double max_imag_residue() const {
        double m = 0.0;
        for (const auto& [idx, res] : results_) m = std::max(m, res.max_imag);
        return m;
    }

    /// Grand mean of the per-sub-ensemble mean-photon estimates.
    Complex mean_photon() const {
        Complex s = 0.0;
        for (const auto& [idx, res] : results_) s += res.mean_photon;
        return s / static_cast<double>(results_.size());
    }

private:
    std::map<std::uint64_t, SubEnsembleResult> results_;
};

/// Grand mean and CLT error of the sub-ensemble means:
/// sigma_j = sqrt(var(means_j) / N_S) with the unbiased (N_S − 1) variance.
inline CountDistribution combine_subensembles(const SubEnsembleAccumulator& acc,
                                              DistributionMeta meta) {
    const auto n_s = acc.count();
    if (n_s < 2)
        throw ValidationError("combine: need at least 2 sub-ensembles");
    const auto& results = acc.results();
    const Eigen::Index counts = results.begin()->second.mean.size();
    for (const auto& [idx, res] : results)
        if (res.mean.size() != counts)
            throw ValidationError("combine: sub-ensemble mean lengths differ");

    CountDistribution dist;
    dist.m_min = 0;
    dist.m_max = static_cast<int>(counts) - 1;
    dist.probability.assign(static_cast<std::size_t>(counts), 0.0);
    dist.sigma.assign(static_cast<std::size_t>(counts), 0.0);
    dist.meta = std::move(meta);

    for (Eigen::Index j = 0; j < counts; ++j) {
        double mean = 0.0;
        for (const auto& [idx, res] : results) mean += res.mean(j).real();
        mean /= static_cast<double>(n_s);
        double ss = 0.0;
        for (const auto& [idx, res] : results) {
            const double d = res.mean(j).real() - mean;
            ss += d * d;
        }
        const double var = ss / static_cast<double>(n_s - 1);
        dist.probability[static_cast<std::size_t>(j)] = mean;
        dist.sigma[static_cast<std::size_t>(j)] = std::sqrt(var / static_cast<double>(n_s));
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Trajectory-density histograms
// ---------------------------------------------------------------------------

/// Streaming estimator of P(O_j) = (1/(N_S Δ_b)) Σ_i Ō_j^(i) over equally
/// spaced bins. PaperValueWeighted mode sums the observable values landing in
/// a bin; CountWeighted is an ordinary normalized count histogram. Per-bin
/// sigma comes from the spread of the per-sub-ensemble bin estimates.
class DensityAccumulator {
public:
    DensityAccumulator(double b_min, double b_max, int n_bins,
                       HistogramWeighting weighting)
        : b_min_(b_min), b_max_(b_max), n_bins_(n_bins), weighting_(weighting) {
        if (!(b_max > b_min)) throw ValidationError("histogram: need b_max > b_min");
        if (n_bins < 1) throw ValidationError("histogram: need at least one bin");
        width_ = (b_max - b_min) / n_bins;
        current_.assign(static_cast<std::size_t>(n_bins), 0.0);
    }

    void add_value(double v, double weight = 1.0) {
        if (std::isnan(v)) throw ValidationError("histogram: NaN observable value");
        if (v < b_min_) {
            underflow_ += 1;
            return;
        }
        if (v > b_max_) {
            overflow_ += 1;
            return;
        }
        auto j = static_cast<Eigen::Index>((v - b_min_) / width_);
        if (j >= n_bins_) j = n_bins_ - 1;  // right edge closes the last bin
        current_[static_cast<std::size_t>(j)] +=
            weighting_ == HistogramWeighting::PaperValueWeighted ? weight * v : weight;
    }

    /// Close the current sub-ensemble of n_r trajectories.
    void end_subensemble(std::uint64_t index, std::uint64_t n_r) {
        if (n_r == 0) throw ValidationError("histogram: empty sub-ensemble");
        std::vector<double> density(current_.size());
        for (std::size_t j = 0; j < current_.size(); ++j)
            density[j] = current_[j] / (static_cast<double>(n_r) * width_);
        if (!per_sub_.emplace(index, std::move(density)).second)
            throw ValidationError("histogram: duplicate sub-ensemble index");
        std::fill(current_.begin(), current_.end(), 0.0);
    }

    void merge(const DensityAccumulator& other) {
        if (other.n_bins_ != n_bins_ || other.b_min_ != b_min_ || other.b_max_ != b_max_)
            throw ValidationError("histogram: merging incompatible accumulators");
        for (const auto& [idx, d] : other.per_sub_)
            if (!per_sub_.emplace(idx, d).second)
                throw ValidationError("histogram: duplicate sub-ensemble index");
        underflow_ += other.underflow_;
        overflow_ += other.overflow_;
    }

    DensityHistogram finalize() const {
        if (per_sub_.empty()) throw ValidationError("histogram: no sub-ensembles");
        const auto n_s = per_sub_.size();
        DensityHistogram hist;
        hist.b_min = b_min_;
        hist.b_max = b_max_;
        hist.n_bins = static_cast<int>(n_bins_);
        hist.weighting = weighting_;
        hist.underflow = underflow_;
        hist.overflow = overflow_;
        hist.density.assign(static_cast<std::size_t>(n_bins_), 0.0);
        hist.sigma.assign(static_cast<std::size_t>(n_bins_), 0.0);
        for (Eigen::Index j = 0; j < n_bins_; ++j) {
            double mean = 0.0;
            for (const auto& [idx, d] : per_sub_) mean += d[static_cast<std::size_t>(j)];
            mean /= static_cast<double>(n_s);
            hist.density[static_cast<std::size_t>(j)] = mean;
            if (n_s >= 2) {
                double ss = 0.0;
                for (const auto& [idx, d] : per_sub_) {
                    const double dev = d[static_cast<std::size_t>(j)] - mean;
                    ss += dev * dev;
                }
                hist.sigma[static_cast<std::size_t>(j)] =
                    std::sqrt(ss / static_cast<double>(n_s - 1) / static_cast<double>(n_s));
            }
        }
        return hist;
    }

private:
    double b_min_, b_max_, width_ = 0.0;
    Eigen::Index n_bins_;
    HistogramWeighting weighting_;
    std::vector<double> current_;
    std::map<std::uint64_t, std::vector<double>> per_sub_;
    std::uint64_t underflow_ = 0;
    std::uint64_t overflow_ = 0;
};

/// Histogram of pre-organized N_S × N_R observable samples.
inline DensityHistogram histogram_density(const std::vector<std::vector<double>>& values,
                                          double b_min, double b_max, int n_bins,
                                          HistogramWeighting weighting) {
    DensityAccumulator acc(b_min, b_max, n_bins, weighting);
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (double v : values[i]) acc.add_value(v);
        acc.end_subensemble(i, values[i].size());
    }
    return acc.finalize();
}

// ---------------------------------------------------------------------------
// Distribution comparison
// ---------------------------------------------------------------------------

struct ComparisonReport {
    int m_min = 0;  // overlap range
    int m_max = 0;
    double max_abs_diff = 0.0;
    double mean_abs_diff = 0.0;
    std::vector<double> z;  // |a−b| / sqrt(σ_a² + σ_b²) per count
    double max_z = 0.0;
    double fraction_z_le_3 = 0.0;
};

inline ComparisonReport compare(const CountDistribution& a, const CountDistribution& b) {
    const int lo = std::max(a.m_min, b.m_min);
    const int hi = std::min(a.m_max, b.m_max);
    if (lo > hi) throw ValidationError("compare: count ranges do not overlap");
    ComparisonReport rep;
    rep.m_min = lo;
    rep.m_max = hi;
    rep.z.reserve(static_cast<std::size_t>(hi - lo + 1));
    double sum_abs = 0.0;
    std::size_t ok = 0;
    for (int m = lo; m <= hi; ++m) {
        const double da = a.probability[static_cast<std::size_t>(m - a.m_min)];
        const double db = b.probability[static_cast<std::size_t>(m - b.m_min)];
        const double sa = a.sigma[static_cast<std::size_t>(m - a.m_min)];
        const double sb = b.sigma[static_cast<std::size_t>(m - b.m_min)];
        const double diff = std::abs(da - db);
        sum_abs += diff;
        rep.max_abs_diff = std::max(rep.max_abs_diff, diff);
        const double denom = std::sqrt(sa * sa + sb * sb);
        double z;
        if (diff == 0.0)
            z = 0.0;
        else if (denom == 0.0)
            z = std::numeric_limits<double>::infinity();
        else
            z = diff / denom;
        rep.z.push_back(z);
        rep.max_z = std::max(rep.max_z, z);
        if (z <= 3.0) ++ok;
    }
    rep.mean_abs_diff = sum_abs / static_cast<double>(hi - lo + 1);
    rep.fraction_z_le_3 = static_cast<double>(ok) / static_cast<double>(rep.z.size());
    return rep;
}

}  // namespace gbsv

#endif  // GBSV_STATS_HPP
