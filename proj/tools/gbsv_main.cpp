// gbsv command line: sample | exact | compare | density.
// Exit codes: 0 success, 1 validation failure, 2 numerical abort.

#include "gbsv/exact.hpp"
#include "gbsv/io.hpp"
#include "gbsv/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    // GBSV_THREADS only sizes the worker pool; results are thread-invariant.
    if (const char* env = std::getenv("GBSV_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string sidecar_path(const std::string& out) { return out + ".report.json"; }

int cmd_sample(const std::string& config_path, const std::string& out, int threads) {
    const gbsv::RunConfig config = gbsv::load_run_config(config_path);
    const gbsv::SampleRunResult result = gbsv::run_sampling(config, resolve_threads(threads));
    gbsv::write_count_csv(result.distribution, out);

    gbsv::json report = gbsv::report_to_json(result.report);
    report["config"] = gbsv::config_to_json(config);
    report["distribution_sum"] = result.report.distribution_sum;
    report["mean_count"] = result.report.mean_count;
    report["mean_photon_estimate"] = result.report.mean_photon_estimate;
    report["outputs"] = {out};
    gbsv::write_json(report, sidecar_path(out));

    std::cout << "wrote " << out << " (" << result.distribution.size() << " counts, sum "
              << result.report.distribution_sum << ", " << result.report.wall_seconds
              << " s)\n";
    return 0;
}

int cmd_exact(int modes, double squeezing, int m_max, const std::string& out) {
    const gbsv::CountDistribution dist =
        m_max >= 0 ? gbsv::exact_total_count_distribution(modes, squeezing, m_max)
                   : gbsv::exact_total_count_distribution(modes, squeezing);
    gbsv::write_count_csv(dist, out);

    gbsv::json report;
    report["config"] = {{"modes", modes}, {"squeezing", squeezing}, {"m_max", dist.m_max}};
    report["normalization_sum"] = dist.sum();
    report["mean_count"] = dist.mean_count();
    report["outputs"] = {out};
    gbsv::write_json(report, sidecar_path(out));

    std::cout << "wrote " << out << " (normalization " << dist.sum() << ")\n";
    return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& out) {
    const gbsv::CountDistribution a = gbsv::read_count_csv(a_path);
    const gbsv::CountDistribution b = gbsv::read_count_csv(b_path);
    const gbsv::ComparisonReport rep = gbsv::compare(a, b);
    gbsv::json j = gbsv::comparison_to_json(rep);
    j["files"] = {{"a", a_path}, {"b", b_path}};
    gbsv::write_json(j, out);
    std::cout << "max_abs_diff " << rep.max_abs_diff << ", mean_abs_diff "
              << rep.mean_abs_diff << ", fraction_z_le_3 " << rep.fraction_z_le_3 << "\n";
    return 0;
}

int cmd_density(const std::string& config_path, const gbsv::DensitySpec& spec,
                const std::string& out, int threads) {
    const gbsv::RunConfig config = gbsv::load_run_config(config_path);
    const gbsv::DensityRunResult result =
        gbsv::run_density(config, spec, resolve_threads(threads));
    gbsv::write_density_csv(result.histogram, out);

    gbsv::json report = gbsv::report_to_json(result.report);
    report["config"] = gbsv::config_to_json(config);
    report["observable"] = {{"kernel", gbsv::to_string(spec.kernel)},
                            {"m", spec.m},
                            {"b_min", spec.b_min},
                            {"b_max", spec.b_max},
                            {"n_bins", spec.n_bins},
                            {"weighting",
                             spec.weighting == gbsv::HistogramWeighting::PaperValueWeighted
                                 ? "value"
                                 : "count"}};
    report["underflow"] = result.report.underflow;
    report["overflow"] = result.report.overflow;
    report["outputs"] = {out};
    gbsv::write_json(report, sidecar_path(out));

    std::cout << "wrote " << out << " (underflow " << result.report.underflow
              << ", overflow " << result.report.overflow << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-space Monte Carlo verification of photon-counting statistics"};
    app.require_subcommand(1);

    std::string config_path, out_path, a_path, b_path;
    int threads = 0;

    auto* sample = app.add_subcommand("sample", "Estimate a count distribution from a config");
    sample->add_option("--config", config_path, "Run config JSON")->required();
    sample->add_option("--out", out_path, "Output CSV path")->required();
    sample->add_option("--threads", threads, "Worker threads (default: GBSV_THREADS or all cores)");

    int modes = 0, m_max = -1;
    double squeezing = 0.0;
    auto* exact = app.add_subcommand("exact", "Write the exact count distribution");
    exact->add_option("--modes", modes, "Mode count M")->required();
    exact->add_option("--squeezing", squeezing, "Uniform squeezing parameter r")->required();
    exact->add_option("--mmax", m_max, "Largest count (default: mean + 10 std)");
    exact->add_option("--out", out_path, "Output CSV path")->required();

    auto* comparecmd = app.add_subcommand("compare", "Compare two distribution CSVs");
    comparecmd->add_option("a", a_path, "First CSV")->required();
    comparecmd->add_option("b", b_path, "Second CSV")->required();
    comparecmd->add_option("--out", out_path, "Comparison report JSON")->required();

    gbsv::DensitySpec density_spec;
    std::string kernel_name = "positive-p", weighting_name = "value";
    auto* density = app.add_subcommand("density", "Histogram a count-projector observable");
    density->add_option("--config", config_path, "Run config JSON")->required();
    density->add_option("--kernel", kernel_name, "Observable kernel: positive-p | matrix-p")
        ->check(CLI::IsMember({"positive-p", "matrix-p"}));
    density->add_option("--m", density_spec.m, "Projector count m")->required();
    density->add_option("--bmin", density_spec.b_min, "Lower bin edge")->required();
    density->add_option("--bmax", density_spec.b_max, "Upper bin edge")->required();
    density->add_option("--bins", density_spec.n_bins, "Number of bins N_b")->required();
    density->add_option("--weighting", weighting_name, "value (SM formula) | count")
        ->check(CLI::IsMember({"value", "count"}));
    density->add_option("--out", out_path, "Output CSV path")->required();
    density->add_option("--threads", threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sample) return cmd_sample(config_path, out_path, threads);
        if (*exact) return cmd_exact(modes, squeezing, m_max, out_path);
        if (*comparecmd) return cmd_compare(a_path, b_path, out_path);
        if (*density) {
            density_spec.kernel = kernel_name == "matrix-p"
                                      ? gbsv::Representation::MatrixPParity
                                      : gbsv::Representation::PositiveP;
            density_spec.weighting = weighting_name == "count"
                                         ? gbsv::HistogramWeighting::CountWeighted
                                         : gbsv::HistogramWeighting::PaperValueWeighted;
            return cmd_density(config_path, density_spec, out_path, threads);
        }
    } catch (const gbsv::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const gbsv::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
