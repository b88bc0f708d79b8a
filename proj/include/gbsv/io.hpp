// File formats: run-config JSON, distribution/density CSV (17 significant
// digits, exact round trip), and report sidecars.

#ifndef GBSV_IO_HPP
#define GBSV_IO_HPP

#include "gbsv/core.hpp"
#include "gbsv/runner.hpp"
#include "gbsv/stats.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace gbsv {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RunConfig JSON
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
}

inline std::uint64_t get_u64(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("config: missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ValidationError(std::string("config: '") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
    detail::reject_unknown_keys(j,
                                {"modes", "squeezing", "representation", "unitary", "ensemble",
                                 "m_max", "subset", "seed", "parity_mode", "block_size"},
                                "config");
    RunConfig config;
    if (!j.contains("modes") || !j.at("modes").is_number_integer())
        throw ValidationError("config: 'modes' must be an integer");
    config.modes = j.at("modes").get<int>();
    if (config.modes < 1) throw ValidationError("config: modes must be >= 1");

    if (!j.contains("squeezing")) throw ValidationError("config: missing key 'squeezing'");
    const auto& sq = j.at("squeezing");
    if (sq.is_number()) {
        config.squeezing.assign(static_cast<std::size_t>(config.modes), sq.get<double>());
    } else if (sq.is_array()) {
        config.squeezing = sq.get<std::vector<double>>();
    } else {
        throw ValidationError("config: 'squeezing' must be a number or an array");
    }

    const std::string rep = j.value("representation", std::string());
    if (rep == "positive-p")
        config.representation = Representation::PositiveP;
    else if (rep == "matrix-p")
        config.representation = Representation::MatrixPParity;
    else
        throw ValidationError("config: representation must be \"positive-p\" or \"matrix-p\"");

    if (!j.contains("unitary") || !j.at("unitary").is_object())
        throw ValidationError("config: 'unitary' must be an object");
    const auto& u = j.at("unitary");
    const std::string kind = u.value("kind", std::string());
    if (kind == "identity") {
        detail::reject_unknown_keys(u, {"kind"}, "unitary");
        config.unitary.kind = UnitarySpec::Kind::Identity;
    } else if (kind == "haar") {
        detail::reject_unknown_keys(u, {"kind", "seed"}, "unitary");
        config.unitary.kind = UnitarySpec::Kind::Haar;
        config.unitary.seed = detail::get_u64(u, "seed");
    } else if (kind == "file") {
        detail::reject_unknown_keys(u, {"kind", "path"}, "unitary");
        config.unitary.kind = UnitarySpec::Kind::File;
        config.unitary.path = u.value("path", std::string());
    } else {
        throw ValidationError("config: unitary kind must be \"identity\", \"haar\" or \"file\"");
    }

    if (!j.contains("ensemble") || !j.at("ensemble").is_object())
        throw ValidationError("config: 'ensemble' must be an object");
    const auto& e = j.at("ensemble");
    detail::reject_unknown_keys(e, {"subensembles", "per_subensemble"}, "ensemble");
    config.ensemble.subensembles = detail::get_u64(e, "subensembles");
    config.ensemble.per_subensemble = detail::get_u64(e, "per_subensemble");

    if (j.contains("m_max")) {
        if (!j.at("m_max").is_number_integer())
            throw ValidationError("config: 'm_max' must be an integer");
        config.m_max = j.at("m_max").get<int>();
    }
    if (j.contains("subset")) {
        if (!j.at("subset").is_array())
            throw ValidationError("config: 'subset' must be an array of mode indices");
        config.subset = j.at("subset").get<std::vector<int>>();
    }
    config.master_seed = detail::get_u64(j, "seed");

    const std::string parity = j.value("parity_mode", std::string("antithetic"));
    if (parity == "antithetic")
        config.parity_mode = ParityMode::Antithetic;
    else if (parity == "random")
        config.parity_mode = ParityMode::RandomSign;
    else
        throw ValidationError("config: parity_mode must be \"antithetic\" or \"random\"");

    if (j.contains("block_size")) {
        if (!j.at("block_size").is_number_integer())
            throw ValidationError("config: 'block_size' must be an integer");
        config.block_size = j.at("block_size").get<int>();
    }

    config.validate();
    return config;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw ValidationError("config: " + path + ": " + err.what());
    }
    return parse_run_config(j);
}

/// Fully resolved config echo; re-running it reproduces the artifact bit for
/// bit (thread count deliberately excluded — it cannot change results).
inline json config_to_json(const RunConfig& config) {
    json j;
    j["modes"] = config.modes;
    j["squeezing"] = config.squeezing;
    j["representation"] = to_string(config.representation);
    switch (config.unitary.kind) {
        case UnitarySpec::Kind::Identity:
            j["unitary"] = {{"kind", "identity"}};
            break;
        case UnitarySpec::Kind::Haar:
            j["unitary"] = {{"kind", "haar"}, {"seed", config.unitary.seed}};
            break;
        case UnitarySpec::Kind::File:
            j["unitary"] = {{"kind", "file"}, {"path", config.unitary.path}};
            break;
    }
    j["ensemble"] = {{"subensembles", config.ensemble.subensembles},
                     {"per_subensemble", config.ensemble.per_subensemble}};
    j["m_max"] = resolved_m_max(config);
    if (config.subset) j["subset"] = *config.subset;
    j["seed"] = config.master_seed;
    j["parity_mode"] =
        config.parity_mode == ParityMode::Antithetic ? "antithetic" : "random";
    j["block_size"] = config.block_size;
    return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& field, const std::string& path, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(line) +
                              ": cannot parse number '" + field + "'");
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

inline void write_count_csv(const CountDistribution& dist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << "m,probability,sigma\n";
    for (int m = dist.m_min; m <= dist.m_max; ++m) {
        const auto i = static_cast<std::size_t>(m - dist.m_min);
        out << m << ',' << detail::format_g17(dist.probability[i]) << ','
            << detail::format_g17(dist.sigma[i]) << '\n';
    }
    if (!out) throw ValidationError("write failed for " + path);
}

inline CountDistribution read_count_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "m,probability,sigma")
        throw ValidationError(path + ":1: expected header 'm,probability,sigma'");
    CountDistribution dist;
    dist.meta.method = "file";
    int lineno = 1;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected 3 fields, got " + std::to_string(fields.size()));
        int m = 0;
        try {
            std::size_t used = 0;
            m = std::stoi(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": cannot parse count '" + fields[0] + "'");
        }
        if (first) {
            dist.m_min = m;
            first = false;
        } else if (m != dist.m_max + 1) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": counts must be consecutive");
        }
        dist.m_max = m;
        dist.probability.push_back(detail::parse_double(fields[1], path, lineno));
        dist.sigma.push_back(detail::parse_double(fields[2], path, lineno));
    }
    if (first) throw ValidationError(path + ": no data rows");
    return dist;
}

inline void write_density_csv(const DensityHistogram& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << "bin_center,density,sigma\n";
    for (int jbin = 0; jbin < hist.n_bins; ++jbin) {
        const auto i = static_cast<std::size_t>(jbin);
        out << detail::format_g17(hist.bin_center(jbin)) << ','
            << detail::format_g17(hist.density[i]) << ','
            << detail::format_g17(hist.sigma[i]) << '\n';
    }
    if (!out) throw ValidationError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json report_to_json(const RunReportData& report) {
    json seeds;
    seeds["master"] = report.master_seed;
    if (report.haar_seed) seeds["haar"] = *report.haar_seed;
    seeds["subensembles"] = report.subensemble_seeds;
    json j;
    j["wall_seconds"] = report.wall_seconds;
    j["seeds"] = std::move(seeds);
    j["singular_evaluations"] = report.singular_evaluations;
    j["max_imag_residue"] = report.max_imag_residue;
    j["threads"] = report.threads_used;
    return j;
}

inline json comparison_to_json(const ComparisonReport& rep) {
    return json{{"m_min", rep.m_min},
                {"m_max", rep.m_max},
                {"max_abs_diff", rep.max_abs_diff},
                {"mean_abs_diff", rep.mean_abs_diff},
                {"max_z", rep.max_z},
                {"fraction_z_le_3", rep.fraction_z_le_3},
                {"z", rep.z}};
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ValidationError("write failed for " + path);
}

}  // namespace gbsv

#endif  // GBSV_IO_HPP
