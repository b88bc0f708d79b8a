// End-to-end checks of the gbsv binary: exit codes, file outputs, and the
// byte-level determinism contract.

#include "gbsv/io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("gbsv_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string(GBSV_CLI_PATH) + " " + args;
    if (!capture.empty()) cmd += " >" + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

const char* kTinyConfig = R"({
  "modes": 1,
  "squeezing": 0.5,
  "representation": "positive-p",
  "unitary": {"kind": "identity"},
  "ensemble": {"subensembles": 2, "per_subensemble": 100},
  "m_max": 8,
  "seed": 7
})";

}  // namespace

TEST_CASE("exact subcommand writes the reference distribution", "[cli]") {
    TempDir dir;
    const std::string out = dir.file("exact.csv");
    const int code = run_cli("exact --modes 20 --squeezing 0.5 --out " + out,
                             dir.file("log.txt"));
    REQUIRE(code == 0);

    const gbsv::CountDistribution dist = gbsv::read_count_csv(out);
    CHECK(dist.at(4) == Catch::Approx(0.22702292269714199).epsilon(1e-10));
    CHECK(dist.at(3) == 0.0);

    const auto report = gbsv::json::parse(std::ifstream(out + ".report.json"));
    CHECK(report["normalization_sum"].get<double>() >= 1.0 - 1e-10);
}

TEST_CASE("sample smoke run: valid CSV, sidecar, determinism", "[cli]") {
    TempDir dir;
    const std::string config = dir.file("run.json");
    write_text(config, kTinyConfig);

    const std::string out1 = dir.file("a.csv");
    const std::string out2 = dir.file("b.csv");
    const std::string out3 = dir.file("c.csv");
    REQUIRE(run_cli("sample --config " + config + " --out " + out1 + " --threads 1",
                    dir.file("log1.txt")) == 0);
    REQUIRE(run_cli("sample --config " + config + " --out " + out2 + " --threads 1",
                    dir.file("log2.txt")) == 0);
    REQUIRE(run_cli("sample --config " + config + " --out " + out3 + " --threads 4",
                    dir.file("log3.txt")) == 0);

    // byte-identical across reruns and thread counts
    const std::string bytes = slurp(out1);
    CHECK(bytes == slurp(out2));
    CHECK(bytes == slurp(out3));

    const gbsv::CountDistribution dist = gbsv::read_count_csv(out1);
    CHECK(dist.m_min == 0);
    CHECK(dist.m_max == 8);

    const auto report = gbsv::json::parse(std::ifstream(out1 + ".report.json"));
    CHECK(report["config"]["modes"] == 1);
    CHECK(report["seeds"]["subensembles"].size() == 2);
    CHECK(report.contains("wall_seconds"));
    CHECK(report["outputs"][0] == out1);
}

TEST_CASE("environment thread override changes nothing but the pool", "[cli]") {
    TempDir dir;
    const std::string config = dir.file("run.json");
    write_text(config, kTinyConfig);
    const std::string out1 = dir.file("env1.csv");
    const std::string out2 = dir.file("env2.csv");
    REQUIRE(std::system(("GBSV_THREADS=1 " + std::string(GBSV_CLI_PATH) + " sample --config " +
                         config + " --out " + out1 + " >/dev/null 2>&1")
                            .c_str()) == 0);
    REQUIRE(std::system(("GBSV_THREADS=8 " + std::string(GBSV_CLI_PATH) + " sample --config " +
                         config + " --out " + out2 + " >/dev/null 2>&1")
                            .c_str()) == 0);
    CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("compare subcommand: identity and error paths", "[cli]") {
    TempDir dir;
    const std::string a = dir.file("a.csv");
    REQUIRE(run_cli("exact --modes 4 --squeezing 0.5 --mmax 12 --out " + a,
                    dir.file("log.txt")) == 0);

    const std::string report_path = dir.file("cmp.json");
    REQUIRE(run_cli("compare " + a + " " + a + " --out " + report_path,
                    dir.file("log2.txt")) == 0);
    const auto report = gbsv::json::parse(std::ifstream(report_path));
    CHECK(report["max_abs_diff"] == 0.0);
    CHECK(report["fraction_z_le_3"] == 1.0);

    const std::string broken = dir.file("broken.csv");
    write_text(broken, "m,probability,sigma\n0,0.5,huh\n");
    const std::string log = dir.file("log3.txt");
    CHECK(run_cli("compare " + a + " " + broken + " --out " + dir.file("x.json"), log) == 1);
    CHECK(slurp(log).find(":2") != std::string::npos);
}

TEST_CASE("density subcommand and validation exit codes", "[cli]") {
    TempDir dir;
    const std::string config = dir.file("run.json");
    write_text(config, kTinyConfig);

    const std::string out = dir.file("density.csv");
    REQUIRE(run_cli("density --config " + config +
                        " --kernel positive-p --m 0 --bmin -2 --bmax 2 --bins 50 --out " + out,
                    dir.file("log.txt")) == 0);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "bin_center,density,sigma");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 50);
    const auto report = gbsv::json::parse(std::ifstream(out + ".report.json"));
    CHECK(report.contains("underflow"));
    CHECK(report["observable"]["m"] == 0);

    // empty range is a validation error: exit code 1
    CHECK(run_cli("density --config " + config +
                      " --kernel positive-p --m 0 --bmin 2 --bmax 2 --bins 10 --out " +
                      dir.file("bad.csv"),
                  dir.file("log2.txt")) == 1);
}

TEST_CASE("config errors surface with exit code 1 and a diagnostic", "[cli]") {
    TempDir dir;
    const std::string config = dir.file("bad.json");
    write_text(config, R"({"modes": 1, "squeezin": 0.5})");
    const std::string log = dir.file("log.txt");
    CHECK(run_cli("sample --config " + config + " --out " + dir.file("o.csv"), log) == 1);
    CHECK(slurp(log).find("squeezin") != std::string::npos);

    CHECK(run_cli("sample --config " + dir.file("missing.json") + " --out " +
                      dir.file("o.csv"),
                  dir.file("log2.txt")) == 1);
}

TEST_CASE("help exits zero, missing subcommand exits nonzero", "[cli]") {
    TempDir dir;
    CHECK(run_cli("--help", dir.file("help.txt")) == 0);
    CHECK(run_cli("", dir.file("none.txt")) == 1);
}
