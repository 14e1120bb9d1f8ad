#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bsc/commands.hpp"
#include "bsc/runconfig.hpp"

using namespace bsc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("bsc_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config parsing") {
    RunConfig cfg = RunConfig::from_string("a = 1\n# comment\n b = 2.5 # tail\nname= x\n");
    CHECK(cfg.get_int("a", 0) == 1);
    CHECK(cfg.get_double("b", 0) == doctest::Approx(2.5));
    CHECK(cfg.get_string("name", "") == "x");
    CHECK(cfg.get_int("missing", 7) == 7);
    CHECK_THROWS_AS(RunConfig::from_string("novalue\n"), ConfigError);
    CHECK_THROWS_AS(cfg.get_int("b", 0), ConfigError);
    RunConfig l = RunConfig::from_string("xs = 1.5, 2, -3\n");
    CHECK(l.get_list("xs") == std::vector<double>{1.5, 2.0, -3.0});
}

TEST_CASE("simulate command writes deterministic outputs") {
    TempDir dir("sim");
    RunConfig cfg = RunConfig::from_string(
        "dipole = x_minus_half\ntruncation = 12\nT = 0.2\ncontrol = random\nseed = 5\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("simulate", cfg) == kExitOk);
    std::string first = slurp(dir.path / "trajectory.csv");
    std::string first_json = slurp(dir.path / "simulate.json");
    CHECK(first.substr(0, 2) == "t,");
    CHECK(run_command("simulate", cfg) == kExitOk);
    CHECK(slurp(dir.path / "trajectory.csv") == first);
    CHECK(slurp(dir.path / "simulate.json") == first_json);
}

TEST_CASE("zero-control run keeps the ground state") {
    TempDir dir("simzero");
    RunConfig cfg = RunConfig::from_string("truncation = 8\nT = 0.1\ncontrol = zero\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("simulate", cfg) == kExitOk);
    auto j = nlohmann::json::parse(slurp(dir.path / "simulate.json"));
    CHECK(std::abs(j["final_ground_population"].get<double>() - 1.0) < 1e-10);
    CHECK(j["norm_drift"].get<double>() < 1e-12);
}

TEST_CASE("unknown dipole is a config error") {
    TempDir dir("bad");
    RunConfig cfg = RunConfig::from_string("dipole = nosuch\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("simulate", cfg) == kExitConfig);
    CHECK_FALSE(fs::exists(dir.path / "simulate.json"));
    CHECK(run_command("nosuchcommand", cfg) == kExitConfig);
}

TEST_CASE("moments command reports the round trip") {
    TempDir dir("mom");
    RunConfig cfg = RunConfig::from_string(
        "T = 1.0\nn_frequencies = 8\nseed = 3\ncontrol_segments = 1024\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("moments", cfg) == kExitOk);
    CHECK(fs::exists(dir.path / "moments.json"));
    CHECK(fs::exists(dir.path / "moment_control.csv"));
}

TEST_CASE("forms command compares the pulse against the series") {
    TempDir dir("forms");
    RunConfig cfg = RunConfig::from_string(
        "dipole = x_minus_half\ntruncation = 48\nK = 1\ncontrol = vplus\ncontrol_segments = "
        "16384\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("forms", cfg) == kExitOk);
    auto txt = slurp(dir.path / "forms.json");
    CHECK(txt.find("series_relative_gap") != std::string::npos);
    CHECK(txt.find("\"recovery_order\": \"order2\"") != std::string::npos);
}

TEST_CASE("sweep command emits the lambda table") {
    TempDir dir("sweep");
    RunConfig cfg = RunConfig::from_string(
        "dipole = x_minus_half\ntruncation = 48\ngrid_n = 96\nkernel_j = 32\nfreq_j_max = "
        "16\nsine_modes = 16\npoints = 3\nT_lo = 0.2\nT_hi = 0.4\nthreads = 2\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("sweep", cfg) == kExitOk);
    std::string csv = slurp(dir.path / "sweep.csv");
    CHECK(csv.substr(0, 2) == "T,");
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 4);
}

TEST_CASE("synthesize command with no target writes an empty plan") {
    TempDir dir("synth");
    RunConfig cfg = RunConfig::from_string("truncation = 16\nT = 2.6\n");
    cfg.set("out", dir.path.string());
    CHECK(run_command("synthesize", cfg) == kExitOk);
    auto j = nlohmann::json::parse(slurp(dir.path / "plan.json"));
    CHECK(j["plan"].empty());
}
