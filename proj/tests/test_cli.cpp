#include "oracles.hpp"

#include "cli.hpp"
#include "rotalign/output.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace rotalign;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args)
{
    return cli::cli_main(args);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body)
{
    const auto p = dir / name;
    std::ofstream(p) << body;
    return p;
}

const char* weak_config = R"({
    "name": "weak",
    "pulse": {"shape": "ramp_plateau", "peak_intensity_W_cm2": 5e10, "rise_ps": 10, "plateau_ps": 40, "fall_ps": 10},
    "basis": {"j_max": 16},
    "time": {"t0_ps": 0, "t1_ps": 60},
    "outputs": {"tracked_states": 3}
})";

} // namespace

TEST_CASE("help and usage errors")
{
    CHECK(run({"--help"}) == cli::Success);
    CHECK(run({"simulate", "--help"}) == cli::Success);
    CHECK(run({}) == cli::ConfigFailure);
    CHECK(run({"teleport"}) == cli::ConfigFailure);
    CHECK(run({"simulate"}) == cli::ConfigFailure);
    CHECK(run({"spectrum"}) == cli::ConfigFailure);
    CHECK(run({"reproduce", "fig9"}) == cli::ConfigFailure);
    CHECK(run({"simulate", "--config", "/nonexistent/config.json"}) == cli::IoFailure);
}

TEST_CASE("configuration errors map to exit code 2")
{
    const auto dir = oracle::temp_dir("cli_config");
    const auto bad = write_config(dir, "bad.json", R"({"pulse": {"peak_intensity_W_cm2": 1e11}, "extra": true})");
    CHECK(run({"simulate", "--config", bad.string(), "--out", (dir / "out").string()}) == cli::ConfigFailure);
    const auto ok = write_config(dir, "ok.json", weak_config);
    CHECK(run({"simulate", "--config", ok.string(), "--out", (dir / "out").string(), "--delays", "5:1:1"}) ==
          cli::ConfigFailure);
}

TEST_CASE("numerical failures map to exit code 3")
{
    const auto dir = oracle::temp_dir("cli_numerical");
    const auto cfg = write_config(dir, "tiny.json", R"({
        "pulse": {"shape": "gaussian", "peak_intensity_W_cm2": 1.5e13, "fwhm_ps": 0.45},
        "basis": {"j_max": 4},
        "propagation": {"auto_extend_basis": false},
        "time": {"t0_ps": -2, "t1_ps": 2},
        "outputs": {"tracked_states": 2}
    })");
    CHECK(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()}) == cli::NumericalFailure);
    CHECK(run({"scan", "--config", cfg.string(), "--out", (dir / "b").string(), "--intensities", "1e9,1.5e13",
               "--delays", "0:2:0.5", "--threads", "1"}) == cli::NumericalFailure);
    CHECK(fs::exists(dir / "b" / "scan.csv"));
    CHECK(slurp(dir / "b" / "scan.csv").find("failed_row") != std::string::npos);
}

TEST_CASE("unwritable output maps to exit code 4")
{
    const auto dir = oracle::temp_dir("cli_io");
    const auto cfg = write_config(dir, "ok.json", weak_config);
    std::ofstream(dir / "blocker") << "x";
    CHECK(run({"simulate", "--config", cfg.string(), "--out", (dir / "blocker" / "out").string()}) == cli::IoFailure);
}

TEST_CASE("zero-intensity simulation is flat at the isotropic level")
{
    const auto dir = oracle::temp_dir("cli_zero");
    const auto cfg = write_config(dir, "zero.json", R"({
        "pulse": {"shape": "ramp_plateau", "peak_intensity_W_cm2": 0},
        "basis": {"j_max": 12},
        "time": {"t0_ps": 0, "t1_ps": 20}
    })");
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "out").string()}) == cli::Success);
    const auto t = read_csv(dir / "out" / "trajectory.csv");
    REQUIRE(!t.rows.empty());
    for (double v : t.column("cos2_2d")) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    for (double v : t.column("cos2_3d")) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("simulate is reproducible and analyze reads its output")
{
    const auto dir = oracle::temp_dir("cli_simulate");
    const auto cfg = write_config(dir, "weak.json", weak_config);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--format", "csv+svg"}) ==
            cli::Success);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--format", "csv+svg"}) ==
            cli::Success);
    const auto first = slurp(dir / "a" / "trajectory.csv");
    CHECK(first == slurp(dir / "b" / "trajectory.csv"));
    CHECK(first.find("# config:") != std::string::npos);
    CHECK(fs::exists(dir / "a" / "trajectory.svg"));

    const auto table = read_csv(dir / "a" / "trajectory.csv");
    CHECK(table.has("w_0"));
    CHECK(table.column("t_ps").back() == doctest::Approx(60.0));

    REQUIRE(run({"analyze", "--input", (dir / "a" / "trajectory.csv").string(), "--out", (dir / "an").string(),
                 "--window", "20:40", "--spectrum"}) == cli::Success);
    const auto report = slurp(dir / "an" / "analysis.txt");
    CHECK(report.find("frequency_per_ps: ") != std::string::npos);
    CHECK(fs::exists(dir / "an" / "analysis_spectrum.csv"));
    CHECK(run({"analyze", "--input", (dir / "a" / "trajectory.csv").string(), "--out", (dir / "an").string(),
               "--column", "nope"}) != cli::Success);
    CHECK(run({"analyze", "--input", (dir / "missing.csv").string(), "--out", (dir / "an").string()}) ==
          cli::IoFailure);
}

TEST_CASE("spectrum needs no configuration")
{
    const auto dir = oracle::temp_dir("cli_spectrum");
    REQUIRE(run({"spectrum", "--dw", "0:200:1", "--states", "4", "--out", dir.string()}) == cli::Success);
    const auto t = read_csv(dir / "spectrum.csv");
    CHECK(t.rows.size() == 201 * 4);
    const auto e = t.column("energy");
    // field-free levels J(J+1) for the even chain
    CHECK(e[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(e[1] == doctest::Approx(6.0));
    CHECK(e[2] == doctest::Approx(20.0));
    CHECK(e[3] == doctest::Approx(42.0));
    for (double c : t.column("converged")) CHECK(c == 1.0);
}

TEST_CASE("frames subcommand")
{
    const auto dir = oracle::temp_dir("cli_frames");
    const auto cfg = write_config(dir, "f.json", R"({
        "pulse": {"shape": "ramp_plateau", "peak_intensity_W_cm2": 5e10},
        "basis": {"j_max": 12},
        "time": {"t0_ps": 0, "t1_ps": 4},
        "outputs": {"frame_stride_ps": 2, "theta_points": 31}
    })");
    REQUIRE(run({"frames", "--config", cfg.string(), "--out", (dir / "out").string()}) == cli::Success);
    const auto t = read_csv(dir / "out" / "frames.csv");
    CHECK(t.rows.size() == 3 * 31);
}
