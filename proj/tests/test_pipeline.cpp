#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "triplet/reproduce.hpp"
#include "triplet/state_file.hpp"

using namespace triplet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("tripletlab_pipe_" + tag + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("reproduce is byte-identical under one seed and diverges under another") {
    TempDir a("a"), b("b"), c("c");
    run_reproduce(5, "two-photon", a.path.string());
    run_reproduce(5, "two-photon", b.path.string());
    run_reproduce(6, "two-photon", c.path.string());
    CHECK(slurp(a.path / "report.kv") == slurp(b.path / "report.kv"));
    CHECK(slurp(a.path / "report.kv") != slurp(c.path / "report.kv"));
}

TEST_CASE("unknown reproduce sections are rejected with the full list") {
    try {
        run_reproduce(1, "bogus");
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bogus") != std::string::npos);
        for (const auto& s : reproduce_sections()) CHECK(msg.find(s) != std::string::npos);
    }
}

TEST_CASE("the analytic state route matches the built-in counterexample") {
    const auto mix = parse_state(kv::parse(R"(
mixture = [
  {weight = 0.5, state = {sigma = [inf, 1, 1], correlations = [{pair = [1, 2], sigma_c = 0}]}},
  {weight = 0.5, state = {sigma = [inf, 1, 1], correlations = [{pair = [1, 3], sigma_c = 0}]}},
]
)"));
    const VarianceSet from_file = variances_with_limits(mix);
    const VarianceSet builtin = variances_with_limits(sqrt2_counterexample());
    CHECK(from_file.dx21 == doctest::Approx(builtin.dx21));
    CHECK(from_file.dpsum == doctest::Approx(builtin.dpsum));
    CHECK(evaluate(from_file).classification == Classification::fully_inseparable);
}

TEST_CASE("inflating the timing spreads removes the violations") {
    EnergyTimeInput in;
    in.dt21_ns = 0.37 * 100.0;
    in.dt32_ns = 0.162 * 100.0;
    in.dt31_ns = 0.31 * 100.0;
    in.domega_rad_ns = mhz_to_rad_ns(6.0);
    const WitnessReport r = evaluate_energy_time(in);
    CHECK_FALSE(r.any_sum_violation());
    CHECK(r.classification != Classification::genuine_tripartite);

    in.dt21_ns *= 2.0;
    in.dt32_ns *= 2.0;
    in.dt31_ns *= 2.0;
    CHECK(evaluate_energy_time(in).classification == Classification::no_witness);
}

TEST_CASE("two-photon run detects about 14000 coincidences per second") {
    RunConfig cfg = two_photon_config(3);
    cfg.duration_s = 0.5;
    const TwoPhotonRun run = run_two_photon_experiment(cfg);
    const double expected = 14000.0 * cfg.duration_s;
    CHECK(std::abs(static_cast<double>(run.coincidences) - expected) < 0.1 * expected);
    CHECK(run.dt01.std_ns == doctest::Approx(0.30).epsilon(0.05));
    CHECK(run.product < 0.01);
}
