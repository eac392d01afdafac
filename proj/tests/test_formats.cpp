#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "triplet/kv.hpp"
#include "triplet/run_config.hpp"
#include "triplet/state_file.hpp"
#include "triplet/time_tags.hpp"

using namespace triplet;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tripletlab_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("kv round trips scalars, lists and tables") {
    const auto doc = kv::parse(R"(
# a comment
plain = 3.5
flag = true
name = "hello world"
widths = [1, 2.5, inf]
nested = [{pair = [1, 2], sigma_c = 0.25}]
spread = [
  1,
  2,
]
)");
    CHECK(doc.at("plain").number() == 3.5);
    CHECK(doc.at("flag").boolean());
    CHECK(doc.at("name").string() == "hello world");
    CHECK(doc.at("widths").list().size() == 3);
    CHECK(std::isinf(doc.at("widths").list()[2].number()));
    CHECK(doc.at("nested").list()[0].table().at("sigma_c").number() == 0.25);
    CHECK(doc.at("spread").list().size() == 2);

    kv::Writer w;
    w.put("widths", doc.at("widths"));
    w.put("nested", doc.at("nested"));
    const auto again = kv::parse(w.str());
    CHECK(std::isinf(again.at("widths").list()[2].number()));
    CHECK(again.at("nested").list()[0].table().at("pair").list()[1].number() == 2.0);
}

TEST_CASE("kv errors carry line numbers") {
    try {
        kv::parse("a = 1\nb = [1, 2\n");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    CHECK_THROWS_AS(kv::parse("a = what$ever"), std::runtime_error);
}

TEST_CASE("state files parse single states and mixtures") {
    const auto single = parse_state(kv::parse(R"(
sigma = [inf, 1, 1]
correlations = [{pair = [1, 2], sigma_c = 0}]
)"));
    CHECK(single.components.size() == 1);
    CHECK(std::isinf(single.components[0].state.sigma[0]));
    CHECK(single.components[0].state.correlations[0].sigma_c == 0.0);

    const auto mix = parse_state(kv::parse(R"(
mixture = [
  {weight = 0.5, state = {sigma = [inf, 1, 1], correlations = [{pair = [1, 2], sigma_c = 0}]}},
  {weight = 0.5, state = {sigma = [inf, 1, 1], correlations = [{pair = [1, 3], sigma_c = 0}],
                          mean = [0.5, 0, 0]}},
]
)"));
    CHECK(mix.components.size() == 2);
    CHECK(mix.components[1].mean[0] == 0.5);
    CHECK(mix.components[1].state.correlations[0].j == 3);
}

TEST_CASE("state file errors are specific") {
    CHECK_THROWS_AS(parse_state(kv::parse("sigma = [1, 2]")), std::runtime_error);
    CHECK_THROWS_AS(parse_state(kv::parse("sigma = [1, 1, 1]\ncorrelations = [{pair = [1, 2]}]")),
                    std::runtime_error);
    // weights off by more than the tolerance
    CHECK_THROWS_AS(parse_state(kv::parse(
                        "mixture = [{weight = 0.6, state = {sigma = [1, 1, 1]}}]")),
                    std::invalid_argument);
}

TEST_CASE("ttag files round trip bit-exactly") {
    TempDir dir;
    std::vector<TimeTag> tags{{0, 1}, {1000, 2}, {1000, 3}, {123456789012345ull, 1}};
    const std::string path = dir.file("tags.ttag");
    write_ttag_file(path, tags);

    CHECK(std::filesystem::file_size(path) == kTtagHeaderSize + tags.size() * kTtagRecordSize);
    const auto back = read_ttag_file(path);
    CHECK(back == tags);
}

TEST_CASE("ttag reader names the offset of malformed input") {
    TempDir dir;

    SUBCASE("bad magic") {
        const std::string path = dir.file("bad_magic.ttag");
        std::ofstream(path, std::ios::binary) << "NOPE" << std::string(16, '\0');
        try {
            read_ttag_file(path);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
        }
    }

    SUBCASE("truncated record") {
        const std::string path = dir.file("trunc.ttag");
        std::vector<TimeTag> tags{{10, 1}, {20, 2}};
        write_ttag_file(path, tags);
        std::filesystem::resize_file(path, kTtagHeaderSize + kTtagRecordSize + 4);
        try {
            read_ttag_file(path);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("truncated record") != std::string::npos);
            CHECK(std::string(e.what()).find(std::to_string(kTtagHeaderSize + kTtagRecordSize)) !=
                  std::string::npos);
        }
    }

    SUBCASE("bad version") {
        const std::string path = dir.file("ver.ttag");
        std::vector<TimeTag> tags{{10, 1}};
        write_ttag_file(path, tags);
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char v = 9;
        f.write(&v, 1);
        f.close();
        CHECK_THROWS_AS(read_ttag_file(path), std::runtime_error);
    }
}

TEST_CASE("run config applies overrides and rejects unknown keys") {
    const RunConfig cfg = load_run_config(kv::parse(R"(
duration_s = 120
seed = 77
source.pair_rate_hz = 10
detector2.efficiency = 0.5
gate.width_ns = 40
analysis.window_ticks = 64
pump.noise_level = 0.01
)"));
    CHECK(cfg.duration_s == 120.0);
    CHECK(cfg.seed == 77);
    CHECK(cfg.source.pair_rate_hz == 10.0);
    CHECK(cfg.detectors.channel[1].efficiency == 0.5);
    CHECK(cfg.detectors.gate->width_ns == 40.0);
    CHECK(cfg.analysis.window_ticks == 64);
    CHECK(cfg.pump.noise_level == 0.01);
    // untouched defaults survive
    CHECK(cfg.detectors.channel[2].dark_per_gate_ns == 5e-5);

    try {
        load_run_config(kv::parse("detector4.efficiency = 1"));
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("detector4.efficiency") != std::string::npos);
    }

    CHECK_THROWS_AS(load_run_config(kv::parse("duration_s = -5")), std::invalid_argument);
    CHECK_THROWS_AS(load_run_config(kv::parse("detector1.efficiency = 1.5")),
                    std::invalid_argument);
}

TEST_CASE("gate can be disabled from config") {
    const RunConfig cfg = load_run_config(kv::parse("gate.enabled = false"));
    CHECK(!cfg.detectors.gate.has_value());
}

TEST_CASE("dead time is a rejected stub and sideband reach is tunable") {
    try {
        load_run_config(kv::parse("detector2.dead_time_ns = 50"));
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("not modelled") != std::string::npos);
    }
    const RunConfig cfg = load_run_config(kv::parse("analysis.sideband_reach_sigmas = 8"));
    CHECK(cfg.analysis.peak_options().sideband_reach_sigmas == 8.0);
}
