#include "doctest.h"

#include <cmath>

#include "triplet/run_config.hpp"
#include "triplet/source_sim.hpp"

using namespace triplet;

TEST_CASE("energy is conserved exactly per emission") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 1000.0;
    const auto events = generate_triplets(cfg, 2.0, 99);
    REQUIRE(events.size() > 1000);
    double worst = 0.0;
    for (const auto& e : events) {
        const double sum = e.omega_rad_ns[0] + e.omega_rad_ns[1] + e.omega_rad_ns[2];
        worst = std::max(worst, std::abs(sum - e.omega_pump_rad_ns) / e.omega_pump_rad_ns);
    }
    CHECK(worst < 1e-9);

    SourceConfig pair_cfg;
    pair_cfg.pair_rate_hz = 1000.0;
    for (const auto& e : generate_pairs(pair_cfg, 1.0, 99)) {
        const double sum = e.omega_rad_ns[0] + e.omega_rad_ns[1];
        CHECK(std::abs(sum - e.omega_pump_rad_ns) / e.omega_pump_rad_ns < 1e-9);
    }
}

TEST_CASE("emission count is Poisson at the configured rate") {
    SourceConfig cfg;  // 0.75 per second
    const auto events = generate_triplets(cfg, 3600.0, 7);
    // mean 2700, sigma ~52; allow 5 sigma
    CHECK(std::abs(static_cast<double>(events.size()) - 2700.0) < 260.0);
}

TEST_CASE("with zero spread the pump frequency scatter equals the mean bandwidth") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 1e4;
    cfg.pump_bandwidth_spread_rad_ns = 0.0;
    const auto events = generate_triplets(cfg, 10.0, 3);
    REQUIRE(events.size() > 90000);
    double m = 0.0;
    for (const auto& e : events) m += e.omega_rad_ns[0] + e.omega_rad_ns[1] + e.omega_rad_ns[2];
    m /= static_cast<double>(events.size());
    double v = 0.0;
    for (const auto& e : events) {
        const double s = e.omega_rad_ns[0] + e.omega_rad_ns[1] + e.omega_rad_ns[2] - m;
        v += s * s;
    }
    const double std_omega_p = std::sqrt(v / static_cast<double>(events.size() - 1));
    CHECK(std_omega_p == doctest::Approx(cfg.pump_bandwidth_mean_rad_ns).epsilon(0.02));
}

TEST_CASE("pairs carry two photons and conserve energy") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 500.0;
    const auto events = generate_pairs(cfg, 1.0, 11);
    REQUIRE(!events.empty());
    for (const auto& e : events) {
        CHECK(e.n_photons == 2);
        CHECK(e.omega_rad_ns[2] == 0.0);
    }
}

TEST_CASE("ideal detection reproduces the fixed channel delays within one tick") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 200.0;
    const auto events = generate_triplets(cfg, 5.0, 21);

    DetectorConfig det;
    det.channel[0] = {1.0, 0.0, 0.0, 0.0, 20.0};
    det.channel[1] = {1.0, 0.0, 0.0, 0.0, 21.0};
    det.channel[2] = {1.0, 0.0, 0.0, 0.0, 22.5};
    const auto tags = detect(events, det, 5.0, 21);
    REQUIRE(tags.size() == 3 * events.size());

    // events are far apart, so tags group in threes
    const std::int64_t d21_ticks = static_cast<std::int64_t>(std::floor(1.0 / kTickNs));
    const std::int64_t d32_ticks = static_cast<std::int64_t>(std::floor(1.5 / kTickNs));
    for (std::size_t k = 0; k + 2 < tags.size(); k += 3) {
        CHECK(tags[k].channel == 1);
        CHECK(tags[k + 1].channel == 2);
        CHECK(tags[k + 2].channel == 3);
        const std::int64_t d21 = static_cast<std::int64_t>(tags[k + 1].tick - tags[k].tick);
        const std::int64_t d32 = static_cast<std::int64_t>(tags[k + 2].tick - tags[k + 1].tick);
        CHECK(std::abs(d21 - d21_ticks) <= 1);
        CHECK(std::abs(d32 - d32_ticks) <= 1);
    }
}

TEST_CASE("calibrated efficiencies keep about seven triples per hour") {
    RunConfig cfg = RunConfig::defaults();
    // darks off: this case is about the efficiency budget
    cfg.detectors.channel[0].dark_rate_hz = 0.0;
    cfg.detectors.channel[1].dark_rate_hz = 0.0;
    cfg.detectors.channel[2].dark_per_gate_ns = 0.0;
    const double duration = 72.6 * 3600.0;
    const auto events = generate_triplets(cfg.source, duration, 2024);
    const auto tags = detect(events, cfg.detectors, duration, 2024);

    std::size_t full = 0;
    // with darks off every channel-3 tag implies a gated (2,3) pair; count
    // events where all three survived by matching tag triples within 5 ns
    std::size_t i = 0;
    while (i + 2 < tags.size()) {
        if (tags[i].channel == 1 && tags[i + 1].channel == 2 && tags[i + 2].channel == 3 &&
            tags[i + 2].tick - tags[i].tick < 32) {
            ++full;
            i += 3;
        } else {
            ++i;
        }
    }
    const double per_hour = static_cast<double>(full) / 72.6;
    CHECK(per_hour > 7.0 * 0.7);
    CHECK(per_hour < 7.0 * 1.3);
}

TEST_CASE("jitter ratios surface in the pairwise spreads") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 500.0;
    const double duration = 40.0;
    const auto events = generate_triplets(cfg, duration, 5);

    const double j = 0.2;
    DetectorConfig det;
    det.channel[0] = {1.0, 2.0 * j, 0.0, 0.0, 20.0};
    det.channel[1] = {1.0, j, 0.0, 0.0, 21.0};
    det.channel[2] = {1.0, j, 0.0, 0.0, 22.5};
    const auto tags = detect(events, det, duration, 5);
    REQUIRE(tags.size() >= 3 * 10000);

    double s21 = 0.0, s32 = 0.0, m21 = 0.0, m32 = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k + 2 < tags.size(); k += 3) {
        const double d21 = (static_cast<double>(tags[k + 1].tick) - static_cast<double>(tags[k].tick)) * kTickNs;
        const double d32 = (static_cast<double>(tags[k + 2].tick) - static_cast<double>(tags[k + 1].tick)) * kTickNs;
        m21 += d21;
        m32 += d32;
        s21 += d21 * d21;
        s32 += d32 * d32;
        ++n;
    }
    m21 /= static_cast<double>(n);
    m32 /= static_cast<double>(n);
    const double q = kTickNs * kTickNs / 6.0;  // two floor quantizations
    const double var21 = s21 / static_cast<double>(n) - m21 * m21;
    const double var32 = s32 / static_cast<double>(n) - m32 * m32;

    // convolution oracle: var = j_a^2 + j_b^2 + quantization
    CHECK(std::sqrt(var21) == doctest::Approx(std::sqrt(5.0 * j * j + q)).epsilon(0.05));
    CHECK(std::sqrt(var32) == doctest::Approx(std::sqrt(2.0 * j * j + q)).epsilon(0.05));
    // the telecom-pair spread comes out roughly a factor of two smaller
    CHECK(std::sqrt(var32) / std::sqrt(var21) < 0.75);
}

TEST_CASE("gated channel never fires outside an open gate") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 2000.0;
    const double duration = 5.0;
    const auto events = generate_triplets(cfg, duration, 31);

    DetectorConfig det = RunConfig::defaults().detectors;
    det.channel[1].efficiency = 0.3;  // plenty of missing triggers
    det.channel[2].efficiency = 1.0;
    det.channel[2].dark_per_gate_ns = 1e-4;
    const auto tags = detect(events, det, duration, 31);

    std::vector<std::uint64_t> ch2;
    for (const auto& t : tags)
        if (t.channel == 2) ch2.push_back(t.tick);
    const std::uint64_t gate_ticks =
        static_cast<std::uint64_t>(std::ceil(det.gate->width_ns / kTickNs)) + 1;

    std::size_t n3 = 0;
    for (const auto& t : tags) {
        if (t.channel != 3) continue;
        ++n3;
        auto it = std::upper_bound(ch2.begin(), ch2.end(), t.tick);
        const bool gated_ok = it != ch2.begin() && t.tick - *(it - 1) <= gate_ticks;
        CHECK(gated_ok);
    }
    CHECK(n3 > 100);
}

TEST_CASE("seeded generation and detection replay bit-identically") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 300.0;
    const auto ev1 = generate_triplets(cfg, 3.0, 1234);
    const auto ev2 = generate_triplets(cfg, 3.0, 1234);
    REQUIRE(ev1.size() == ev2.size());
    for (std::size_t k = 0; k < ev1.size(); ++k) {
        CHECK(ev1[k].t_ps == ev2[k].t_ps);
        CHECK(ev1[k].omega_rad_ns == ev2[k].omega_rad_ns);
    }
    const DetectorConfig det = RunConfig::defaults().detectors;
    const auto t1 = detect(ev1, det, 3.0, 1234);
    const auto t2 = detect(ev2, det, 3.0, 1234);
    CHECK(t1 == t2);

    const auto t3 = detect(ev1, det, 3.0, 4321);
    CHECK(t1 != t3);
}

TEST_CASE("zero efficiency leaves only dark counts") {
    SourceConfig cfg;
    cfg.pair_rate_hz = 100.0;
    const auto events = generate_triplets(cfg, 2.0, 8);
    DetectorConfig det;
    det.channel[0] = {0.0, 0.0, 500.0, 0.0, 20.0};
    det.channel[1] = {0.0, 0.0, 500.0, 0.0, 21.0};
    det.channel[2] = {0.0, 0.0, 0.0, 0.0, 22.5};
    const auto tags = detect(events, det, 2.0, 8);
    CHECK(!tags.empty());
    for (const auto& t : tags) CHECK(t.channel != 3);
    CHECK(is_tick_sorted(tags));
}
