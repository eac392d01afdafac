#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "triplet/rng.hpp"
#include "triplet/time_tags.hpp"

namespace triplet {

// Cascaded-SPDC source model. A pump photon at omega_p splits into omega_1
// and an intermediate photon, which splits again into omega_2 and omega_3;
// energy conservation fixes omega_3 = omega_p - omega_1 - omega_2 exactly.
// Joint spectral amplitudes are modelled as Gaussians around the nominal
// daughter frequencies: only energy conservation and timing feed the
// downstream inequalities.

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kSpeedOfLightNmPerNs = 2.99792458e8;

inline double omega_from_wavelength_nm(double lambda_nm) {
    return kTwoPi * kSpeedOfLightNmPerNs / lambda_nm;
}

/// Repo-wide bandwidth convention: "bandwidth" quotes the standard deviation
/// of the optical frequency nu in MHz; angular spreads are 2 pi times that.
inline double mhz_to_rad_ns(double mhz) { return kTwoPi * mhz * 1e-3; }
inline double rad_ns_to_mhz(double rad_ns) { return rad_ns / kTwoPi * 1e3; }

struct SourceConfig {
    double pump_center_rad_ns = omega_from_wavelength_nm(404.0);
    double pump_bandwidth_mean_rad_ns = mhz_to_rad_ns(6.0);
    double pump_bandwidth_spread_rad_ns = mhz_to_rad_ns(2.0);
    double drift_timescale_s = 1800.0;
    double pair_rate_hz = 0.75;  // generated triples per second (45 per minute)
    double jsa_width_1_rad_ns = kTwoPi * 1000.0;  // ~1 THz phase-matching scale
    double jsa_width_2_rad_ns = kTwoPi * 1000.0;
    double omega1_center_rad_ns = omega_from_wavelength_nm(842.0);
    double omega2_center_rad_ns = omega_from_wavelength_nm(1530.0);

    void validate() const {
        auto pos = [](double v, const char* name) {
            if (!(v > 0.0) || std::isinf(v) || std::isnan(v))
                throw std::invalid_argument(std::string("SourceConfig: ") + name +
                                            " must be positive and finite");
        };
        pos(pump_center_rad_ns, "pump_center_rad_ns");
        pos(pump_bandwidth_mean_rad_ns, "pump_bandwidth_mean_rad_ns");
        pos(drift_timescale_s, "drift_timescale_s");
        pos(pair_rate_hz, "pair_rate_hz");
        pos(jsa_width_1_rad_ns, "jsa_width_1_rad_ns");
        pos(jsa_width_2_rad_ns, "jsa_width_2_rad_ns");
        pos(omega1_center_rad_ns, "omega1_center_rad_ns");
        pos(omega2_center_rad_ns, "omega2_center_rad_ns");
        if (pump_bandwidth_spread_rad_ns < 0.0)
            throw std::invalid_argument("SourceConfig: pump_bandwidth_spread_rad_ns must be >= 0");
    }
};

/// One emission event: time in integer picoseconds plus the photon
/// frequencies. n_photons is 3 for triples, 2 for the two-photon experiment;
/// photon k lands on detector channel k+1.
struct Emission {
    std::uint64_t t_ps = 0;
    std::array<double, 3> omega_rad_ns{};
    double omega_pump_rad_ns = 0.0;
    int n_photons = 3;
};

namespace detail {

inline std::uint64_t seconds_to_ps(double s) {
    return static_cast<std::uint64_t>(std::llround(s * 1e12));
}

}  // namespace detail

/// Poisson emission stream with a slowly drifting pump bandwidth; each event
/// draws omega_p from the instantaneous bandwidth and splits it with exact
/// energy conservation.
inline std::vector<Emission> generate_triplets(const SourceConfig& cfg, double duration_s,
                                               std::uint64_t root_seed) {
    cfg.validate();
    if (!(duration_s > 0.0)) throw std::invalid_argument("generate_triplets: duration must be > 0");

    RandomStream times(root_seed, "source.times");
    RandomStream freqs(root_seed, "source.freqs");
    RandomStream drift_rng(root_seed, "source.drift");

    MeanRevertingDrift drift{cfg.pump_bandwidth_mean_rad_ns, cfg.pump_bandwidth_spread_rad_ns,
                             cfg.drift_timescale_s, 0.1 * cfg.pump_bandwidth_mean_rad_ns};
    drift.reset(drift_rng);

    std::vector<Emission> events;
    events.reserve(static_cast<std::size_t>(cfg.pair_rate_hz * duration_s * 1.1) + 16);

    const std::uint64_t end_ps = detail::seconds_to_ps(duration_s);
    double t_s = 0.0;
    while (true) {
        const double gap_s = times.exponential(cfg.pair_rate_hz);
        t_s += gap_s;
        const std::uint64_t t_ps = detail::seconds_to_ps(t_s);
        if (t_ps >= end_ps) break;

        const double bw = drift.step(gap_s, drift_rng);
        const double omega_p = freqs.normal(cfg.pump_center_rad_ns, bw);
        const double omega_1 = freqs.normal(cfg.omega1_center_rad_ns, cfg.jsa_width_1_rad_ns);
        const double omega_2 = freqs.normal(cfg.omega2_center_rad_ns, cfg.jsa_width_2_rad_ns);

        Emission e;
        e.t_ps = t_ps;
        e.omega_rad_ns = {omega_1, omega_2, omega_p - omega_1 - omega_2};
        e.omega_pump_rad_ns = omega_p;
        e.n_photons = 3;
        events.push_back(e);
    }
    return events;
}

/// First-stage-only variant for the two-photon experiment: photon 1 at
/// omega_0, photon 2 carries the remainder of the pump energy.
inline std::vector<Emission> generate_pairs(const SourceConfig& cfg, double duration_s,
                                            std::uint64_t root_seed) {
    cfg.validate();
    if (!(duration_s > 0.0)) throw std::invalid_argument("generate_pairs: duration must be > 0");

    RandomStream times(root_seed, "source.times");
    RandomStream freqs(root_seed, "source.freqs");
    RandomStream drift_rng(root_seed, "source.drift");

    MeanRevertingDrift drift{cfg.pump_bandwidth_mean_rad_ns, cfg.pump_bandwidth_spread_rad_ns,
                             cfg.drift_timescale_s, 0.1 * cfg.pump_bandwidth_mean_rad_ns};
    drift.reset(drift_rng);

    std::vector<Emission> events;
    const std::uint64_t end_ps = detail::seconds_to_ps(duration_s);
    double t_s = 0.0;
    while (true) {
        const double gap_s = times.exponential(cfg.pair_rate_hz);
        t_s += gap_s;
        const std::uint64_t t_ps = detail::seconds_to_ps(t_s);
        if (t_ps >= end_ps) break;
        const double bw = drift.step(gap_s, drift_rng);
        const double omega_p = freqs.normal(cfg.pump_center_rad_ns, bw);
        const double omega_0 = freqs.normal(cfg.omega1_center_rad_ns, cfg.jsa_width_1_rad_ns);
        Emission e;
        e.t_ps = t_ps;
        e.omega_rad_ns = {omega_0, omega_p - omega_0, 0.0};
        e.omega_pump_rad_ns = omega_p;
        e.n_photons = 2;
        events.push_back(e);
    }
    return events;
}

struct GateConfig {
    int trigger_channel = 2;
    int gated_channel = 3;
    double width_ns = 50.0;
};

struct DetectorChannel {
    double efficiency = 1.0;
    double jitter_ns = 0.0;
    double dark_rate_hz = 0.0;       // free-running channels
    double dark_per_gate_ns = 0.0;   // gated channel, counts per ns of open gate
    double delay_ns = 0.0;           // fixed propagation offset
    double dead_time_ns = 0.0;       // config stub: dead time is not modelled,
                                     // rates here sit far below saturation
};

struct DetectorConfig {
    std::array<DetectorChannel, 3> channel{};
    std::optional<GateConfig> gate;

    void validate() const {
        for (int k = 0; k < 3; ++k) {
            const auto& c = channel[k];
            if (c.efficiency < 0.0 || c.efficiency > 1.0)
                throw std::invalid_argument("DetectorConfig: channel " + std::to_string(k + 1) +
                                            " efficiency must be in [0, 1]");
            if (c.jitter_ns < 0.0 || c.dark_rate_hz < 0.0 || c.dark_per_gate_ns < 0.0)
                throw std::invalid_argument("DetectorConfig: channel " + std::to_string(k + 1) +
                                            " jitter and dark rates must be >= 0");
            if (c.dead_time_ns != 0.0)
                throw std::invalid_argument("DetectorConfig: channel " + std::to_string(k + 1) +
                                            " dead_time_ns is accepted for forward compatibility "
                                            "but dead time is not modelled; set it to 0");
        }
        if (gate) {
            if (gate->trigger_channel < 1 || gate->trigger_channel > 3 ||
                gate->gated_channel < 1 || gate->gated_channel > 3 ||
                gate->trigger_channel == gate->gated_channel)
                throw std::invalid_argument("DetectorConfig: gate channels must be distinct and in 1..3");
            if (!(gate->width_ns > 0.0))
                throw std::invalid_argument("DetectorConfig: gate width must be > 0");
        }
    }
};

namespace detail {

/// Arrival time in ps: emission + fixed delay + Gaussian jitter, clamped at 0.
inline std::uint64_t arrival_ps(std::uint64_t emit_ps, double delay_ns, double jitter_ns,
                                RandomStream& rng) {
    const double delta_ps = delay_ns * 1000.0 + rng.normal() * jitter_ns * 1000.0;
    const std::int64_t d = std::llround(delta_ps);
    if (d < 0 && static_cast<std::uint64_t>(-d) > emit_ps) return 0;
    return emit_ps + d;
}

/// Uniform-rate event stream over [0, end_ps) via exponential gaps.
inline void append_poisson_stream(std::vector<std::uint64_t>& out, double rate_hz,
                                  std::uint64_t end_ps, RandomStream& rng) {
    if (rate_hz <= 0.0) return;
    const double rate_per_ps = rate_hz * 1e-12;
    double t = 0.0;
    while (true) {
        t += rng.exponential(rate_per_ps);
        if (t >= static_cast<double>(end_ps)) break;
        out.push_back(static_cast<std::uint64_t>(t));
    }
}

struct Interval {
    std::uint64_t lo, hi;
};

inline std::vector<Interval> merge_gates(std::vector<std::uint64_t> triggers,
                                         std::uint64_t width_ps) {
    std::sort(triggers.begin(), triggers.end());
    std::vector<Interval> gates;
    for (std::uint64_t t : triggers) {
        const std::uint64_t hi = t + width_ps;
        if (!gates.empty() && t <= gates.back().hi)
            gates.back().hi = std::max(gates.back().hi, hi);
        else
            gates.push_back({t, hi});
    }
    return gates;
}

inline bool in_gates(const std::vector<Interval>& gates, std::uint64_t t) {
    auto it = std::upper_bound(gates.begin(), gates.end(), t,
                               [](std::uint64_t v, const Interval& g) { return v < g.lo; });
    if (it == gates.begin()) return false;
    --it;
    return t >= it->lo && t <= it->hi;
}

}  // namespace detail

/// Push emissions through the detection chain: per-photon Bernoulli survival,
/// delay plus Gaussian jitter, dark counts, gate logic on the gated channel,
/// then floor quantization to ticks and a (tick, channel) sort.
inline std::vector<TimeTag> detect(std::span<const Emission> events, const DetectorConfig& det,
                                   double duration_s, std::uint64_t root_seed) {
    det.validate();
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].t_ps < events[i - 1].t_ps)
            throw std::invalid_argument("detect: emission stream must be time sorted");

    const std::uint64_t end_ps =
        detail::seconds_to_ps(duration_s) + detail::seconds_to_ps(1e-6);  // room for delays

    RandomStream survive(root_seed, "detect.survival");
    RandomStream jitter(root_seed, "detect.jitter");

    // photon arrivals per channel
    std::array<std::vector<std::uint64_t>, 3> arrivals;
    for (const Emission& e : events) {
        for (int k = 0; k < e.n_photons; ++k) {
            const auto& ch = det.channel[k];
            if (!survive.bernoulli(ch.efficiency)) continue;
            arrivals[k].push_back(detail::arrival_ps(e.t_ps, ch.delay_ns, ch.jitter_ns, jitter));
        }
    }

    // free-running dark counts
    for (int k = 0; k < 3; ++k) {
        const bool gated = det.gate && det.gate->gated_channel == k + 1;
        if (gated) continue;
        RandomStream darks(root_seed, "detect.darks", static_cast<std::uint64_t>(k));
        detail::append_poisson_stream(arrivals[k], det.channel[k].dark_rate_hz, end_ps, darks);
    }

    // gate logic: the gated channel keeps photons only inside open gates and
    // collects darks only over the union of open gate time
    if (det.gate) {
        const int g = det.gate->gated_channel - 1;
        const int trig = det.gate->trigger_channel - 1;
        const std::uint64_t width_ps =
            static_cast<std::uint64_t>(std::llround(det.gate->width_ns * 1000.0));
        const std::vector<detail::Interval> gates = detail::merge_gates(arrivals[trig], width_ps);

        std::vector<std::uint64_t> kept;
        kept.reserve(arrivals[g].size());
        for (std::uint64_t t : arrivals[g])
            if (detail::in_gates(gates, t)) kept.push_back(t);

        if (det.channel[g].dark_per_gate_ns > 0.0 && !gates.empty()) {
            RandomStream darks(root_seed, "detect.darks", static_cast<std::uint64_t>(g));
            const double rate_per_ps = det.channel[g].dark_per_gate_ns * 1e-3;
            double open_ps = 0.0;
            for (const auto& gv : gates) open_ps += static_cast<double>(gv.hi - gv.lo);
            // walk the open-time coordinate with exponential gaps, then map
            // each offset back into absolute time
            double pos = 0.0;
            std::size_t gi = 0;
            double consumed = 0.0;
            while (true) {
                pos += darks.exponential(rate_per_ps);
                if (pos >= open_ps) break;
                while (gi < gates.size() &&
                       consumed + static_cast<double>(gates[gi].hi - gates[gi].lo) < pos) {
                    consumed += static_cast<double>(gates[gi].hi - gates[gi].lo);
                    ++gi;
                }
                if (gi >= gates.size()) break;
                kept.push_back(gates[gi].lo + static_cast<std::uint64_t>(pos - consumed));
            }
        }
        arrivals[g] = std::move(kept);
    }

    std::vector<TimeTag> tags;
    tags.reserve(arrivals[0].size() + arrivals[1].size() + arrivals[2].size());
    for (int k = 0; k < 3; ++k)
        for (std::uint64_t t : arrivals[k])
            tags.push_back({t / kTickPs, static_cast<std::uint8_t>(k + 1)});
    std::sort(tags.begin(), tags.end(), tag_less);
    return tags;
}

}  // namespace triplet
