#pragma once

#include <cstdint>
#include <string>

#include "triplet/kv.hpp"
#include "triplet/pump_monitor.hpp"
#include "triplet/source_sim.hpp"
#include "triplet/tag_engine.hpp"

namespace triplet {

struct AnalysisConfig {
    std::uint64_t window_ticks = kDefaultWindowTicks;
    double sideband_reach_sigmas = 10.0;

    void validate() const {
        if (window_ticks == 0) throw std::invalid_argument("AnalysisConfig: window_ticks must be > 0");
        if (!(sideband_reach_sigmas > 1.0))
            throw std::invalid_argument("AnalysisConfig: sideband_reach_sigmas must be > 1");
    }

    PeakOptions peak_options() const {
        PeakOptions o;
        o.sideband_reach_sigmas = sideband_reach_sigmas;
        return o;
    }
};

/// Everything an end-to-end run needs. Defaults are the triple-source
/// calibration: 45 generated triples per minute, channel efficiencies chosen
/// so about 7 triples per hour survive detection, detector jitters sized to
/// the measured pairwise spreads, a gated third channel, and the drifting
/// 6 +- 2 MHz pump bandwidth sampled at five-minute intervals.
struct RunConfig {
    double duration_s = 3600.0;
    std::uint64_t seed = 1;
    SourceConfig source{};
    DetectorConfig detectors{};
    AnalysisConfig analysis{};
    PumpMonitorConfig pump{};

    static RunConfig defaults() {
        RunConfig cfg;
        cfg.detectors.channel[0] = {0.1037, 0.3173, 200.0, 0.0, 20.0};
        cfg.detectors.channel[1] = {0.10, 0.1459, 100.0, 0.0, 21.0};
        cfg.detectors.channel[2] = {0.25, 0.03, 0.0, 5e-5, 22.5};
        cfg.detectors.gate = GateConfig{2, 3, 50.0};
        return cfg;
    }

    void validate() const {
        if (!(duration_s > 0.0)) throw std::invalid_argument("RunConfig: duration_s must be > 0");
        source.validate();
        detectors.validate();
        analysis.validate();
        pump.validate();
    }
};

/// Apply a structured-text config on top of the defaults. Unknown keys are
/// rejected with the offending name; every field listed in the README is
/// overridable.
inline RunConfig load_run_config(const kv::Table& doc, RunConfig base = RunConfig::defaults()) {
    auto get = [&](const std::string& key, double& out) {
        if (auto it = doc.find(key); it != doc.end()) {
            if (!it->second.is_number()) throw std::runtime_error("config: " + key + " must be a number");
            out = it->second.number();
            return true;
        }
        return false;
    };

    static const char* known_keys[] = {
        "duration_s", "seed",
        "source.pair_rate_hz", "source.pump_center_rad_ns", "source.pump_bandwidth_mean_rad_ns",
        "source.pump_bandwidth_spread_rad_ns", "source.drift_timescale_s",
        "source.jsa_width_1_rad_ns", "source.jsa_width_2_rad_ns",
        "source.omega1_center_rad_ns", "source.omega2_center_rad_ns",
        "detector1.efficiency", "detector1.jitter_ns", "detector1.dark_rate_hz", "detector1.delay_ns",
        "detector2.efficiency", "detector2.jitter_ns", "detector2.dark_rate_hz", "detector2.delay_ns",
        "detector3.efficiency", "detector3.jitter_ns", "detector3.dark_rate_hz", "detector3.delay_ns",
        "detector1.dead_time_ns", "detector2.dead_time_ns", "detector3.dead_time_ns",
        "detector3.dark_per_gate_ns",
        "gate.enabled", "gate.trigger_channel", "gate.gated_channel", "gate.width_ns",
        "analysis.window_ticks", "analysis.sideband_reach_sigmas",
        "pump.duration_s", "pump.scan_interval_s", "pump.bandwidth_mean_mhz",
        "pump.bandwidth_spread_mhz", "pump.drift_timescale_s", "pump.instrument_width_mhz",
        "pump.noise_level",
    };
    for (const auto& [k, v] : doc) {
        bool ok = false;
        for (const char* known : known_keys)
            if (k == known) ok = true;
        if (!ok) throw std::runtime_error("config: unknown key '" + k + "'");
    }

    RunConfig cfg = base;
    get("duration_s", cfg.duration_s);
    if (auto it = doc.find("seed"); it != doc.end()) {
        const double d = it->second.number();
        if (d < 0 || d != std::floor(d)) throw std::runtime_error("config: seed must be a non-negative integer");
        cfg.seed = static_cast<std::uint64_t>(d);
    }

    get("source.pair_rate_hz", cfg.source.pair_rate_hz);
    get("source.pump_center_rad_ns", cfg.source.pump_center_rad_ns);
    get("source.pump_bandwidth_mean_rad_ns", cfg.source.pump_bandwidth_mean_rad_ns);
    get("source.pump_bandwidth_spread_rad_ns", cfg.source.pump_bandwidth_spread_rad_ns);
    get("source.drift_timescale_s", cfg.source.drift_timescale_s);
    get("source.jsa_width_1_rad_ns", cfg.source.jsa_width_1_rad_ns);
    get("source.jsa_width_2_rad_ns", cfg.source.jsa_width_2_rad_ns);
    get("source.omega1_center_rad_ns", cfg.source.omega1_center_rad_ns);
    get("source.omega2_center_rad_ns", cfg.source.omega2_center_rad_ns);

    for (int k = 0; k < 3; ++k) {
        const std::string p = "detector" + std::to_string(k + 1) + ".";
        auto& ch = cfg.detectors.channel[static_cast<std::size_t>(k)];
        get(p + "efficiency", ch.efficiency);
        get(p + "jitter_ns", ch.jitter_ns);
        get(p + "dark_rate_hz", ch.dark_rate_hz);
        get(p + "delay_ns", ch.delay_ns);
        get(p + "dead_time_ns", ch.dead_time_ns);
    }
    get("detector3.dark_per_gate_ns", cfg.detectors.channel[2].dark_per_gate_ns);

    if (auto it = doc.find("gate.enabled"); it != doc.end() && !it->second.boolean()) {
        cfg.detectors.gate.reset();
    } else if (cfg.detectors.gate) {
        double trig = cfg.detectors.gate->trigger_channel;
        double gated = cfg.detectors.gate->gated_channel;
        get("gate.trigger_channel", trig);
        get("gate.gated_channel", gated);
        get("gate.width_ns", cfg.detectors.gate->width_ns);
        cfg.detectors.gate->trigger_channel = static_cast<int>(trig);
        cfg.detectors.gate->gated_channel = static_cast<int>(gated);
    }

    double window = static_cast<double>(cfg.analysis.window_ticks);
    if (get("analysis.window_ticks", window)) {
        if (window <= 0 || window != std::floor(window))
            throw std::runtime_error("config: analysis.window_ticks must be a positive integer");
        cfg.analysis.window_ticks = static_cast<std::uint64_t>(window);
    }
    get("analysis.sideband_reach_sigmas", cfg.analysis.sideband_reach_sigmas);

    get("pump.duration_s", cfg.pump.duration_s);
    get("pump.scan_interval_s", cfg.pump.scan_interval_s);
    get("pump.bandwidth_mean_mhz", cfg.pump.bandwidth_mean_mhz);
    get("pump.bandwidth_spread_mhz", cfg.pump.bandwidth_spread_mhz);
    get("pump.drift_timescale_s", cfg.pump.drift_timescale_s);
    get("pump.instrument_width_mhz", cfg.pump.instrument_width_mhz);
    get("pump.noise_level", cfg.pump.noise_level);

    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config_file(const std::string& path,
                                      RunConfig base = RunConfig::defaults()) {
    return load_run_config(kv::parse_file(path), base);
}

}  // namespace triplet
