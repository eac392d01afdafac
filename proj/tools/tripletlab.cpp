// tripletlab: simulate a cascaded-SPDC triplet source through its detection
// chain, process time-tag streams into coincidence statistics, and evaluate
// the continuous-variable entanglement inequalities.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "triplet/report.hpp"
#include "triplet/reproduce.hpp"
#include "triplet/run_config.hpp"
#include "triplet/state_file.hpp"

namespace fs = std::filesystem;
using namespace triplet;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_config = true) {
    if (with_config)
        cmd->add_option("--config", opts.config_path, "structured-text run configuration");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "root random seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg = RunConfig::defaults();
    if (!opts.config_path.empty()) cfg = load_run_config_file(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

std::string out_file(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    return (fs::path(opts.out_dir) / name).string();
}

int cmd_simulate(const CommonOpts& opts) {
    const RunConfig cfg = resolve_config(opts);
    const auto events = generate_triplets(cfg.source, cfg.duration_s, cfg.seed);
    const auto tags = detect(events, cfg.detectors, cfg.duration_s, cfg.seed);
    write_ttag_file(out_file(opts, "tags.ttag"), tags);

    const PumpMonitorRun pump = run_pump_monitor(cfg.pump, cfg.seed);
    save_scans(pump.scans, out_file(opts, "scans.txt"));
    save_bandwidth_series(pump.series, out_file(opts, "bandwidth_series.txt"));

    kv::Writer summary;
    summary.put("seed", static_cast<double>(cfg.seed));
    summary.put("duration_s", cfg.duration_s);
    summary.put("emissions", static_cast<double>(events.size()));
    summary.put("tags", static_cast<double>(tags.size()));
    summary.put("expected_detected_triples",
                static_cast<double>(events.size()) * cfg.detectors.channel[0].efficiency *
                    cfg.detectors.channel[1].efficiency * cfg.detectors.channel[2].efficiency);
    append_bandwidth_summary(summary, pump.series);
    summary.save(out_file(opts, "run_summary.kv"));

    std::printf("wrote %zu tags and %zu pump scans to %s\n", tags.size(), pump.scans.size(),
                opts.out_dir.c_str());
    return 0;
}

int cmd_analyze(const CommonOpts& opts, const std::string& tags_path, std::uint64_t window,
                double sideband_reach, const std::vector<int>& doubles_channels) {
    RunConfig cfg = resolve_config(opts);
    if (window > 0) cfg.analysis.window_ticks = window;
    if (sideband_reach > 0) cfg.analysis.sideband_reach_sigmas = sideband_reach;
    cfg.analysis.validate();
    const PeakOptions peaks = cfg.analysis.peak_options();

    const auto tags = read_ttag_file(tags_path);

    kv::Writer stats_kv;
    stats_kv.put("source_file", tags_path);
    stats_kv.put("tags", static_cast<double>(tags.size()));
    stats_kv.put("window_ticks", static_cast<double>(cfg.analysis.window_ticks));

    if (!doubles_channels.empty()) {
        const int a = doubles_channels[0], b = doubles_channels[1];
        const auto pairs = find_doubles(tags, a, b, cfg.analysis.window_ticks);
        const std::string suffix = std::to_string(a) + std::to_string(b);
        stats_kv.put("doubles.channels", std::to_string(a) + "," + std::to_string(b));
        stats_kv.put("doubles.count", static_cast<double>(pairs.size()));
        if (!pairs.empty()) {
            const Histogram1D h = pair_histogram(pairs);
            save_histogram1d(h, out_file(opts, "doubles_dt" + suffix + ".txt"));
            const PeakStats p = peak_stats(h, peaks);
            stats_kv.put("doubles.dt_ns", p.std_ns);
            stats_kv.put("doubles.dt_err_ns", p.std_err_ns);
            stats_kv.put("doubles.background_per_bin", p.background_per_bin);
            std::printf("%zu doubles (%d,%d): dt = %.3f +- %.3f ns\n", pairs.size(), a, b,
                        p.std_ns, p.std_err_ns);
        } else {
            std::printf("no doubles between channels %d and %d\n", a, b);
        }
        stats_kv.save(out_file(opts, "stats.kv"));
        return 0;
    }

    const auto triples = find_triples(tags, cfg.analysis.window_ticks);
    if (triples.empty()) {
        stats_kv.put("stats.triples", 0.0);
        stats_kv.put("note", "no triple coincidences found");
        stats_kv.save(out_file(opts, "stats.kv"));
        std::printf("no triple coincidences in %zu tags; empty report written\n", tags.size());
        return 0;
    }

    const Histogram2D hist =
        histogram2d(triples, static_cast<std::int64_t>(cfg.analysis.window_ticks));
    save_histogram2d(hist, out_file(opts, "hist2d.txt"));
    const Marginals m = marginals(hist);
    save_histogram1d(m.d21, out_file(opts, "marginal_dt21.txt"));
    save_histogram1d(m.d32, out_file(opts, "marginal_dt32.txt"));
    save_histogram1d(m.d31, out_file(opts, "marginal_dt31.txt"));

    const TimingStats stats = timing_stats(hist, peaks);
    append_timing_stats(stats_kv, stats);
    stats_kv.save(out_file(opts, "stats.kv"));

    std::printf(
        "%zu triples: dt21 = %.3f +- %.3f ns, dt32 = %.3f +- %.3f ns, dt31 = %.3f +- %.3f ns\n",
        triples.size(), stats.dt21.std_ns, stats.dt21.std_err_ns, stats.dt32.std_ns,
        stats.dt32.std_err_ns, stats.dt31.std_ns, stats.dt31.std_err_ns);
    return 0;
}

int cmd_witness(const CommonOpts& opts, const std::string& stats_path,
                const std::string& pump_path, double domega_mhz) {
    const kv::Table stats = kv::parse_file(stats_path);
    EnergyTimeInput in;
    in.dt21_ns = stats.at("stats.dt21_ns").number();
    in.dt32_ns = stats.at("stats.dt32_ns").number();
    in.dt31_ns = stats.at("stats.dt31_ns").number();
    in.dt21_err_ns = stats.at("stats.dt21_err_ns").number();
    in.dt32_err_ns = stats.at("stats.dt32_err_ns").number();
    in.dt31_err_ns = stats.at("stats.dt31_err_ns").number();
    in.provenance = "measured";

    if (domega_mhz > 0.0) {
        in.domega_rad_ns = mhz_to_rad_ns(domega_mhz);
    } else {
        const kv::Table pump = kv::parse_file(pump_path);
        in.domega_rad_ns = mhz_to_rad_ns(pump.at("pump.mean_mhz").number());
        in.domega_err_rad_ns = mhz_to_rad_ns(pump.at("pump.std_mhz").number());
    }

    const WitnessReport r = evaluate_energy_time(in);
    kv::Writer w;
    append_witness_report(w, r);
    w.save(out_file(opts, "witness.kv"));

    std::printf("time-bandwidth sums: %.4f %.4f %.4f, triple %.4f -> %s\n", r.sum_values[0],
                r.sum_values[1], r.sum_values[2], r.triple_sum_value, to_string(r.classification));
    return 0;
}

int cmd_gaussian(const CommonOpts& opts, const std::string& state_path) {
    const GaussianMixture mix = load_state_file(state_path);
    const VarianceSet v = variances_with_limits(mix);
    const WitnessReport r = evaluate(v);

    kv::Writer w;
    w.put("state_file", state_path);
    append_witness_report(w, r);
    w.save(out_file(opts, "gaussian_witness.kv"));

    std::printf("dx21 = %.6g, dx32 = %.6g, dx31 = %.6g, dpsum = %.6g -> %s\n", v.dx21, v.dx32,
                v.dx31, v.dpsum, to_string(r.classification));
    return 0;
}

int cmd_pump(const CommonOpts& opts) {
    const RunConfig cfg = resolve_config(opts);
    const PumpMonitorRun run = run_pump_monitor(cfg.pump, cfg.seed);
    save_scans(run.scans, out_file(opts, "scans.txt"));
    save_bandwidth_series(run.series, out_file(opts, "bandwidth_series.txt"));
    kv::Writer w;
    append_bandwidth_summary(w, run.series);
    w.save(out_file(opts, "pump_summary.kv"));
    std::printf("%zu scans: bandwidth %.3f +- %.3f MHz\n", run.series.samples.size(),
                run.series.mean_mhz, run.series.stddev_mhz);
    return 0;
}

int cmd_reproduce(const CommonOpts& opts, const std::string& section) {
    const std::uint64_t seed = opts.seed_set ? opts.seed : kDefaultSeed;
    const ReproduceResult res = run_reproduce(seed, section, opts.out_dir);
    for (const auto& r : res.rows)
        std::printf("%-52s %12.6g  expected %10.6g +- %-9.6g %s\n", r.name.c_str(), r.value,
                    r.expected, r.tolerance, r.pass ? "PASS" : "FAIL");
    std::printf("%zu rows, %s; report written to %s\n", res.rows.size(),
                res.all_pass ? "all passed" : "FAILURES PRESENT", opts.out_dir.c_str());
    return res.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-photon energy-time entanglement laboratory"};
    app.require_subcommand(1);

    CommonOpts sim_opts, ana_opts, wit_opts, gau_opts, pump_opts, rep_opts;

    auto* sim = app.add_subcommand("simulate", "generate a time-tag stream and pump scan series");
    add_common(sim, sim_opts);

    auto* ana = app.add_subcommand("analyze", "extract coincidences and timing statistics");
    std::string tags_path;
    std::uint64_t window = 0;
    double sideband_reach = 0.0;
    std::vector<int> doubles_channels;
    ana->add_option("--tags", tags_path, "TTAG input file")->required();
    ana->add_option("--window", window, "coincidence window in ticks");
    ana->add_option("--sideband-reach", sideband_reach,
                    "background sidebands start this many initial sigmas from the peak");
    ana->add_option("--doubles", doubles_channels,
                    "analyze two-fold coincidences between this channel pair instead")
        ->expected(2);
    add_common(ana, ana_opts);

    auto* wit = app.add_subcommand("witness", "evaluate the inequalities on measured statistics");
    std::string stats_path, pump_path;
    double domega_mhz = 0.0;
    wit->add_option("--stats", stats_path, "stats.kv from analyze")->required();
    wit->add_option("--pump", pump_path, "pump_summary.kv from pump");
    wit->add_option("--domega-mhz", domega_mhz, "total-frequency spread in MHz (overrides --pump)");
    add_common(wit, wit_opts, false);

    auto* gau = app.add_subcommand("gaussian", "analytic witness of a Gaussian state file");
    std::string state_path;
    gau->add_option("--state", state_path, "state specification file")->required();
    add_common(gau, gau_opts, false);

    auto* pum = app.add_subcommand("pump", "simulate the scanning interferometer series");
    add_common(pum, pump_opts);

    auto* rep = app.add_subcommand("reproduce", "one-command consolidated reproduction");
    std::string section;
    rep->add_option("--section", section, "run a single section");
    add_common(rep, rep_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts);
        if (ana->parsed())
            return cmd_analyze(ana_opts, tags_path, window, sideband_reach, doubles_channels);
        if (wit->parsed()) {
            if (pump_path.empty() && domega_mhz <= 0.0)
                throw std::runtime_error("witness: provide --pump or --domega-mhz");
            return cmd_witness(wit_opts, stats_path, pump_path, domega_mhz);
        }
        if (gau->parsed()) return cmd_gaussian(gau_opts, state_path);
        if (pum->parsed()) return cmd_pump(pump_opts);
        if (rep->parsed()) return cmd_reproduce(rep_opts, section);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
