#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "triplet/kv.hpp"
#include "triplet/pump_monitor.hpp"
#include "triplet/tag_engine.hpp"
#include "triplet/witness.hpp"

namespace triplet {

inline void append_witness_report(kv::Writer& w, const WitnessReport& r,
                                  const std::string& prefix = "witness") {
    auto key = [&](const std::string& k) { return prefix + "." + k; };
    w.put(key("input.dx21"), r.input.dx21);
    w.put(key("input.dx32"), r.input.dx32);
    w.put(key("input.dx31"), r.input.dx31);
    w.put(key("input.dpsum"), r.input.dpsum);
    w.put(key("input.domain"),
          r.input.domain == VarianceDomain::energy_time ? "energy-time" : "dimensionless");

    // each measured value carries its propagated error and, when the bound is
    // violated, the violation significance (bound - value) / error
    auto put_value = [&](const std::string& k, double value, double err, double bound) {
        w.put(key(k), value);
        if (err > 0.0) {
            w.put(key(k + ".err"), err);
            if (value < bound) w.put(key(k + ".sigma_violation"),
                                     WitnessReport::significance(value, bound, err));
        }
    };
    const char* names[3] = {"21", "32", "31"};
    for (int k = 0; k < 3; ++k)
        put_value(std::string("product.") + names[k], r.product_values[static_cast<std::size_t>(k)],
                  r.product_errors[static_cast<std::size_t>(k)], WitnessReport::product_bound);
    const char* sums[3] = {"21_31", "21_32", "32_31"};
    for (int k = 0; k < 3; ++k)
        put_value(std::string("sum.") + sums[k], r.sum_values[static_cast<std::size_t>(k)],
                  r.sum_errors[static_cast<std::size_t>(k)], WitnessReport::sum_bound);
    put_value("triple_sum", r.triple_sum_value, r.triple_sum_error,
              WitnessReport::triple_sum_bound);
    for (int k = 0; k < 3; ++k)
        w.put(key(std::string("additive.") + names[k]), r.additive_vlf_values[static_cast<std::size_t>(k)]);
    w.put(key("bound.product"), WitnessReport::product_bound);
    w.put(key("bound.sum"), WitnessReport::sum_bound);
    w.put(key("bound.triple_sum"), WitnessReport::triple_sum_bound);
    w.put(key("bound.additive"), WitnessReport::additive_bound);
    if (!r.provenance.empty()) w.put(key("provenance"), r.provenance);
    w.put(key("classification"), to_string(r.classification));
}

inline void append_timing_stats(kv::Writer& w, const TimingStats& s,
                                const std::string& prefix = "stats") {
    auto put_peak = [&](const std::string& name, const PeakStats& p) {
        w.put(prefix + "." + name + "_ns", p.std_ns);
        w.put(prefix + "." + name + "_err_ns", p.std_err_ns);
        w.put(prefix + "." + name + "_mean_ns", p.mean_ns);
        w.put(prefix + "." + name + "_background_per_bin", p.background_per_bin);
        w.put(prefix + "." + name + "_counts", static_cast<double>(p.counts_used));
    };
    put_peak("dt21", s.dt21);
    put_peak("dt32", s.dt32);
    put_peak("dt31", s.dt31);
    w.put(prefix + ".triples", static_cast<double>(s.triple_count));
}

inline void append_bandwidth_summary(kv::Writer& w, const BandwidthSeries& s,
                                     const std::string& prefix = "pump") {
    w.put(prefix + ".mean_mhz", s.mean_mhz);
    w.put(prefix + ".std_mhz", s.stddev_mhz);
    w.put(prefix + ".scans", static_cast<double>(s.samples.size()));
}

/// One comparison row of the reproduction report.
struct ReportRow {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    static ReportRow check(std::string name, double value, double expected, double tolerance) {
        ReportRow r;
        r.name = std::move(name);
        r.value = value;
        r.expected = expected;
        r.tolerance = tolerance;
        r.pass = std::abs(value - expected) <= tolerance;
        return r;
    }
};

inline void append_rows(kv::Writer& w, const std::vector<ReportRow>& rows,
                        const std::string& prefix = "row") {
    int idx = 0;
    int failures = 0;
    for (const auto& r : rows) {
        const std::string key = prefix + "." + std::to_string(++idx);
        w.put(key + ".name", r.name);
        w.put(key + ".value", r.value);
        w.put(key + ".expected", r.expected);
        w.put(key + ".tolerance", r.tolerance);
        w.put(key + ".pass", r.pass);
        if (!r.pass) ++failures;
    }
    w.put(prefix + "s.total", static_cast<double>(rows.size()));
    w.put(prefix + "s.failed", static_cast<double>(failures));
}

/// Columnar emitters for plot-ready histogram files.
inline void save_histogram1d(const Histogram1D& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << "# bin_center_ns count\n";
    for (std::int64_t b = h.lo; b <= h.hi(); ++b)
        out << kv::format_number(static_cast<double>(b) * kTickNs) << ' ' << h.count_at(b) << '\n';
}

inline void save_histogram2d(const Histogram2D& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << "# d21_ns d32_ns count\n";
    for (std::int64_t b1 = h.lo1; b1 <= h.hi1(); ++b1)
        for (std::int64_t b2 = h.lo2; b2 <= h.hi2(); ++b2) {
            const std::int64_t c = h.count_at(b1, b2);
            if (c == 0) continue;
            out << kv::format_number(static_cast<double>(b1) * kTickNs) << ' '
                << kv::format_number(static_cast<double>(b2) * kTickNs) << ' ' << c << '\n';
        }
}

inline void save_bandwidth_series(const BandwidthSeries& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << "# time_s bandwidth_mhz\n";
    for (const auto& b : s.samples)
        out << kv::format_number(b.timestamp_s) << ' ' << kv::format_number(b.bandwidth_mhz) << '\n';
}

inline void save_scans(const std::vector<FPScan>& scans, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    out << "# scan_index time_s offset_mhz intensity\n";
    for (std::size_t k = 0; k < scans.size(); ++k)
        for (std::size_t i = 0; i < scans[k].offset_mhz.size(); ++i)
            out << k << ' ' << kv::format_number(scans[k].timestamp_s) << ' '
                << kv::format_number(scans[k].offset_mhz[i]) << ' '
                << kv::format_number(scans[k].intensity[i]) << '\n';
}

}  // namespace triplet
