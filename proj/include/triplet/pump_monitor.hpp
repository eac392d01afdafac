#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "triplet/mat3.hpp"
#include "triplet/rng.hpp"

namespace triplet {

/// One Fabry-Perot transmission scan across the pump line: frequency offsets
/// in MHz over one free spectral range and the transmitted intensity.
struct FPScan {
    std::vector<double> offset_mhz;
    std::vector<double> intensity;
    double timestamp_s = 0.0;

    void validate() const {
        if (offset_mhz.size() != intensity.size() || offset_mhz.size() < 100)
            throw std::invalid_argument("FPScan: need >= 100 matched samples");
        for (double v : intensity)
            if (v < 0.0) throw std::invalid_argument("FPScan: intensities must be non-negative");
    }
};

struct ScanGrid {
    double half_range_mhz = 50.0;
    int points = 251;
};

namespace detail {

/// Gaussian line (std sigma) convolved with a Lorentzian instrument response
/// (HWHM gamma), evaluated by quadrature on a truncated kernel. Both the scan
/// simulator and the fit share this forward model.
class LineModel {
  public:
    LineModel(double gamma_mhz, double step_mhz) : gamma_(gamma_mhz), step_(step_mhz) {
        if (gamma_ > 0.05 * step_) {
            const double reach = std::max(25.0 * gamma_, 4.0 * step_);
            const int half = static_cast<int>(std::ceil(reach / step_));
            kernel_.resize(2 * half + 1);
            offsets_.resize(kernel_.size());
            double sum = 0.0;
            for (int k = -half; k <= half; ++k) {
                const double u = k * step_;
                const double w = gamma_ / (gamma_ * gamma_ + u * u);
                kernel_[k + half] = w;
                offsets_[k + half] = u;
                sum += w;
            }
            for (double& w : kernel_) w /= sum;
        }
    }

    double operator()(double x, double sigma) const {
        if (kernel_.empty()) return gauss(x, sigma);
        double v = 0.0;
        for (std::size_t k = 0; k < kernel_.size(); ++k) v += kernel_[k] * gauss(x - offsets_[k], sigma);
        return v;
    }

  private:
    static double gauss(double x, double sigma) {
        const double z = x / sigma;
        return std::exp(-0.5 * z * z);
    }

    double gamma_, step_;
    std::vector<double> kernel_;
    std::vector<double> offsets_;
};

}  // namespace detail

/// Forward model of one scan: convolved line of unit peak height, small random
/// center offset, multiplicative noise.
inline FPScan simulate_scan(double true_bandwidth_mhz, double instrument_width_mhz,
                            double noise_level, std::uint64_t seed,
                            const ScanGrid& grid = {}) {
    if (!(true_bandwidth_mhz > 0.0) || instrument_width_mhz < 0.0)
        throw std::invalid_argument("simulate_scan: widths must be positive");
    if (grid.points < 100) throw std::invalid_argument("simulate_scan: need >= 100 grid points");

    RandomStream rng(seed, "pump.scan");
    const double step = 2.0 * grid.half_range_mhz / (grid.points - 1);
    const detail::LineModel model(instrument_width_mhz, step);
    const double center = rng.uniform(-2.0, 2.0);

    FPScan scan;
    scan.offset_mhz.resize(static_cast<std::size_t>(grid.points));
    scan.intensity.resize(static_cast<std::size_t>(grid.points));
    for (int i = 0; i < grid.points; ++i) {
        const double f = -grid.half_range_mhz + i * step;
        scan.offset_mhz[static_cast<std::size_t>(i)] = f;
        const double clean = model(f - center, true_bandwidth_mhz);
        const double noisy = clean * (1.0 + noise_level * rng.normal());
        scan.intensity[static_cast<std::size_t>(i)] = std::max(noisy, 0.0);
    }
    return scan;
}

struct BandwidthFit {
    double bandwidth_mhz = 0.0;  // deconvolved Gaussian std of the source line
    double center_mhz = 0.0;
    double amplitude = 0.0;
    double residual_rms = 0.0;
};

/// Least-squares fit of the convolved line shape (Levenberg-Marquardt over
/// amplitude, center and Gaussian width; the Lorentzian instrument width is
/// held at its known value). Throws when no dominant peak exists or the fit
/// fails to settle.
inline BandwidthFit estimate_bandwidth(const FPScan& scan, double instrument_width_mhz) {
    scan.validate();
    const std::size_t n = scan.offset_mhz.size();

    // baseline and noise from the scan edges, where the line has decayed
    const std::size_t edge = std::max<std::size_t>(n / 10, 5);
    double base_sum = 0.0, base_sq = 0.0;
    for (std::size_t i = 0; i < edge; ++i) {
        base_sum += scan.intensity[i] + scan.intensity[n - 1 - i];
        base_sq += scan.intensity[i] * scan.intensity[i] +
                   scan.intensity[n - 1 - i] * scan.intensity[n - 1 - i];
    }
    const double baseline = base_sum / static_cast<double>(2 * edge);
    const double noise = std::sqrt(
        std::max(base_sq / static_cast<double>(2 * edge) - baseline * baseline, 0.0));

    std::size_t imax = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (scan.intensity[i] > scan.intensity[imax]) imax = i;
    const double peak = scan.intensity[imax] - baseline;
    if (peak <= 0.0 || peak < 8.0 * std::max(noise, 1e-9 * scan.intensity[imax]))
        throw std::runtime_error("estimate_bandwidth: no dominant peak in scan");

    const double step = scan.offset_mhz[1] - scan.offset_mhz[0];
    const detail::LineModel model(instrument_width_mhz, std::abs(step));

    // initial guesses from the half-maximum width
    std::size_t left = imax, right = imax;
    const double half = baseline + 0.5 * peak;
    while (left > 0 && scan.intensity[left - 1] >= half) --left;
    while (right + 1 < n && scan.intensity[right + 1] >= half) ++right;
    double sigma = std::max((static_cast<double>(right - left) + 1.0) * std::abs(step) / 2.3548, 0.3);
    double amp = peak;
    double center = scan.offset_mhz[imax];

    auto cost_of = [&](double a, double c, double s, std::vector<double>* resid) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = scan.intensity[i] - a * model(scan.offset_mhz[i] - c, s);
            if (resid) (*resid)[i] = r;
            sse += r * r;
        }
        return sse;
    };

    double lambda = 1e-3;
    double cost = cost_of(amp, center, sigma, nullptr);
    bool converged = false;
    std::vector<double> r0(n);
    for (int iter = 0; iter < 120 && !converged; ++iter) {
        cost_of(amp, center, sigma, &r0);
        const double da = std::max(1e-6, 1e-6 * std::abs(amp));
        const double dc = 1e-4;
        const double ds = std::max(1e-6, 1e-5 * sigma);

        std::vector<double> ja(n), jc(n), js(n);
        std::vector<double> tmp(n);
        cost_of(amp + da, center, sigma, &tmp);
        for (std::size_t i = 0; i < n; ++i) ja[i] = (r0[i] - tmp[i]) / da;
        cost_of(amp, center + dc, sigma, &tmp);
        for (std::size_t i = 0; i < n; ++i) jc[i] = (r0[i] - tmp[i]) / dc;
        cost_of(amp, center, sigma + ds, &tmp);
        for (std::size_t i = 0; i < n; ++i) js[i] = (r0[i] - tmp[i]) / ds;

        Mat3 jtj;
        Vec3 jtr{};
        const std::vector<double>* cols[3] = {&ja, &jc, &js};
        for (int p = 0; p < 3; ++p) {
            for (int q = p; q < 3; ++q) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += (*cols[p])[i] * (*cols[q])[i];
                jtj(p, q) = s;
                jtj(q, p) = s;
            }
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (*cols[p])[i] * r0[i];
            jtr[p] = s;
        }

        bool stepped = false;
        for (int tries = 0; tries < 12 && !stepped; ++tries) {
            Mat3 damped = jtj;
            for (int p = 0; p < 3; ++p) damped(p, p) *= 1.0 + lambda;
            Vec3 delta;
            try {
                delta = damped.solve(jtr);
            } catch (const std::runtime_error&) {
                lambda *= 10.0;
                continue;
            }
            const double na = amp + delta[0];
            const double nc = center + delta[1];
            const double ns = std::max(sigma + delta[2], 0.05);
            const double ncost = cost_of(na, nc, ns, nullptr);
            if (ncost < cost) {
                if (cost - ncost < 1e-12 * (cost + 1e-300)) converged = true;
                amp = na;
                center = nc;
                sigma = ns;
                cost = ncost;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) converged = true;  // no further descent possible
    }
    if (!(cost < std::numeric_limits<double>::infinity()) || sigma <= 0.05)
        throw std::runtime_error("estimate_bandwidth: fit did not converge");

    BandwidthFit out;
    out.bandwidth_mhz = sigma;
    out.center_mhz = center;
    out.amplitude = amp;
    out.residual_rms = std::sqrt(cost / static_cast<double>(n));
    return out;
}

struct BandwidthSample {
    double timestamp_s = 0.0;
    double bandwidth_mhz = 0.0;
};

struct BandwidthSeries {
    std::vector<BandwidthSample> samples;
    double mean_mhz = 0.0;
    double stddev_mhz = 0.0;

    void summarize() {
        if (samples.empty()) throw std::runtime_error("BandwidthSeries: empty series");
        double m = 0.0;
        for (const auto& s : samples) m += s.bandwidth_mhz;
        m /= static_cast<double>(samples.size());
        double v = 0.0;
        for (const auto& s : samples) v += (s.bandwidth_mhz - m) * (s.bandwidth_mhz - m);
        mean_mhz = m;
        stddev_mhz = samples.size() > 1
                         ? std::sqrt(v / static_cast<double>(samples.size() - 1))
                         : 0.0;
    }
};

struct PumpMonitorConfig {
    double duration_s = 72.6 * 3600.0;
    double scan_interval_s = 300.0;  // five-minute cadence
    double bandwidth_mean_mhz = 6.0;
    double bandwidth_spread_mhz = 2.0;
    double drift_timescale_s = 1800.0;
    double instrument_width_mhz = 1.0;
    double noise_level = 0.03;
    ScanGrid grid{};

    void validate() const {
        if (!(duration_s > 0.0) || !(scan_interval_s > 0.0) || !(bandwidth_mean_mhz > 0.0) ||
            bandwidth_spread_mhz < 0.0 || instrument_width_mhz < 0.0 || noise_level < 0.0 ||
            !(drift_timescale_s > 0.0))
            throw std::invalid_argument("PumpMonitorConfig: invalid field");
    }
};

struct PumpMonitorRun {
    std::vector<FPScan> scans;
    std::vector<double> truth_mhz;
    BandwidthSeries series;
};

/// Drifting-truth scan series at fixed cadence: simulate each scan, fit it
/// back, and summarize the recovered bandwidths.
inline PumpMonitorRun run_pump_monitor(const PumpMonitorConfig& cfg, std::uint64_t root_seed) {
    cfg.validate();
    RandomStream drift_rng(root_seed, "pump.drift");
    MeanRevertingDrift drift{cfg.bandwidth_mean_mhz, cfg.bandwidth_spread_mhz,
                             cfg.drift_timescale_s, 0.1 * cfg.bandwidth_mean_mhz};
    drift.reset(drift_rng);

    PumpMonitorRun run;
    const int n_scans = static_cast<int>(cfg.duration_s / cfg.scan_interval_s);
    if (n_scans < 1) throw std::invalid_argument("run_pump_monitor: duration shorter than one scan");
    for (int k = 0; k < n_scans; ++k) {
        const double truth = k == 0 ? drift.state : drift.step(cfg.scan_interval_s, drift_rng);
        FPScan scan = simulate_scan(truth, cfg.instrument_width_mhz, cfg.noise_level,
                                    substream_seed(root_seed, "pump.scans", static_cast<std::uint64_t>(k)),
                                    cfg.grid);
        scan.timestamp_s = k * cfg.scan_interval_s;
        const BandwidthFit fit = estimate_bandwidth(scan, cfg.instrument_width_mhz);
        run.truth_mhz.push_back(truth);
        run.series.samples.push_back({scan.timestamp_s, fit.bandwidth_mhz});
        run.scans.push_back(std::move(scan));
    }
    run.series.summarize();
    return run;
}

}  // namespace triplet
