#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "triplet/gaussian.hpp"

namespace triplet {

// Entanglement criteria on a VarianceSet, with hbar = 1 and [x, p] = i.
//
// Product form, bound 1 per inequality:
//   D(x2-x1) D(p1+p2+p3) >= 1     (and the 3-2, 3-1 pairs)
// one violation -> some entanglement, two -> full inseparability.
//
// Sum forms, bound 1, and the triple sum, bound 2:
//   [D(x2-x1) + D(x3-x1)] D(psum) >= 1         (pairwise sums)
//   [D(x2-x1) + D(x3-x1) + D(x3-x2)] D(psum) >= 2
// any violation -> genuine tripartite entanglement.
//
// Additive form, bound 2 per inequality:
//   D^2(x2-x1) + D^2(psum) >= 2
// the product form is this form minimized over the rescaling x -> s x, p -> p/s.

enum class Classification { no_witness, some_entanglement, fully_inseparable, genuine_tripartite };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::no_witness: return "no-witness";
        case Classification::some_entanglement: return "some-entanglement";
        case Classification::fully_inseparable: return "fully-inseparable";
        case Classification::genuine_tripartite: return "genuine-tripartite";
    }
    return "?";
}

struct WitnessReport {
    // index order: (2,1), (3,2), (3,1) for products; (21+31), (21+32), (32+31) for sums
    std::array<double, 3> product_values{};
    std::array<double, 3> sum_values{};
    double triple_sum_value = 0.0;
    std::array<double, 3> additive_vlf_values{};

    static constexpr double product_bound = 1.0;
    static constexpr double sum_bound = 1.0;
    static constexpr double triple_sum_bound = 2.0;
    static constexpr double additive_bound = 2.0;

    Classification classification = Classification::no_witness;

    // First-order propagated uncertainties; zero when the input carried none.
    std::array<double, 3> product_errors{};
    std::array<double, 3> sum_errors{};
    double triple_sum_error = 0.0;

    VarianceSet input{};
    std::string provenance;

    int product_violations() const {
        int n = 0;
        for (double v : product_values)
            if (v < product_bound) ++n;
        return n;
    }
    bool any_sum_violation() const {
        for (double v : sum_values)
            if (v < sum_bound) return true;
        return triple_sum_value < triple_sum_bound;
    }
    /// Violation significance (bound - value) / error; infinite when error = 0
    /// and the bound is strictly violated.
    static double significance(double value, double bound, double error) {
        if (value >= bound) return 0.0;
        if (error <= 0.0) return std::numeric_limits<double>::infinity();
        return (bound - value) / error;
    }
};

/// Additive van Loock-Furusawa left-hand sides, bound 2.
inline std::array<double, 3> additive_vlf(const VarianceSet& v) {
    v.validate();
    const double p2 = v.dpsum * v.dpsum;
    return {v.dx21 * v.dx21 + p2, v.dx32 * v.dx32 + p2, v.dx31 * v.dx31 + p2};
}

namespace detail {

inline Classification classify(const WitnessReport& r) {
    if (r.any_sum_violation()) return Classification::genuine_tripartite;
    const int nprod = r.product_violations();
    if (nprod >= 2) return Classification::fully_inseparable;
    if (nprod >= 1) return Classification::some_entanglement;
    return Classification::no_witness;
}

}  // namespace detail

/// Evaluate every inequality on the four uncertainties. Thresholds are strict
/// (< bound); statistical significance is a separate reporting concern.
inline WitnessReport evaluate(const VarianceSet& v) {
    v.validate();
    WitnessReport r;
    r.input = v;
    r.product_values = {v.dx21 * v.dpsum, v.dx32 * v.dpsum, v.dx31 * v.dpsum};
    r.sum_values = {(v.dx21 + v.dx31) * v.dpsum, (v.dx21 + v.dx32) * v.dpsum,
                    (v.dx32 + v.dx31) * v.dpsum};
    r.triple_sum_value = (v.dx21 + v.dx31 + v.dx32) * v.dpsum;
    r.additive_vlf_values = additive_vlf(v);
    r.classification = detail::classify(r);
    return r;
}

/// Measured timing spreads (ns) and total-frequency spread (rad/ns), with the
/// quoted one-sigma uncertainties when available.
struct EnergyTimeInput {
    double dt21_ns = 0.0;
    double dt32_ns = 0.0;
    double dt31_ns = 0.0;
    double domega_rad_ns = 0.0;

    double dt21_err_ns = 0.0;
    double dt32_err_ns = 0.0;
    double dt31_err_ns = 0.0;
    double domega_err_rad_ns = 0.0;

    std::string provenance;  // e.g. "measured", "simulated"

    void validate() const {
        if (dt21_ns < 0 || dt32_ns < 0 || dt31_ns < 0 || domega_rad_ns < 0)
            throw std::invalid_argument("EnergyTimeInput: spreads must be non-negative");
    }
};

/// Same arithmetic with t in place of x and omega in place of p; all values
/// dimensionless (ns times rad/ns). Uncertainties propagate at first order.
inline WitnessReport evaluate_energy_time(const EnergyTimeInput& e) {
    e.validate();
    VarianceSet v;
    v.dx21 = e.dt21_ns;
    v.dx32 = e.dt32_ns;
    v.dx31 = e.dt31_ns;
    v.dpsum = e.domega_rad_ns;
    v.domain = VarianceDomain::energy_time;
    WitnessReport r = evaluate(v);
    r.provenance = e.provenance;

    const double w = e.domega_rad_ns, dw = e.domega_err_rad_ns;
    auto product_err = [&](double t, double dt) {
        return std::sqrt(dt * dt * w * w + t * t * dw * dw);
    };
    auto sum_err = [&](double ta, double dta, double tb, double dtb) {
        const double s = ta + tb;
        return std::sqrt((dta * dta + dtb * dtb) * w * w + s * s * dw * dw);
    };
    r.product_errors = {product_err(e.dt21_ns, e.dt21_err_ns),
                        product_err(e.dt32_ns, e.dt32_err_ns),
                        product_err(e.dt31_ns, e.dt31_err_ns)};
    r.sum_errors = {sum_err(e.dt21_ns, e.dt21_err_ns, e.dt31_ns, e.dt31_err_ns),
                    sum_err(e.dt21_ns, e.dt21_err_ns, e.dt32_ns, e.dt32_err_ns),
                    sum_err(e.dt32_ns, e.dt32_err_ns, e.dt31_ns, e.dt31_err_ns)};
    {
        const double s = e.dt21_ns + e.dt31_ns + e.dt32_ns;
        const double dt2 = e.dt21_err_ns * e.dt21_err_ns + e.dt31_err_ns * e.dt31_err_ns +
                           e.dt32_err_ns * e.dt32_err_ns;
        r.triple_sum_error = std::sqrt(dt2 * w * w + s * s * dw * dw);
    }
    return r;
}

/// Two-particle product D(t0-t1) D(w0+w1); bound 1 for separable pairs.
inline double two_photon_product(double dt_ns, double domega_rad_ns) {
    if (dt_ns < 0 || domega_rad_ns < 0)
        throw std::invalid_argument("two_photon_product: spreads must be non-negative");
    return dt_ns * domega_rad_ns;
}

struct ScalingResult {
    double s_opt = 1.0;
    double minimized_value = 0.0;
};

/// Minimize f(s) = s^2 var_x + var_p / s^2 over s > 0 by golden-section search
/// (relative width 1e-10). Bracketing expands geometrically from s = 1; the
/// minimum equals 2 sqrt(var_x var_p) at s = (var_p / var_x)^(1/4).
inline ScalingResult optimize_scaling(double var_x, double var_p) {
    if (!(var_x > 0.0) || !(var_p > 0.0) || !std::isfinite(var_x) || !std::isfinite(var_p))
        throw std::invalid_argument("optimize_scaling: variances must be positive and finite");

    auto f = [&](double s) { return s * s * var_x + var_p / (s * s); };

    double lo = 0.5, mid = 1.0, hi = 2.0;
    for (int guard = 0; guard < 600 && f(lo) < f(mid); ++guard) {
        hi = mid;
        mid = lo;
        lo *= 0.5;
    }
    for (int guard = 0; guard < 600 && f(hi) < f(mid); ++guard) {
        lo = mid;
        mid = hi;
        hi *= 2.0;
    }

    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-10 * std::max(1.0, 0.5 * (a + b))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    ScalingResult out;
    out.s_opt = 0.5 * (a + b);
    out.minimized_value = f(out.s_opt);
    return out;
}

}  // namespace triplet
