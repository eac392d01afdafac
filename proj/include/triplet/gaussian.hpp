#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "triplet/mat3.hpp"

namespace triplet {

// Real three-particle Gaussian wavefunctions
//
//   psi(x) ~ prod_i exp(-(x_i / 2 sigma_i)^2) * prod_pairs exp(-((x_i - x_j) / 2 sigma_c)^2)
//
// written canonically as psi(x) = exp(-1/2 x^T M x) up to normalization.
// With hbar = 1 and [x, p] = i, a real Gaussian has
//
//   Cov_x = (2M)^-1        (|psi|^2 ~ exp(-x^T M x))
//   Cov_p = M / 2          (momentum wavefunction ~ exp(-1/2 p^T M^-1 p))
//
// so the single-particle minimum uncertainty product is exactly 1/2.

/// One correlation factor exp(-((x_i - x_j)/2 sigma_c)^2) on an unordered pair.
/// Particle indices are 1-based. sigma_c = 0 is the perfect-correlation limit
/// and is only meaningful through variances_with_limits().
struct Correlation {
    int i = 1;
    int j = 2;
    double sigma_c = 1.0;
};

struct WidthSpec {
    Vec3 sigma{1.0, 1.0, 1.0};  // envelope widths; inf allowed as a limit
    std::vector<Correlation> correlations;

    void validate() const {
        for (int k = 0; k < 3; ++k) {
            const double s = sigma[k];
            if (std::isnan(s) || s <= 0.0)
                throw std::invalid_argument("WidthSpec: sigma" + std::to_string(k + 1) +
                                            " must be positive (or inf)");
        }
        bool seen[3][3] = {};
        for (const auto& c : correlations) {
            if (c.i < 1 || c.i > 3 || c.j < 1 || c.j > 3 || c.i == c.j)
                throw std::invalid_argument("WidthSpec: correlation pair must name two distinct particles 1..3");
            const int a = std::min(c.i, c.j) - 1;
            const int b = std::max(c.i, c.j) - 1;
            if (seen[a][b])
                throw std::invalid_argument("WidthSpec: duplicate correlation on pair (" +
                                            std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
            seen[a][b] = true;
            if (std::isnan(c.sigma_c) || std::isinf(c.sigma_c) || c.sigma_c < 0.0)
                throw std::invalid_argument("WidthSpec: sigma_c must be finite and >= 0");
        }
    }

    bool has_limit_parameters() const {
        for (double s : sigma)
            if (std::isinf(s)) return true;
        for (const auto& c : correlations)
            if (c.sigma_c == 0.0) return true;
        return false;
    }

    /// Substitute sigma = inf -> 1/eps and sigma_c = 0 -> eps.
    WidthSpec substituted(double eps) const {
        WidthSpec out = *this;
        for (double& s : out.sigma)
            if (std::isinf(s)) s = 1.0 / eps;
        for (auto& c : out.correlations)
            if (c.sigma_c == 0.0) c.sigma_c = eps;
        return out;
    }
};

/// Canonical exponent matrix: psi = exp(-1/2 x^T M x).
struct QuadraticForm {
    Mat3 m;
};

/// M_ii = 1/(2 sigma_i^2) + sum over correlations touching i of 1/(2 sigma_c^2),
/// M_ij = -1/(2 sigma_c^2) on each correlated pair. Matches direct expansion of
/// the exponent: each factor contributes x_i^2/(4 sigma^2) terms and the pair
/// factor contributes (x_i - x_j)^2/(4 sigma_c^2).
inline QuadraticForm build_quadratic_form(const WidthSpec& spec) {
    spec.validate();
    for (double s : spec.sigma)
        if (std::isinf(s))
            throw std::invalid_argument(
                "build_quadratic_form: sigma = inf is a limit; evaluate via variances_with_limits");
    for (const auto& c : spec.correlations)
        if (c.sigma_c == 0.0)
            throw std::invalid_argument(
                "build_quadratic_form: sigma_c = 0 is a limit; evaluate via variances_with_limits");

    QuadraticForm q;
    for (int k = 0; k < 3; ++k) q.m(k, k) = 1.0 / (2.0 * spec.sigma[k] * spec.sigma[k]);
    for (const auto& c : spec.correlations) {
        const int a = c.i - 1, b = c.j - 1;
        const double w = 1.0 / (2.0 * c.sigma_c * c.sigma_c);
        q.m(a, a) += w;
        q.m(b, b) += w;
        q.m(a, b) -= w;
        q.m(b, a) -= w;
    }
    if (!q.m.is_positive_definite())
        throw std::invalid_argument(
            "build_quadratic_form: exponent matrix is not positive definite; "
            "check sigma / sigma_c values");
    return q;
}

/// Covariance of |psi|^2 ~ exp(-x^T M x): (2M)^-1.
inline Mat3 position_covariance(const QuadraticForm& q) {
    if (!q.m.is_positive_definite())
        throw std::invalid_argument("position_covariance: form must be positive definite");
    return q.m.scaled(2.0).inverse();
}

/// Momentum covariance of a real Gaussian: M / 2.
inline Mat3 momentum_covariance(const QuadraticForm& q) {
    if (!q.m.is_positive_definite())
        throw std::invalid_argument("momentum_covariance: form must be positive definite");
    return q.m.scaled(0.5);
}

/// Var(c . v) = c^T Cov c; clamped at zero against rounding on degenerate forms.
inline double variance_of_combination(const Mat3& cov, const Vec3& coeffs) {
    return std::max(cov.quadratic_form(coeffs), 0.0);
}

enum class Basis { position, momentum };

/// One mixture component: weight, widths and a per-particle position offset.
/// Offsets displace |psi|^2 without touching its momentum distribution.
struct MixtureComponent {
    double weight = 1.0;
    WidthSpec state;
    Vec3 mean{0.0, 0.0, 0.0};
};

struct GaussianMixture {
    std::vector<MixtureComponent> components;

    static GaussianMixture single(WidthSpec spec) {
        GaussianMixture m;
        m.components.push_back({1.0, std::move(spec), {0.0, 0.0, 0.0}});
        return m;
    }

    void validate() const {
        if (components.empty()) throw std::invalid_argument("GaussianMixture: no components");
        double total = 0.0;
        for (const auto& c : components) {
            if (!(c.weight > 0.0) || c.weight > 1.0)
                throw std::invalid_argument("GaussianMixture: weights must lie in (0, 1]");
            total += c.weight;
            c.state.validate();
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights must sum to 1");
    }

    bool has_limit_parameters() const {
        for (const auto& c : components)
            if (c.state.has_limit_parameters()) return true;
        return false;
    }

    GaussianMixture substituted(double eps) const {
        GaussianMixture out = *this;
        for (auto& c : out.components) c.state = c.state.substituted(eps);
        return out;
    }
};

/// Law of total variance over the mixture:
///   Var = sum_i w_i Var_i + sum_i w_i <c.v>_i^2 - (sum_i w_i <c.v>_i)^2.
/// The mean terms appear only in position; displacements leave the momentum
/// distribution of each real Gaussian component unchanged.
inline double mixture_variance(const GaussianMixture& mix, const Vec3& coeffs, Basis basis) {
    mix.validate();
    double var_part = 0.0;
    double mean_sq = 0.0;
    double mean = 0.0;
    for (const auto& c : mix.components) {
        const QuadraticForm q = build_quadratic_form(c.state);
        const Mat3 cov = basis == Basis::position ? position_covariance(q) : momentum_covariance(q);
        var_part += c.weight * variance_of_combination(cov, coeffs);
        if (basis == Basis::position) {
            const double m = dot(c.mean, coeffs);
            mean_sq += c.weight * m * m;
            mean += c.weight * m;
        }
    }
    return var_part + std::max(mean_sq - mean * mean, 0.0);
}

enum class VarianceDomain { dimensionless, energy_time };

/// The four uncertainties every inequality consumes. Standard deviations of
/// (x2-x1), (x3-x2), (x3-x1) and (p1+p2+p3), or their time/frequency twins
/// (ns and rad/ns) when the domain tag says energy_time.
struct VarianceSet {
    double dx21 = 0.0;
    double dx32 = 0.0;
    double dx31 = 0.0;
    double dpsum = 0.0;
    VarianceDomain domain = VarianceDomain::dimensionless;

    void validate() const {
        if (dx21 < 0 || dx32 < 0 || dx31 < 0 || dpsum < 0)
            throw std::invalid_argument("VarianceSet: entries must be non-negative");
    }
};

namespace detail {

inline VarianceSet variance_set_direct(const GaussianMixture& mix) {
    VarianceSet v;
    v.dx21 = std::sqrt(mixture_variance(mix, {-1.0, 1.0, 0.0}, Basis::position));
    v.dx32 = std::sqrt(mixture_variance(mix, {0.0, -1.0, 1.0}, Basis::position));
    v.dx31 = std::sqrt(mixture_variance(mix, {-1.0, 0.0, 1.0}, Basis::position));
    v.dpsum = std::sqrt(mixture_variance(mix, {1.0, 1.0, 1.0}, Basis::momentum));
    return v;
}

}  // namespace detail

/// Evaluate the VarianceSet, resolving sigma_c = 0 and sigma = inf as limits:
/// substitute eps / 1/eps for a decreasing sequence of eps and accept once the
/// last step moves each entry by less than 1e-4 (relative above 1, absolute
/// below, so limits converging to zero terminate). The sequence starts at
/// {1e-2, 1e-3, 1e-4} and extends one decade if needed.
inline VarianceSet variances_with_limits(const GaussianMixture& mix) {
    mix.validate();
    if (!mix.has_limit_parameters()) return detail::variance_set_direct(mix);

    constexpr double kTol = 1e-4;
    const double eps_seq[] = {1e-2, 1e-3, 1e-4, 1e-5};
    const char* names[4] = {"dx21", "dx32", "dx31", "dpsum"};
    std::vector<VarianceSet> evals;
    std::string worst;
    for (double eps : eps_seq) {
        evals.push_back(detail::variance_set_direct(mix.substituted(eps)));
        if (evals.size() < 3) continue;
        const VarianceSet& prev = evals[evals.size() - 2];
        const VarianceSet& cur = evals.back();
        const double pv[4] = {prev.dx21, prev.dx32, prev.dx31, prev.dpsum};
        const double cv[4] = {cur.dx21, cur.dx32, cur.dx31, cur.dpsum};
        worst.clear();
        for (int e = 0; e < 4; ++e)
            if (std::abs(cv[e] - pv[e]) > kTol * std::max(1.0, std::abs(cv[e]))) worst = names[e];
        if (worst.empty()) return cur;
    }
    throw std::runtime_error("variances_with_limits: " + worst +
                             " did not converge under the eps sweep; check the limit parameters");
}

inline VarianceSet variances_with_limits(const WidthSpec& spec) {
    return variances_with_limits(GaussianMixture::single(spec));
}

}  // namespace triplet
