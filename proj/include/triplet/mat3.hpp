#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace triplet {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Dense 3x3 matrix with just the operations the Gaussian algebra needs.
/// Inversion is closed form (adjugate over determinant), so results carry no
/// dependence on an external linear-algebra backend.
struct Mat3 {
    std::array<double, 9> a{};

    double& operator()(int r, int c) { return a[3 * r + c]; }
    double operator()(int r, int c) const { return a[3 * r + c]; }

    static Mat3 identity() {
        Mat3 m;
        m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
        return m;
    }

    static Mat3 diagonal(double d0, double d1, double d2) {
        Mat3 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        return m;
    }

    Mat3 scaled(double f) const {
        Mat3 m = *this;
        for (double& v : m.a) v *= f;
        return m;
    }

    Mat3 times(const Mat3& o) const {
        Mat3 m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(r, k) * o(k, c);
                m(r, c) = s;
            }
        return m;
    }

    /// c^T A c
    double quadratic_form(const Vec3& c) const {
        double s = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) s += c[r] * (*this)(r, k) * c[k];
        return s;
    }

    double determinant() const {
        const auto& m = *this;
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    }

    Mat3 inverse() const {
        const auto& m = *this;
        const double det = determinant();
        if (!std::isfinite(det) || det == 0.0)
            throw std::runtime_error("mat3: singular matrix, cannot invert");
        Mat3 inv;
        inv(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / det;
        inv(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / det;
        inv(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / det;
        inv(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / det;
        inv(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / det;
        inv(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / det;
        inv(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / det;
        inv(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / det;
        inv(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / det;
        return inv;
    }

    bool is_symmetric(double tol = 1e-12) const {
        const auto& m = *this;
        for (int r = 0; r < 3; ++r)
            for (int c = r + 1; c < 3; ++c)
                if (std::abs(m(r, c) - m(c, r)) > tol * (1.0 + std::abs(m(r, c))))
                    return false;
        return true;
    }

    /// Sylvester criterion on leading principal minors.
    bool is_positive_definite() const {
        const auto& m = *this;
        const double m1 = m(0, 0);
        const double m2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const double m3 = determinant();
        return std::isfinite(m1) && std::isfinite(m2) && std::isfinite(m3) &&
               m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
    }

    /// Solve A x = b in place via the closed-form inverse.
    Vec3 solve(const Vec3& b) const {
        const Mat3 inv = inverse();
        Vec3 x{};
        for (int r = 0; r < 3; ++r)
            x[r] = inv(r, 0) * b[0] + inv(r, 1) * b[1] + inv(r, 2) * b[2];
        return x;
    }
};

}  // namespace triplet
