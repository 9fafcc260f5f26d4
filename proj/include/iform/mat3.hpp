#pragma once

#include <array>
#include <cmath>

#include "iform/errors.hpp"

namespace iform {

// Plain 3x3 double matrix, row-major. Value semantics throughout; this is the
// non-autodiff counterpart of a {3,3} Tensor.
struct Mat3 {
    std::array<double, 9> a{};

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(3 * r + c)]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(3 * r + c)]; }

    static Mat3 identity() {
        Mat3 m;
        m.a = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return m;
    }
    static Mat3 zero() { return Mat3{}; }

    bool operator==(const Mat3& o) const { return a == o.a; }
};

inline Mat3 operator+(const Mat3& x, const Mat3& y) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

inline Mat3 operator-(const Mat3& x, const Mat3& y) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

inline Mat3 operator*(const Mat3& x, const Mat3& y) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

inline Mat3 operator*(double s, const Mat3& x) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.a[i] = s * x.a[i];
    return r;
}

inline Mat3 transpose(const Mat3& m) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m(j, i);
    return r;
}

inline double det(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

inline double frobenius_norm(const Mat3& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

inline bool finite(const Mat3& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

// Inverse via adjugate. Throws SingularityError when |det| <= 1e-9.
inline Mat3 inverse(const Mat3& m) {
    double d = det(m);
    if (std::abs(d) <= 1e-9) throw SingularityError("mat3 inverse: |det| <= 1e-9");
    double id = 1.0 / d;
    Mat3 r;
    r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) * id;
    r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) * id;
    r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) * id;
    r(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) * id;
    r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) * id;
    r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) * id;
    r(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) * id;
    r(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) * id;
    r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) * id;
    return r;
}

inline std::array<double, 3> matvec(const Mat3& m, const std::array<double, 3>& v) {
    return {m(0, 0) * v[0] + m(0, 1) * v[1] + m(0, 2) * v[2],
            m(1, 0) * v[0] + m(1, 1) * v[1] + m(1, 2) * v[2],
            m(2, 0) * v[0] + m(2, 1) * v[1] + m(2, 2) * v[2]};
}

}  // namespace iform
