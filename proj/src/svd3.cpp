#include "iform/svd3.hpp"

#include <algorithm>
#include <cmath>

#include "iform/errors.hpp"

namespace iform {

namespace {

// One Jacobi rotation zeroing B[p][q] (B symmetric); accumulates into V.
void jacobi_rotate(Mat3& b, Mat3& v, int p, int q) {
    double bpq = b(p, q);
    if (bpq == 0.0) return;
    double tau = (b(q, q) - b(p, p)) / (2.0 * bpq);
    double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                            : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
    double c = 1.0 / std::sqrt(1.0 + t * t);
    double s = t * c;

    for (int k = 0; k < 3; ++k) {
        double bkp = b(k, p), bkq = b(k, q);
        b(k, p) = c * bkp - s * bkq;
        b(k, q) = s * bkp + c * bkq;
    }
    for (int k = 0; k < 3; ++k) {
        double bpk = b(p, k), bqk = b(q, k);
        b(p, k) = c * bpk - s * bqk;
        b(q, k) = s * bpk + c * bqk;
    }
    for (int k = 0; k < 3; ++k) {
        double vkp = v(k, p), vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

double off_diag_norm(const Mat3& b) {
    return std::abs(b(0, 1)) + std::abs(b(0, 2)) + std::abs(b(1, 2));
}

std::array<double, 3> column(const Mat3& m, int c) {
    return {m(0, c), m(1, c), m(2, c)};
}

void set_column(Mat3& m, int c, const std::array<double, 3>& v) {
    m(0, c) = v[0];
    m(1, c) = v[1];
    m(2, c) = v[2];
}

double norm3(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::array<double, 3> cross3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Unit vector orthogonal to u (and to w when given), built from the most
// stable cross product available.
std::array<double, 3> orthogonal_unit(const std::array<double, 3>& u,
                                      const std::array<double, 3>* w) {
    if (w) {
        std::array<double, 3> c = cross3(u, *w);
        double n = norm3(c);
        if (n > 1e-300) return {c[0] / n, c[1] / n, c[2] / n};
    }
    // pick the axis least aligned with u
    std::array<double, 3> axis{};
    int best = 0;
    double amin = std::abs(u[0]);
    for (int i = 1; i < 3; ++i)
        if (std::abs(u[i]) < amin) {
            amin = std::abs(u[i]);
            best = i;
        }
    axis[best] = 1.0;
    std::array<double, 3> c = cross3(u, axis);
    double n = norm3(c);
    if (n <= 1e-300) return {1.0, 0.0, 0.0};
    return {c[0] / n, c[1] / n, c[2] / n};
}

}  // namespace

Svd3Result svd3(const Mat3& m) {
    if (!finite(m)) throw NumericError("svd3: non-finite input");

    // Diagonalize m^T m.
    Mat3 b = transpose(m) * m;
    Mat3 v = Mat3::identity();
    double scale = 0.0;
    for (double x : b.a) scale = std::max(scale, std::abs(x));
    double tol = scale > 0.0 ? scale * 1e-32 : 0.0;
    for (int sweep = 0; sweep < 60; ++sweep) {
        if (off_diag_norm(b) <= tol) break;
        jacobi_rotate(b, v, 0, 1);
        jacobi_rotate(b, v, 0, 2);
        jacobi_rotate(b, v, 1, 2);
    }

    // Singular values from the norms of m*v columns; more accurate than
    // sqrt of the (squared) Jacobi eigenvalues for small sigma.
    Mat3 w = m * v;
    std::array<double, 3> sig{norm3(column(w, 0)), norm3(column(w, 1)), norm3(column(w, 2))};

    // Sort descending, permuting v and w columns.
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int c) { return sig[a] > sig[c]; });
    Mat3 vs, ws;
    std::array<double, 3> sigma{};
    for (int i = 0; i < 3; ++i) {
        set_column(vs, i, column(v, idx[i]));
        set_column(ws, i, column(w, idx[i]));
        sigma[i] = sig[idx[i]];
    }

    // Build u by Gram-Schmidt on w's columns (twice for orthogonality);
    // columns with negligible norm come from the orthogonal complement.
    Mat3 u;
    double rank_tol = std::max(sigma[0] * 1e-13, 1e-300);
    std::array<std::array<double, 3>, 3> ucols;
    for (int i = 0; i < 3; ++i) {
        std::array<double, 3> c = column(ws, i);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < i; ++j) {
                double d = dot3(c, ucols[j]);
                for (int k = 0; k < 3; ++k) c[k] -= d * ucols[j][k];
            }
        double n = norm3(c);
        if (sigma[i] > rank_tol && n > rank_tol) {
            sigma[i] = n;  // refreshed after deflation against earlier columns
            for (int k = 0; k < 3; ++k) c[k] /= n;
        } else {
            sigma[i] = 0.0;
            if (i == 0) {
                c = {1.0, 0.0, 0.0};
            } else if (i == 1) {
                c = orthogonal_unit(ucols[0], nullptr);
            } else {
                c = cross3(ucols[0], ucols[1]);
                double cn = norm3(c);
                for (int k = 0; k < 3; ++k) c[k] /= cn;
            }
        }
        ucols[i] = c;
    }
    for (int i = 0; i < 3; ++i) set_column(u, i, ucols[i]);

    return Svd3Result{u, sigma, vs};
}

Svd3Grad svd3_backward(const Mat3& m, const Svd3Result& r, const Mat3& du,
                       const std::array<double, 3>& dsigma, const Mat3& dv) {
    (void)m;
    Svd3Grad out;

    // Jitter coincident singular values, then test pairwise separation.
    std::array<double, 3> s = r.sigma;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(s[i] - s[j]) < 1e-10) {
                s[i] += 1e-10;
                s[j] -= 1e-10;
            }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(s[i] - s[j]) <= 1e-8) {
                out.degenerate = true;
                out.dm = Mat3::zero();
                return out;
            }

    // G_u = U^T dU, G_v = V^T dV; coefficient matrix D in the pullback
    // dm = U * D * V^T with
    //   D_ii = dsigma_i
    //   D_ij = [ (G_u,ij - G_u,ji) s_j + (G_v,ij - G_v,ji) s_i ] / (s_j^2 - s_i^2)
    Mat3 gu = transpose(r.u) * du;
    Mat3 gv = transpose(r.v) * dv;
    Mat3 d;
    for (int i = 0; i < 3; ++i) d(i, i) = dsigma[i];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            double denom = s[j] * s[j] - s[i] * s[i];
            d(i, j) = ((gu(i, j) - gu(j, i)) * s[j] + (gv(i, j) - gv(j, i)) * s[i]) / denom;
        }
    out.dm = r.u * d * transpose(r.v);
    return out;
}

}  // namespace iform
