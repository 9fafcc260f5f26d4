#pragma once

#include <array>

#include "iform/mat3.hpp"

namespace iform {

// m = u * diag(sigma) * v^T with u, v orthogonal and sigma descending, >= 0.
struct Svd3Result {
    Mat3 u;
    std::array<double, 3> sigma;
    Mat3 v;
};

// Cyclic Jacobi on m^T m, followed by a reorthonormalization of m*V that keeps
// the reconstruction tight even for tiny singular values. Throws NumericError
// on non-finite input.
Svd3Result svd3(const Mat3& m);

struct Svd3Grad {
    Mat3 dm;
    // Set when two singular values sit within 1e-8 of each other even after a
    // 1e-10 jitter; dm is then unreliable and callers should treat the
    // decomposition as constant (stop-gradient).
    bool degenerate = false;
};

// First-order perturbation pullback: given upstream gradients with respect to
// u, sigma and v, produce the gradient with respect to m.
Svd3Grad svd3_backward(const Mat3& m, const Svd3Result& r, const Mat3& du,
                       const std::array<double, 3>& dsigma, const Mat3& dv);

}  // namespace iform
