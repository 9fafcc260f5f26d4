#pragma once

#include "iform/homography.hpp"
#include "iform/mat3.hpp"
#include "iform/svd3.hpp"
#include "iform/tensor.hpp"

namespace iform {

enum class DistanceMode : std::uint8_t { Euclidean = 0, Geodesic = 1 };

struct DistanceConfig {
    DistanceMode mode = DistanceMode::Euclidean;
    double lambda = 0.1;
    double arccos_eps = 1e-7;
};

void validate(const DistanceConfig& cfg);

// Frobenius norm of (theta_hat - I3); the inference-time comparison matrix is
// the identity.
double euclidean_distance(const HomographyParams& theta_hat);
Tensor euclidean_distance_t(const Tensor& theta_hat_matrix);

// Orthogonal projection of m onto SO(3):
//   (U, S, V) = svd3(m),  P = U diag(1, 1, det(U V^T)) V^T,  R_pi = m - P.
// P is orthogonal with det(P) = +1.
struct So3Projection {
    Mat3 p;
    Mat3 r_pi;
};
So3Projection so3_project(const Mat3& m);

// Differentiable projection. When the spectrum is degenerate (pairwise gap
// <= 1e-8 after jitter) the pullback treats P as constant (stop-gradient)
// and bumps *fallbacks when given.
Tensor so3_project_t(const Tensor& m, int* fallbacks = nullptr);

// arccos[(Tr(P)-1)/2] + lambda * Tr(R_pi^T R_pi) evaluated on theta^{-1} *
// theta_hat; pass theta = identity at inference time.
double geodesic_distance(const HomographyParams& theta, const HomographyParams& theta_hat,
                         const DistanceConfig& cfg);
Tensor geodesic_distance_t(const Mat3& theta, const Tensor& theta_hat_matrix,
                           const DistanceConfig& cfg, int* fallbacks = nullptr);

// Dispatch on cfg.mode with theta = I3 (the loss-side usage).
Tensor inverseform_tile_distance(const Tensor& theta_hat_matrix, const DistanceConfig& cfg,
                                 int* fallbacks = nullptr);

}  // namespace iform
