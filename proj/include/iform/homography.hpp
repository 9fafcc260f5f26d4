#pragma once

#include <cstdint>
#include <vector>

#include "iform/mat3.hpp"
#include "iform/tensor.hpp"

namespace iform {

enum class ParamMode : std::uint8_t { Affine6 = 0, Homography8 = 1 };

inline int param_count(ParamMode m) { return m == ParamMode::Affine6 ? 6 : 8; }

// 3x3 plane transform with matrix[2][2] fixed to 1. Affine6 additionally keeps
// the perspective row zero. Transforms act on normalized coordinates where the
// tile corners map to +-1 (so one tile side spans 2 units).
struct HomographyParams {
    Mat3 matrix = Mat3::identity();
    ParamMode mode = ParamMode::Affine6;
};

// Validates the type invariants; throws ContractError / SingularityError.
void validate(const HomographyParams& p);

// Affine6: row-major first two rows (6 values).
// Homography8: row-major without matrix[2][2] (8 values).
std::vector<double> to_vector(const HomographyParams& p);
HomographyParams from_vector(const std::vector<double>& v, ParamMode mode);
std::vector<double> identity_vector(ParamMode mode);

// Differentiable embedding of a parameter vector (length 6 or 8, laid out as
// in to_vector) into a {3,3} tensor with the fixed entries filled in.
Tensor params_to_matrix(const Tensor& vec, ParamMode mode);

// Sampling ranges for realistic transform composition. Translation is a
// fraction of the tile side (one side = 2 normalized units).
struct TransformRanges {
    double max_translation = 0.15;
    double max_rotation = 15.0 * 0.017453292519943295;  // radians
    double scale_lo = 0.85, scale_hi = 1.15;
    double max_shear = 0.1;
    double max_perspective = 0.001;  // only used in Homography8 mode
};

void validate(const TransformRanges& r);

// T(translate) * R(rotate) * S(scale) * Sh(shear) [* P(perspective)], each
// factor uniform in its range; deterministic for a fixed seed.
HomographyParams sample_transform(const TransformRanges& ranges, std::uint64_t rng_seed,
                                  ParamMode mode);

// Factor helpers (normalized-coordinate conventions above).
Mat3 translation_matrix(double tx, double ty);
Mat3 rotation_matrix(double radians);
Mat3 scale_matrix(double s);
Mat3 shear_matrix(double sh);
Mat3 perspective_matrix(double px, double py);
// Exact pixel-unit translation for a WxH grid: one pixel = 2/(W-1) units.
Mat3 pixel_translation_matrix(double dx_pixels, double dy_pixels, std::size_t height,
                              std::size_t width);

// Inverse transform renormalized so matrix[2][2] is exactly 1.
HomographyParams inverse_params(const HomographyParams& p);

// Differentiable spatial-transformer warp. Output pixel (i,j) maps to
// normalized coordinates, goes through theta^{-1} as a projective transform,
// and samples the input bilinearly; taps outside the input read zero.
// Sample positions within 1e-9 of a grid point snap to it, which makes the
// identity and exact pixel translations bit-exact.
Tensor stn_warp(const Tensor& image, const HomographyParams& theta);
// Same warp with gradients also flowing to the {3,3} theta tensor.
Tensor stn_warp(const Tensor& image, const Tensor& theta, ParamMode mode);

}  // namespace iform
