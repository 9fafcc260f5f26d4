#include "iform/homography.hpp"

#include <cmath>

#include "iform/errors.hpp"
#include "iform/rng.hpp"

namespace iform {

void validate(const HomographyParams& p) {
    if (!finite(p.matrix)) throw NumericError("homography: non-finite matrix");
    if (p.matrix(2, 2) != 1.0) throw ContractError("homography: matrix[2][2] must be 1");
    if (p.mode == ParamMode::Affine6 && (p.matrix(2, 0) != 0.0 || p.matrix(2, 1) != 0.0))
        throw ContractError("homography: Affine6 requires a zero perspective row");
    if (std::abs(det(p.matrix)) <= 1e-9)
        throw SingularityError("homography: |det| <= 1e-9");
}

std::vector<double> to_vector(const HomographyParams& p) {
    const Mat3& m = p.matrix;
    if (p.mode == ParamMode::Affine6)
        return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2)};
    return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1)};
}

HomographyParams from_vector(const std::vector<double>& v, ParamMode mode) {
    std::size_t want = static_cast<std::size_t>(param_count(mode));
    if (v.size() != want)
        throw ContractError("from_vector: expected " + std::to_string(want) + " values, got " +
                            std::to_string(v.size()));
    HomographyParams p;
    p.mode = mode;
    Mat3& m = p.matrix;
    m(0, 0) = v[0];
    m(0, 1) = v[1];
    m(0, 2) = v[2];
    m(1, 0) = v[3];
    m(1, 1) = v[4];
    m(1, 2) = v[5];
    if (mode == ParamMode::Homography8) {
        m(2, 0) = v[6];
        m(2, 1) = v[7];
    } else {
        m(2, 0) = 0.0;
        m(2, 1) = 0.0;
    }
    m(2, 2) = 1.0;
    if (std::abs(det(m)) <= 1e-9) throw SingularityError("from_vector: |det| <= 1e-9");
    return p;
}

std::vector<double> identity_vector(ParamMode mode) {
    return to_vector(HomographyParams{Mat3::identity(), mode});
}

Tensor params_to_matrix(const Tensor& vec, ParamMode mode) {
    std::size_t k = static_cast<std::size_t>(param_count(mode));
    if (vec.size() != k)
        throw ShapeError("params_to_matrix: expected " + std::to_string(k) + " values, got shape " +
                         shape_str(vec.shape()));
    std::vector<double> m(9, 0.0);
    for (std::size_t i = 0; i < 6; ++i) m[i] = vec.at(i);
    if (mode == ParamMode::Homography8) {
        m[6] = vec.at(6);
        m[7] = vec.at(7);
    }
    m[8] = 1.0;
    return Tensor::make_op({3, 3}, std::move(m), {vec}, [k](Tensor::Node& self) {
        Tensor::Node* p = self.parents[0].get();
        if (!p->requires_grad) return;
        for (std::size_t i = 0; i < 6; ++i) p->scratch[i] += self.scratch[i];
        if (k == 8) {
            p->scratch[6] += self.scratch[6];
            p->scratch[7] += self.scratch[7];
        }
    });
}

void validate(const TransformRanges& r) {
    if (!(r.scale_lo <= 1.0 && 1.0 <= r.scale_hi))
        throw ContractError("ranges: scale range must bracket 1");
    if (r.max_translation < 0 || r.max_rotation < 0 || r.max_shear < 0 || r.max_perspective < 0)
        throw ContractError("ranges: maxima must be >= 0");
}

Mat3 translation_matrix(double tx, double ty) {
    Mat3 m = Mat3::identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return m;
}

Mat3 rotation_matrix(double radians) {
    Mat3 m = Mat3::identity();
    double c = std::cos(radians), s = std::sin(radians);
    m(0, 0) = c;
    m(0, 1) = -s;
    m(1, 0) = s;
    m(1, 1) = c;
    return m;
}

Mat3 scale_matrix(double s) {
    Mat3 m = Mat3::identity();
    m(0, 0) = s;
    m(1, 1) = s;
    return m;
}

Mat3 shear_matrix(double sh) {
    Mat3 m = Mat3::identity();
    m(0, 1) = sh;
    return m;
}

Mat3 perspective_matrix(double px, double py) {
    Mat3 m = Mat3::identity();
    m(2, 0) = px;
    m(2, 1) = py;
    return m;
}

Mat3 pixel_translation_matrix(double dx_pixels, double dy_pixels, std::size_t height,
                              std::size_t width) {
    return translation_matrix(2.0 * dx_pixels / static_cast<double>(width - 1),
                              2.0 * dy_pixels / static_cast<double>(height - 1));
}

HomographyParams inverse_params(const HomographyParams& p) {
    Mat3 inv = inverse(p.matrix);
    double w = inv(2, 2);
    if (std::abs(w) <= 1e-12) throw SingularityError("inverse_params: degenerate normalization");
    for (double& v : inv.a) v /= w;
    inv(2, 2) = 1.0;
    if (p.mode == ParamMode::Affine6) {
        inv(2, 0) = 0.0;
        inv(2, 1) = 0.0;
    }
    HomographyParams out{inv, p.mode};
    validate(out);
    return out;
}

HomographyParams sample_transform(const TransformRanges& ranges, std::uint64_t rng_seed,
                                  ParamMode mode) {
    validate(ranges);
    Rng rng = Rng::stream(rng_seed, "sample-transform");
    // One tile side is 2 normalized units, so a translation by fraction f of
    // the side moves 2f.
    double tx = 2.0 * rng.uniform(-ranges.max_translation, ranges.max_translation);
    double ty = 2.0 * rng.uniform(-ranges.max_translation, ranges.max_translation);
    double rot = rng.uniform(-ranges.max_rotation, ranges.max_rotation);
    double s = rng.uniform(ranges.scale_lo, ranges.scale_hi);
    double sh = rng.uniform(-ranges.max_shear, ranges.max_shear);
    Mat3 m = translation_matrix(tx, ty) * rotation_matrix(rot) * scale_matrix(s) * shear_matrix(sh);
    if (mode == ParamMode::Homography8) {
        double px = rng.uniform(-ranges.max_perspective, ranges.max_perspective);
        double py = rng.uniform(-ranges.max_perspective, ranges.max_perspective);
        m = m * perspective_matrix(px, py);
    }
    m(2, 2) = 1.0;  // exact, composition keeps it at 1 up to representation
    HomographyParams p{m, mode};
    validate(p);
    return p;
}

// ---- STN warp --------------------------------------------------------------------

namespace {

constexpr double kGridSnap = 1e-9;

inline double snap_to_grid(double x) {
    double r = std::round(x);
    return std::abs(x - r) < kGridSnap ? r : x;
}

struct WarpPoint {
    double sx, sy;       // source pixel coordinates
    double hx, hy, hw;   // homogeneous pre-division values
};

}  // namespace

Tensor stn_warp(const Tensor& image, const Tensor& theta, ParamMode /*mode*/) {
    if (image.rank() != 2) throw ShapeError("stn_warp: image rank != 2, " + shape_str(image.shape()));
    std::size_t H = image.shape()[0], W = image.shape()[1];
    if (H < 2 || W < 2) throw ContractError("stn_warp: image must be at least 2x2");
    Mat3 th = theta.to_mat3();
    if (!finite(th)) throw NumericError("stn_warp: non-finite theta");
    if (std::abs(det(th)) <= 1e-9) throw SingularityError("stn_warp: singular theta");
    Mat3 minv = inverse(th);

    std::vector<double> out(H * W);
    std::vector<WarpPoint> pts(H * W);
    const std::vector<double>& img = image.data();

    double sx_scale = static_cast<double>(W - 1) / 2.0;
    double sy_scale = static_cast<double>(H - 1) / 2.0;

    for (std::size_t oy = 0; oy < H; ++oy) {
        double yn = -1.0 + 2.0 * static_cast<double>(oy) / static_cast<double>(H - 1);
        for (std::size_t ox = 0; ox < W; ++ox) {
            double xn = -1.0 + 2.0 * static_cast<double>(ox) / static_cast<double>(W - 1);
            double hx = minv(0, 0) * xn + minv(0, 1) * yn + minv(0, 2);
            double hy = minv(1, 0) * xn + minv(1, 1) * yn + minv(1, 2);
            double hw = minv(2, 0) * xn + minv(2, 1) * yn + minv(2, 2);
            double sx = snap_to_grid((hx / hw + 1.0) * sx_scale);
            double sy = snap_to_grid((hy / hw + 1.0) * sy_scale);
            pts[oy * W + ox] = {sx, sy, hx, hy, hw};

            double x0 = std::floor(sx), y0 = std::floor(sy);
            double fx = sx - x0, fy = sy - y0;
            long ix0 = static_cast<long>(x0), iy0 = static_cast<long>(y0);
            auto tap = [&](long yy, long xx) -> double {
                if (yy < 0 || yy >= static_cast<long>(H) || xx < 0 || xx >= static_cast<long>(W))
                    return 0.0;
                return img[static_cast<std::size_t>(yy) * W + static_cast<std::size_t>(xx)];
            };
            out[oy * W + ox] = (1 - fy) * ((1 - fx) * tap(iy0, ix0) + fx * tap(iy0, ix0 + 1)) +
                               fy * ((1 - fx) * tap(iy0 + 1, ix0) + fx * tap(iy0 + 1, ix0 + 1));
        }
    }

    return Tensor::make_op(
        {H, W}, std::move(out), {image, theta},
        [H, W, minv, pts = std::move(pts), sx_scale, sy_scale](Tensor::Node& self) {
            const double* g = self.scratch.data();
            const std::vector<double>& img = self.parents[0]->value;
            bool want_img = self.parents[0]->requires_grad;
            bool want_theta = self.parents[1]->requires_grad;
            double* dimg = want_img ? self.parents[0]->scratch.data() : nullptr;
            Mat3 dminv = Mat3::zero();

            for (std::size_t oy = 0; oy < H; ++oy) {
                double yn = -1.0 + 2.0 * static_cast<double>(oy) / static_cast<double>(H - 1);
                for (std::size_t ox = 0; ox < W; ++ox) {
                    double go = g[oy * W + ox];
                    if (go == 0.0) continue;
                    const WarpPoint& p = pts[oy * W + ox];
                    double x0 = std::floor(p.sx), y0 = std::floor(p.sy);
                    double fx = p.sx - x0, fy = p.sy - y0;
                    long ix0 = static_cast<long>(x0), iy0 = static_cast<long>(y0);
                    auto in_range = [&](long yy, long xx) {
                        return yy >= 0 && yy < static_cast<long>(H) && xx >= 0 &&
                               xx < static_cast<long>(W);
                    };
                    auto tap = [&](long yy, long xx) -> double {
                        return in_range(yy, xx)
                                   ? img[static_cast<std::size_t>(yy) * W +
                                         static_cast<std::size_t>(xx)]
                                   : 0.0;
                    };

                    if (want_img) {
                        auto scatter = [&](long yy, long xx, double w) {
                            if (in_range(yy, xx))
                                dimg[static_cast<std::size_t>(yy) * W +
                                     static_cast<std::size_t>(xx)] += go * w;
                        };
                        scatter(iy0, ix0, (1 - fy) * (1 - fx));
                        scatter(iy0, ix0 + 1, (1 - fy) * fx);
                        scatter(iy0 + 1, ix0, fy * (1 - fx));
                        scatter(iy0 + 1, ix0 + 1, fy * fx);
                    }

                    if (want_theta) {
                        double v00 = tap(iy0, ix0), v01 = tap(iy0, ix0 + 1);
                        double v10 = tap(iy0 + 1, ix0), v11 = tap(iy0 + 1, ix0 + 1);
                        double dout_dsx = (1 - fy) * (v01 - v00) + fy * (v11 - v10);
                        double dout_dsy = (1 - fx) * (v10 - v00) + fx * (v11 - v01);
                        // sx = (hx/hw + 1) * sx_scale
                        double dsx = go * dout_dsx * sx_scale;
                        double dsy = go * dout_dsy * sy_scale;
                        double inv_hw = 1.0 / p.hw;
                        double e[3] = {-1.0 + 2.0 * static_cast<double>(ox) /
                                                  static_cast<double>(W - 1),
                                       yn, 1.0};
                        for (int k = 0; k < 3; ++k) {
                            dminv(0, k) += dsx * e[k] * inv_hw;
                            dminv(1, k) += dsy * e[k] * inv_hw;
                            dminv(2, k) += -(dsx * p.hx + dsy * p.hy) * e[k] * inv_hw * inv_hw;
                        }
                    }
                }
            }

            if (want_theta) {
                // d(theta^{-1}) = -Minv dTheta Minv  =>  dTheta = -Minv^T dMinv Minv^T
                Mat3 mt = transpose(minv);
                Mat3 dth = -1.0 * (mt * dminv * mt);
                double* pt = self.parents[1]->scratch.data();
                for (int i = 0; i < 9; ++i) pt[i] += dth.a[i];
            }
        });
}

Tensor stn_warp(const Tensor& image, const HomographyParams& theta) {
    validate(theta);
    return stn_warp(image, Tensor::from_mat3(theta.matrix), theta.mode);
}

}  // namespace iform
