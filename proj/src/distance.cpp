#include "iform/distance.hpp"

#include <cmath>

#include "iform/errors.hpp"

namespace iform {

void validate(const DistanceConfig& cfg) {
    if (cfg.lambda < 0.0) throw ContractError("distance config: lambda must be >= 0");
    if (!(cfg.arccos_eps > 0.0 && cfg.arccos_eps < 1e-3))
        throw ContractError("distance config: arccos_eps must lie in (0, 1e-3)");
}

Tensor euclidean_distance_t(const Tensor& theta_hat_matrix) {
    Tensor d = sub(theta_hat_matrix, Tensor::identity(3));
    return sqrt(sum(mul(d, d)));
}

double euclidean_distance(const HomographyParams& theta_hat) {
    validate(theta_hat);
    return euclidean_distance_t(Tensor::from_mat3(theta_hat.matrix)).value();
}

So3Projection so3_project(const Mat3& m) {
    Svd3Result r = svd3(m);
    double s = det(r.u * transpose(r.v));
    Mat3 d = Mat3::identity();
    d(2, 2) = s;
    So3Projection out;
    out.p = r.u * d * transpose(r.v);
    out.r_pi = m - out.p;
    return out;
}

Tensor so3_project_t(const Tensor& m, int* fallbacks) {
    if (m.shape() != std::vector<std::size_t>{3, 3})
        throw ShapeError("so3_project: expected (3,3), got " + shape_str(m.shape()));
    Mat3 mm = m.to_mat3();
    Svd3Result r = svd3(mm);
    double sgn = det(r.u * transpose(r.v));
    Mat3 d = Mat3::identity();
    d(2, 2) = sgn;
    Mat3 p = r.u * d * transpose(r.v);

    return Tensor::make_op(
        {3, 3}, std::vector<double>(p.a.begin(), p.a.end()), {m},
        [mm, r, d, fallbacks](Tensor::Node& self) {
            Tensor::Node* parent = self.parents[0].get();
            if (!parent->requires_grad) return;
            Mat3 gp;
            std::copy(self.scratch.begin(), self.scratch.end(), gp.a.begin());
            // P = U D V^T with D treated as constant (its sign entry is
            // locally constant): dU = gp V D, dV = gp^T U D.
            Mat3 du = gp * r.v * d;
            Mat3 dv = transpose(gp) * r.u * d;
            Svd3Grad g = svd3_backward(mm, r, du, {0, 0, 0}, dv);
            if (g.degenerate) {
                // stop-gradient fallback: projection treated as constant
                if (fallbacks) ++*fallbacks;
                return;
            }
            for (int i = 0; i < 9; ++i) parent->scratch[i] += g.dm.a[i];
        });
}

Tensor geodesic_distance_t(const Mat3& theta, const Tensor& theta_hat_matrix,
                           const DistanceConfig& cfg, int* fallbacks) {
    validate(cfg);
    if (std::abs(det(theta)) <= 1e-9) throw SingularityError("geodesic distance: singular theta");
    Tensor m = matmul(Tensor::from_mat3(inverse(theta)), theta_hat_matrix);
    Tensor p = so3_project_t(m, fallbacks);
    Tensor r_pi = sub(m, p);
    Tensor angle = arccos(scale(add_scalar(trace(p), -1.0), 0.5), cfg.arccos_eps);
    Tensor residual = trace(matmul(transpose(r_pi), r_pi));
    return add(angle, scale(residual, cfg.lambda));
}

double geodesic_distance(const HomographyParams& theta, const HomographyParams& theta_hat,
                         const DistanceConfig& cfg) {
    validate(theta);
    validate(theta_hat);
    return geodesic_distance_t(theta.matrix, Tensor::from_mat3(theta_hat.matrix), cfg).value();
}

Tensor inverseform_tile_distance(const Tensor& theta_hat_matrix, const DistanceConfig& cfg,
                                 int* fallbacks) {
    if (cfg.mode == DistanceMode::Euclidean) return euclidean_distance_t(theta_hat_matrix);
    return geodesic_distance_t(Mat3::identity(), theta_hat_matrix, cfg, fallbacks);
}

}  // namespace iform
