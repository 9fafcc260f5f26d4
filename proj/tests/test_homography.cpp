#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iform/homography.hpp"
#include "iform/rng.hpp"
#include "testutil.hpp"

using namespace iform;
using iform::test::fd_check;
using iform::test::random_vec;

TEST_CASE("to_vector identity layouts") {
    HomographyParams id6{Mat3::identity(), ParamMode::Affine6};
    CHECK(to_vector(id6) == std::vector<double>{1, 0, 0, 0, 1, 0});
    HomographyParams id8{Mat3::identity(), ParamMode::Homography8};
    CHECK(to_vector(id8) == std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0});
}

TEST_CASE("to_vector reads translation entries directly") {
    HomographyParams t{translation_matrix(0.1, 0.2), ParamMode::Affine6};
    CHECK(to_vector(t) == std::vector<double>{1, 0, 0.1, 0, 1, 0.2});
}

TEST_CASE("from_vector identity and errors") {
    HomographyParams p = from_vector({1, 0, 0, 0, 1, 0}, ParamMode::Affine6);
    CHECK(p.matrix == Mat3::identity());
    CHECK_THROWS_AS(from_vector({1, 0, 0}, ParamMode::Affine6), ContractError);
    CHECK_THROWS_AS(from_vector({1, 0, 0, 0, 1, 0}, ParamMode::Homography8), ContractError);
    CHECK_THROWS_AS(from_vector({0, 0, 0, 0, 0, 0}, ParamMode::Affine6), SingularityError);
}

TEST_CASE("to_vector / from_vector round-trip is bitwise over random vectors") {
    Rng rng(61);
    for (int it = 0; it < 200; ++it) {
        ParamMode mode = it % 2 ? ParamMode::Homography8 : ParamMode::Affine6;
        std::vector<double> v(static_cast<std::size_t>(param_count(mode)));
        // near-identity-ish so the matrix stays invertible
        std::vector<double> id = identity_vector(mode);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = id[i] + rng.uniform(-0.4, 0.4);
        HomographyParams p;
        try {
            p = from_vector(v, mode);
        } catch (const SingularityError&) {
            continue;
        }
        CHECK(to_vector(p) == v);
    }
}

TEST_CASE("sample_transform with zero ranges is the identity") {
    TransformRanges r;
    r.max_translation = 0;
    r.max_rotation = 0;
    r.scale_lo = r.scale_hi = 1.0;
    r.max_shear = 0;
    r.max_perspective = 0;
    HomographyParams p = sample_transform(r, 7, ParamMode::Affine6);
    CHECK(frobenius_norm(p.matrix - Mat3::identity()) == 0.0);
}

TEST_CASE("rotation-only sampling yields a rotation within range") {
    TransformRanges r;
    r.max_translation = 0;
    r.max_rotation = M_PI / 6;
    r.scale_lo = r.scale_hi = 1.0;
    r.max_shear = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        HomographyParams p = sample_transform(r, seed, ParamMode::Affine6);
        CHECK(std::abs(det(p.matrix) - 1.0) < 1e-12);
        CHECK(frobenius_norm(transpose(p.matrix) * p.matrix - Mat3::identity()) < 1e-12);
        double angle = std::atan2(p.matrix(1, 0), p.matrix(0, 0));
        CHECK(std::abs(angle) <= M_PI / 6 + 1e-12);
    }
}

TEST_CASE("sample_transform is deterministic per seed") {
    TransformRanges r;
    HomographyParams a = sample_transform(r, 1234, ParamMode::Homography8);
    HomographyParams b = sample_transform(r, 1234, ParamMode::Homography8);
    CHECK(a.matrix == b.matrix);
    HomographyParams c = sample_transform(r, 1235, ParamMode::Homography8);
    CHECK(!(c.matrix == a.matrix));
}

TEST_CASE("Affine6 sampling never emits perspective entries") {
    TransformRanges r;
    r.max_perspective = 0.5;  // would be visible if the mode were ignored
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        HomographyParams p = sample_transform(r, seed, ParamMode::Affine6);
        CHECK(p.matrix(2, 0) == 0.0);
        CHECK(p.matrix(2, 1) == 0.0);
    }
}

// ---- stn_warp -------------------------------------------------------------------

TEST_CASE("identity warp is bitwise exact") {
    Rng rng(5);
    Tensor img = Tensor::from_data({5, 7}, random_vec(rng, 35, 0.0, 1.0));
    HomographyParams id{Mat3::identity(), ParamMode::Affine6};
    Tensor out = stn_warp(img, id);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.at(i) == img.at(i));
}

TEST_CASE("one-pixel translation shifts and zero-fills the first column") {
    // 4x4 ramp with distinct values
    std::vector<double> v(16);
    for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i + 1) / 16.0;
    Tensor img = Tensor::from_data({4, 4}, v);
    HomographyParams t{pixel_translation_matrix(1, 0, 4, 4), ParamMode::Affine6};
    Tensor out = stn_warp(img, t);
    for (std::size_t y = 0; y < 4; ++y) {
        CHECK(out.at(y * 4 + 0) == 0.0);
        for (std::size_t x = 1; x < 4; ++x) CHECK(out.at(y * 4 + x) == img.at(y * 4 + x - 1));
    }
}

TEST_CASE("warp round-trip recovers interior pixels of a linear ramp") {
    // bilinear sampling is exact on linear images, so warp o inverse-warp
    // must return the ramp away from the zero-padded border
    std::size_t H = 16, W = 16;
    std::vector<double> v(H * W);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            v[y * W + x] = 0.2 + 0.03 * static_cast<double>(x) + 0.02 * static_cast<double>(y);
    Tensor img = Tensor::from_data({H, W}, v);

    Mat3 m = translation_matrix(0.07, -0.05) * rotation_matrix(0.1) * scale_matrix(1.04);
    m(2, 2) = 1.0;
    HomographyParams theta{m, ParamMode::Affine6};
    Tensor once = stn_warp(img, theta);
    Tensor back = stn_warp(once, inverse_params(theta));
    for (std::size_t y = 3; y < H - 3; ++y)
        for (std::size_t x = 3; x < W - 3; ++x)
            CHECK(back.at(y * W + x) == doctest::Approx(v[y * W + x]).epsilon(1e-6));
}

TEST_CASE("stn_warp rejects singular theta and tiny images") {
    Tensor img = Tensor::zeros({4, 4});
    Mat3 z = Mat3::zero();
    z(2, 2) = 1.0;
    CHECK_THROWS_AS(stn_warp(img, Tensor::from_mat3(z), ParamMode::Affine6), SingularityError);
    CHECK_THROWS_AS(stn_warp(Tensor::zeros({1, 4}), Tensor::from_mat3(Mat3::identity()),
                             ParamMode::Affine6),
                    ContractError);
}

TEST_CASE("stn_warp gradients match finite differences") {
    Rng rng(9);
    // smooth random image so the FD probe stays away from bilinear kinks
    std::size_t H = 8, W = 8;
    std::vector<double> img(H * W);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            img[y * W + x] = 0.5 + 0.3 * std::sin(0.7 * static_cast<double>(x) +
                                                  0.9 * static_cast<double>(y));
    Mat3 m = translation_matrix(0.083, -0.041) * rotation_matrix(0.11) * scale_matrix(1.03) *
             shear_matrix(0.04);
    m(2, 0) = 0.011;
    m(2, 1) = -0.007;
    m(2, 2) = 1.0;
    std::vector<double> theta(m.a.begin(), m.a.end());

    auto build = [&](const std::vector<Tensor>& in) {
        Tensor w = stn_warp(in[0], in[1], ParamMode::Homography8);
        return sum(mul(w, w));
    };
    double err = fd_check(build, {{H, W}, {3, 3}}, {img, theta});
    CHECK(err < 1e-4);
    (void)rng;
}

TEST_CASE("params_to_matrix embeds and routes gradients") {
    Rng rng(13);
    std::vector<double> v = random_vec(rng, 8, -0.3, 0.3);
    v[0] += 1.0;
    v[4] += 1.0;
    auto build = [&](const std::vector<Tensor>& in) {
        Tensor m = params_to_matrix(in[0], ParamMode::Homography8);
        return sum(mul(m, m));
    };
    CHECK(fd_check(build, {{8}}, {v}) < 1e-5);

    Tensor m = params_to_matrix(Tensor::from_data({6}, {1, 0, 0.1, 0, 1, 0.2}),
                                ParamMode::Affine6);
    CHECK(m.to_mat3() == translation_matrix(0.1, 0.2));
}
