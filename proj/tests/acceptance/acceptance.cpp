// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line each. Criteria 5, 6 and 8 share one trained model; 9 drives
// the installed CLI binary (path from IFORM_BIN). Exit code = number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "iform/bench.hpp"
#include "iform/boundary.hpp"
#include "iform/distance.hpp"
#include "iform/homography.hpp"
#include "iform/io.hpp"
#include "iform/itn.hpp"
#include "iform/loss.hpp"
#include "iform/metrics.hpp"
#include "iform/rng.hpp"
#include "iform/segtoy.hpp"
#include "iform/svd3.hpp"
#include "iform/tensor.hpp"
#include "iform/threading.hpp"
#include "../testutil.hpp"

using namespace iform;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::set<int> g_only;

struct Shared {
    // trained on the default synthetic pair dataset by criterion 5
    ItnModel trained;
    bool have_trained = false;
    std::string work = "/tmp/iform_acceptance";
} g;

// default synthetic pair dataset (Affine6, tile 32)
constexpr std::uint64_t kSeed = 1;
constexpr std::size_t kMaps = 9000;
constexpr std::size_t kHoldoutMaps = 900;
constexpr std::size_t kTile = 32;
constexpr std::size_t kMapSide = 96;
constexpr int kClasses = 5;
constexpr int kItnEpochs = 16;
constexpr std::size_t kItnBatch = 256;
constexpr double kItnLr = 0.1;

BoundaryMap default_map(std::size_t idx) {
    return gen_shapes_sample(kSeed, idx, kMapSide, kMapSide, kClasses).gt_boundary;
}

void verdict(int criterion, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %d: %s (%.1f s)\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

bool enabled(int criterion) { return g_only.empty() || g_only.count(criterion) != 0; }

void run(int criterion, const std::function<std::pair<bool, std::string>()>& body) {
    if (!enabled(criterion)) return;
    auto t0 = Clock::now();
    bool pass = false;
    std::string detail;
    try {
        auto [p, d] = body();
        pass = p;
        detail = d;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    verdict(criterion, pass, detail, std::chrono::duration<double>(Clock::now() - t0).count());
}

char buf_detail[512];

// ---- criterion 1: Euclidean formula exactness -------------------------------------

std::pair<bool, std::string> c1() {
    double d_id = euclidean_distance({Mat3::identity(), ParamMode::Affine6});
    double d_tr = euclidean_distance({translation_matrix(0.1, 0.2), ParamMode::Affine6});
    bool ok = d_id == 0.0 && std::abs(d_tr - std::sqrt(0.05)) < 1e-12;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "euclidean d(I)=%.3g, |d(t(0.1,0.2))-sqrt(0.05)|=%.3g (tol 1e-12)", d_id,
                  std::abs(d_tr - std::sqrt(0.05)));
    return {ok, buf_detail};
}

// ---- criterion 2: geodesic formula exactness --------------------------------------

std::pair<bool, std::string> c2() {
    DistanceConfig cfg;
    cfg.mode = DistanceMode::Geodesic;
    cfg.lambda = 0.1;
    HomographyParams id{Mat3::identity(), ParamMode::Homography8};
    double worst = 0.0;
    for (double deg = 5.0; deg <= 170.0; deg += 5.0) {
        double a = deg * M_PI / 180.0;
        double d = geodesic_distance(id, {rotation_matrix(a), ParamMode::Homography8}, cfg);
        worst = std::max(worst, std::abs(d - a));
    }
    Mat3 m = Mat3::identity();
    m(0, 0) = 1.1;
    double d_diag = geodesic_distance(id, {m, ParamMode::Homography8}, cfg);
    bool ok = worst < 5e-4 && std::abs(d_diag - 0.001) < 5e-4;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "rotation sweep worst |d-alpha|=%.2e, |d(diag(1.1,1,1))-0.001|=%.2e (tol 5e-4)",
                  worst, std::abs(d_diag - 0.001));
    return {ok, buf_detail};
}

// ---- criterion 3: SO(3) projection over 10^4 random matrices -----------------------

std::pair<bool, std::string> c3() {
    Rng rng(303);
    double worst_orth = 0.0, worst_det = 0.0, worst_recon = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Mat3 m;
        for (double& v : m.a) v = rng.uniform(-2.0, 2.0);
        if (it % 7 == 0)
            for (int c = 0; c < 3; ++c) m(2, c) = m(0, c);  // rank-deficient cases included
        Svd3Result r = svd3(m);
        Mat3 s = Mat3::zero();
        for (int i = 0; i < 3; ++i) s(i, i) = r.sigma[i];
        worst_recon = std::max(worst_recon, frobenius_norm(m - r.u * s * transpose(r.v)));
        So3Projection pr = so3_project(m);
        worst_orth =
            std::max(worst_orth, frobenius_norm(transpose(pr.p) * pr.p - Mat3::identity()));
        worst_det = std::max(worst_det, std::abs(det(pr.p) - 1.0));
    }
    bool ok = worst_orth < 1e-8 && worst_det < 1e-8 && worst_recon < 1e-10;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "10^4 matrices: |P^T P - I|<=%.2e, |det P - 1|<=%.2e (tol 1e-8), "
                  "svd recon<=%.2e (tol 1e-10)",
                  worst_orth, worst_det, worst_recon);
    return {ok, buf_detail};
}

// ---- criterion 4: gradient suite ----------------------------------------------------

std::pair<bool, std::string> c4() {
    using iform::test::fd_check;
    using iform::test::random_vec;
    Rng rng(404);
    double worst_prim = 0.0, worst_comp = 0.0;
    auto prim = [&](std::function<Tensor(const std::vector<Tensor>&)> b,
                    std::vector<std::vector<std::size_t>> shapes,
                    std::vector<std::vector<double>> data) {
        worst_prim = std::max(worst_prim, fd_check(std::move(b), shapes, std::move(data)));
    };

    // primitive tensor ops at random points in [-2,2] (positive domain where needed)
    prim([](const std::vector<Tensor>& in) { return sum(mul(add(in[0], in[1]), in[0])); },
         {{2, 3}, {2, 3}}, {random_vec(rng, 6), random_vec(rng, 6)});
    prim([](const std::vector<Tensor>& in) { return sum(mul(sub(in[0], in[1]), in[1])); },
         {{2, 3}, {2, 3}}, {random_vec(rng, 6), random_vec(rng, 6)});
    prim([](const std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); },
         {{3, 4}, {4, 2}}, {random_vec(rng, 12), random_vec(rng, 8)});
    prim([](const std::vector<Tensor>& in) { return sum(mul(transpose(in[0]), transpose(in[0]))); },
         {{2, 5}}, {random_vec(rng, 10)});
    prim([](const std::vector<Tensor>& in) { return mean(mul(in[0], in[0])); }, {{7}},
         {random_vec(rng, 7)});
    prim([](const std::vector<Tensor>& in) { return trace(matmul(in[0], in[0])); }, {{3, 3}},
         {random_vec(rng, 9)});
    prim([](const std::vector<Tensor>& in) { return sum(relu(in[0])); }, {{8}},
         {random_vec(rng, 8)});
    prim([](const std::vector<Tensor>& in) { return sum(sigmoid(in[0])); }, {{8}},
         {random_vec(rng, 8)});
    prim([](const std::vector<Tensor>& in) { return sum(iform::log(in[0])); }, {{8}},
         {random_vec(rng, 8, 0.2, 2.0)});
    prim([](const std::vector<Tensor>& in) { return sum(iform::exp(in[0])); }, {{8}},
         {random_vec(rng, 8)});
    prim([](const std::vector<Tensor>& in) { return sum(mul(clamp(in[0], -1.5, 1.5), in[0])); },
         {{8}}, {random_vec(rng, 8)});
    prim([](const std::vector<Tensor>& in) { return sum(arccos(in[0])); }, {{8}},
         {random_vec(rng, 8, -0.9, 0.9)});
    bool prim_ok = worst_prim < 1e-5;

    std::string worst_name = "none";
    auto comp = [&](const char* name, std::function<Tensor(const std::vector<Tensor>&)> b,
                    std::vector<std::vector<std::size_t>> shapes,
                    std::vector<std::vector<double>> data) {
        double e = fd_check(std::move(b), shapes, std::move(data));
        if (e > worst_comp) {
            worst_comp = e;
            worst_name = name;
        }
    };

    // stn_warp w.r.t. image and theta
    {
        std::size_t H = 8, W = 8;
        std::vector<double> img(H * W);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                img[y * W + x] = 0.5 + 0.3 * std::sin(0.7 * double(x) + 0.9 * double(y));
        Mat3 m = translation_matrix(0.083, -0.041) * rotation_matrix(0.11) * scale_matrix(1.03);
        m(2, 0) = 0.012;
        m(2, 2) = 1.0;
        comp(
            "stn_warp",
            [](const std::vector<Tensor>& in) {
                Tensor w = stn_warp(in[0], in[1], ParamMode::Homography8);
                return sum(mul(w, w));
            },
            {{H, W}, {3, 3}}, {img, std::vector<double>(m.a.begin(), m.a.end())});
    }
    // euclidean distance
    {
        std::vector<double> m = random_vec(rng, 9, -0.4, 0.4);
        m[0] += 1.3;
        m[4] += 1.3;
        m[8] = 1.0;
        comp("euclidean", [](const std::vector<Tensor>& in) { return euclidean_distance_t(in[0]); },
             {{3, 3}}, {m});
    }
    // geodesic distance at a generic separated-spectrum point
    {
        DistanceConfig cfg;
        cfg.mode = DistanceMode::Geodesic;
        Mat3 anchor = translation_matrix(0.2, -0.15) * rotation_matrix(0.8) * scale_matrix(1.3) *
                      shear_matrix(0.2);
        anchor(2, 2) = 1.0;
        Mat3 theta = translation_matrix(-0.1, 0.05) * rotation_matrix(-0.2);
        theta(2, 2) = 1.0;
        comp(
            "geodesic",
            [&](const std::vector<Tensor>& in) { return geodesic_distance_t(theta, in[0], cfg); },
            {{3, 3}}, {std::vector<double>(anchor.a.begin(), anchor.a.end())});
    }
    // pixel cross-entropy
    {
        std::size_t C = 3, H = 4, W = 4;
        std::vector<int> labels(H * W);
        for (int& l : labels) l = rng.uniform_int(0, 2);
        comp("pixel_xe",
             [labels](const std::vector<Tensor>& in) { return pixel_cross_entropy(in[0], labels); },
             {{C, H, W}}, {random_vec(rng, C * H * W)});
    }
    // balanced boundary cross-entropy
    {
        std::size_t n = 8;
        BoundaryMap gt;
        gt.height = gt.width = n;
        gt.kind = BoundaryKind::Binary;
        gt.values.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n * n; i += 3) gt.values[i] = 1.0;
        comp("balanced_xe",
             [gt](const std::vector<Tensor>& in) { return balanced_boundary_xe(in[0], gt); },
             {{n, n}}, {random_vec(rng, n * n, 0.1, 0.9)});
    }
    // inverseform loss through a frozen model (default Euclidean mode)
    {
        ItnModel m = make_itn(8, ParamMode::Affine6, DistanceMode::Euclidean, 404, 16);
        Rng wr(405);
        for (double& w : m.weights[2].leaf_data()) w = 0.02 * wr.gaussian();
        ItnModel fz = freeze(m);
        BoundaryMap gt;
        gt.height = gt.width = 16;
        gt.kind = BoundaryKind::Binary;
        gt.values.assign(256, 0.0);
        for (std::size_t i = 0; i < 256; i += 3) gt.values[i] = 1.0;
        DistanceConfig cfg;
        comp(
            "inverseform_loss",
            [&](const std::vector<Tensor>& in) {
                return inverseform_loss(in[0], gt, fz, cfg, 8, 0.02).loss;
            },
            {{16, 16}}, {random_vec(rng, 256, 0.05, 0.95)});
    }
    // total loss through seg_forward on a 16x16 input (image gradient)
    {
        SegModel model = make_seg_model(16, 16, 3, 777, 4);
        ItnModel itn = freeze(make_itn(8, ParamMode::Affine6, DistanceMode::Euclidean, 778, 16));
        ShapesSample s = gen_shapes_sample(779, 0, 16, 16, 3);
        LossWeights w;
        DistanceConfig cfg;
        auto loss_through = [&](const Tensor& img) {
            SegForward f = seg_forward(model, img);
            Tensor xe = pixel_cross_entropy(f.y_logits, s.labels);
            Tensor bxe = balanced_boundary_xe(f.b_pred, s.gt_boundary);
            InverseFormResult r = inverseform_loss(f.b_pred, s.gt_boundary, itn, cfg, 8, 0.02);
            return total_loss(xe, bxe, r.loss, w);
        };
        Tensor img = Tensor::from_data({3, 16, 16}, s.image, true);
        loss_through(img).backward();
        double worst = 0.0;
        for (std::size_t idx = 0; idx < img.size(); idx += 29) {
            double best = 1e300;
            for (double h : {1e-6, 8e-6, 6.4e-5, 2.5e-7}) {
                std::vector<double> probe = s.image;
                probe[idx] += h;
                double fp = loss_through(Tensor::from_data({3, 16, 16}, probe)).value();
                probe[idx] -= 2 * h;
                double fm = loss_through(Tensor::from_data({3, 16, 16}, probe)).value();
                double fd = (fp - fm) / (2 * h);
                best = std::min(best, std::abs(img.grad()[idx] - fd) / (std::abs(fd) + 1e-8));
                if (best < 1e-6) break;
            }
            worst = std::max(worst, best);
        }
        if (worst > worst_comp) {
            worst_comp = worst;
            worst_name = "seg_forward";
        }
    }

    bool ok = prim_ok && worst_comp < 1e-4;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "primitive ops worst rel err %.2e (tol 1e-5); composite worst %.2e in %s "
                  "(tol 1e-4)",
                  worst_prim, worst_comp, worst_name.c_str());
    return {ok, buf_detail};
}

// ---- criterion 5: ITN training on the default dataset -------------------------------

std::pair<bool, std::string> c5() {
    TransformRanges ranges;
    PairDataset train([](std::size_t i) { return default_map(i); }, kMaps, ranges,
                      ParamMode::Affine6, kTile, 0.02, kSeed);
    PairDataset holdout([](std::size_t i) { return default_map(kMaps + i); }, kHoldoutMaps,
                        ranges, ParamMode::Affine6, kTile, 0.02,
                        Rng::stream(kSeed, "holdout-thetas").next_u64());

    ItnModel model = make_itn(kTile, ParamMode::Affine6, DistanceMode::Euclidean, kSeed);
    ItnTrainOptions opts;
    opts.epochs = kItnEpochs;
    opts.batch_size = kItnBatch;
    opts.learning_rate = kItnLr;
    opts.seed = kSeed;
    LossCurve curve = train_itn(model, train, opts, &holdout);

    TilePairBatch hold =
        holdout.load_range(0, std::min<std::size_t>(5000, holdout.pair_count()));
    double mse = holdout_parameter_mse(model, hold);
    double baseline = identity_baseline_mse(hold);
    bool decreasing = curve.train_loss.size() >= 3 && curve.train_loss[1] < curve.train_loss[0] &&
                      curve.train_loss[2] < curve.train_loss[1];

    g.trained = freeze(model);
    g.have_trained = true;
    save_checkpoint(g.trained, g.work + "/itn_trained.ifck");

    bool ok = mse < 0.01 && baseline >= 3.0 * mse && decreasing;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "%zu train pairs, %d epochs: holdout MSE %.5f (tol < 0.01), identity baseline "
                  "%.5f (needs >= 3x = %.5f), first-3-epoch loss %s",
                  train.pair_count(), kItnEpochs, mse, baseline, 3.0 * mse,
                  decreasing ? "strictly decreasing" : "NOT decreasing");
    return {ok, buf_detail};
}

// ---- criterion 6: ordering phenomenon over 3-pixel shifts ----------------------------

std::pair<bool, std::string> c6() {
    if (!g.have_trained) {
        ItnModel m = load_checkpoint(g.work + "/itn_trained.ifck");
        g.trained = m.frozen ? m : freeze(m);
        g.have_trained = true;
    }
    // informative tiles from held-out maps, each tagged with its source map
    std::vector<std::vector<double>> tiles;
    std::vector<std::size_t> tile_map;
    std::size_t map_idx = kMaps;  // held-out range
    while (tiles.size() < 600) {
        BoundaryMap bm = default_map(map_idx);
        TileGrid grid = tile_split(bm, kTile);
        for (const std::vector<double>& t : grid.tiles)
            if (tile_is_informative(t, 0.02)) {
                tiles.push_back(t);
                tile_map.push_back(map_idx);
            }
        ++map_idx;
    }

    HomographyParams shift3{pixel_translation_matrix(3, 3, kTile, kTile), ParamMode::Affine6};
    DistanceConfig cfg;  // Euclidean, the default mode
    Rng rng(606);
    std::size_t n = 500, if_correct = 0, xe_inverted = 0, self_correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double>& x = tiles[i];
        // unrelated: an informative tile from a different source map
        std::size_t j = i;
        while (tile_map[j] == tile_map[i])
            j = rng.next_u64() % tiles.size();
        const std::vector<double>& unrelated = tiles[j];

        Tensor xt = Tensor::from_data({kTile, kTile}, x);
        Tensor warped = stn_warp(xt, shift3);
        Tensor unrel = Tensor::from_data({kTile, kTile}, unrelated);

        auto if_dist = [&](const Tensor& pred) {
            Tensor vec = itn_forward(g.trained, pred, xt);
            return inverseform_tile_distance(params_to_matrix(vec, g.trained.mode), cfg).value();
        };
        double d_self = if_dist(xt);
        double d_shift = if_dist(warped);
        double d_unrel = if_dist(unrel);
        if (d_shift < d_unrel) ++if_correct;
        if (d_self < d_shift && d_shift < d_unrel) ++self_correct;

        BoundaryMap gt;
        gt.height = gt.width = kTile;
        gt.kind = BoundaryKind::Binary;
        gt.values = x;
        double xe_shift = balanced_boundary_xe(warped, gt).value();
        double xe_unrel = balanced_boundary_xe(unrel, gt).value();
        if (xe_shift > xe_unrel) ++xe_inverted;
    }
    double if_frac = double(if_correct) / double(n);
    double xe_frac = double(xe_inverted) / double(n);
    double self_frac = double(self_correct) / double(n);

    // map-level ordering of the tiled loss: loss(b,b) < loss(shift3(b),b) <
    // loss(unrelated,b)
    std::size_t map_ok = 0, map_n = 60;
    {
        HomographyParams shift_map{pixel_translation_matrix(3, 3, kMapSide, kMapSide),
                                   ParamMode::Affine6};
        DistanceConfig mcfg;
        for (std::size_t i = 0; i < map_n; ++i) {
            BoundaryMap b = default_map(kMaps + 2 * i);
            BoundaryMap ub = default_map(kMaps + 2 * i + 1);
            Tensor bt = boundary_to_tensor(b);
            Tensor shifted = stn_warp(bt, shift_map);
            auto lv = [&](const Tensor& pred) {
                return inverseform_loss(pred, b, g.trained, mcfg, kTile, 0.02).loss.value();
            };
            double l_self = lv(bt);
            double l_shift = lv(shifted);
            double l_unrel = lv(boundary_to_tensor(ub));
            if (l_self < l_shift && l_shift < l_unrel) ++map_ok;
        }
    }
    double map_frac = double(map_ok) / double(map_n);

    // sweep endpoints: the learned distance grows from magnitude 0 to the top
    double sweep_lo = 0.0, sweep_hi = 0.0;
    {
        SweepSpec spec;
        spec.axis = SweepAxis::Translation;
        spec.magnitudes = {0.0, 0.05, 0.09375, 0.15};
        spec.num_tiles = 100;
        spec.seed = 616;
        spec.tile_size = kTile;
        std::vector<BoundaryMap> maps;
        for (std::size_t i = 0; i < 20; ++i) maps.push_back(default_map(kMaps + 200 + i));
        DistanceConfig cfg2;
        SweepTable table = run_sweep(spec, maps, g.trained, cfg2);
        for (const SweepCell& c : table.cells) {
            if (c.measure != "inverseform") continue;
            if (c.magnitude == 0.0) sweep_lo = c.mean;
            if (c.magnitude == 0.15) sweep_hi = c.mean;
        }
    }

    bool ok = if_frac >= 0.85 && xe_frac >= 0.5 && map_frac >= 0.85 && sweep_lo < sweep_hi;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "%zu held-out tiles, 3px shift: distance orders (x,t(x)) < (x,unrelated) on "
                  "%.1f%% (needs >= 85%%); XE inverts on %.1f%% (needs >= 50%%); tile chain "
                  "self<shift<unrelated %.1f%%; map-level loss chain %.1f%% (needs >= 85%%); "
                  "sweep endpoints %.3f -> %.3f (must grow)",
                  n, 100 * if_frac, 100 * xe_frac, 100 * self_frac, 100 * map_frac, sweep_lo,
                  sweep_hi);
    return {ok, buf_detail};
}

// ---- criteria 7+8: paired seg runs -----------------------------------------------------

struct SegRun {
    double miou, mba, acc;
    std::size_t params, macs;
};

SegRun one_seg_run(const ItnModel& itn, double gamma, std::uint64_t seed,
                   const std::vector<ShapesSample>& train, const std::vector<ShapesSample>& val) {
    SegModel model = make_seg_model(kMapSide, kMapSide, kClasses, seed);
    LossWeights w;
    w.beta = 1.0;
    w.gamma = gamma;
    DistanceConfig cfg;
    SegTrainOptions opts;
    opts.epochs = 3;
    opts.batch_size = 8;
    opts.learning_rate = 0.15;
    opts.seed = seed;
    opts.tile_size = kTile;
    std::vector<SegEpochMetrics> hist = train_seg(model, train, val, itn, w, cfg, opts);
    SegRun r;
    r.miou = hist.back().val_miou;
    r.mba = hist.back().val_mba;
    r.acc = hist.back().val_pixel_acc;
    r.params = inference_param_count(model);
    r.macs = inference_mac_count(model);
    return r;
}

std::vector<SegRun> g_runs_base, g_runs_if;

std::pair<bool, std::string> c8() {
    if (!g.have_trained) {
        ItnModel m = load_checkpoint(g.work + "/itn_trained.ifck");
        g.trained = m.frozen ? m : freeze(m);
        g.have_trained = true;
    }
    const std::size_t train_n = 520, val_n = 120;
    double mba0 = 0, mba1 = 0, miou0 = 0, miou1 = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::vector<ShapesSample> train =
            gen_shapes(train_n, kMapSide, kMapSide, kClasses,
                       Rng::stream(seed, "seg-train-data").next_u64());
        std::vector<ShapesSample> val = gen_shapes(
            val_n, kMapSide, kMapSide, kClasses, Rng::stream(seed, "seg-val-data").next_u64());
        SegRun base = one_seg_run(g.trained, 0.0, seed, train, val);
        SegRun with_if = one_seg_run(g.trained, 0.5, seed, train, val);
        g_runs_base.push_back(base);
        g_runs_if.push_back(with_if);
        mba0 += base.mba;
        mba1 += with_if.mba;
        miou0 += base.miou;
        miou1 += with_if.miou;
        std::printf("  seed %llu: gamma=0   miou %.4f mba %.4f | gamma=0.5 miou %.4f mba %.4f\n",
                    static_cast<unsigned long long>(seed), base.miou, base.mba, with_if.miou,
                    with_if.mba);
        std::fflush(stdout);
    }
    mba0 /= 5;
    mba1 /= 5;
    miou0 /= 5;
    miou1 /= 5;
    bool ok = mba1 >= mba0 && miou1 >= miou0 - 0.005;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "5 paired runs: mean mBA %.4f (gamma=0.5) vs %.4f (gamma=0) [needs >=]; mean "
                  "mIoU %.4f vs %.4f [needs >= -0.005]",
                  mba1, mba0, miou1, miou0);
    return {ok, buf_detail};
}

std::pair<bool, std::string> c7() {
    // uses the trained models of criterion 8 when available; otherwise two
    // fresh differently-seeded models stand in (counts depend only on shape)
    std::size_t p0, m0, p1, m1;
    if (!g_runs_base.empty()) {
        p0 = g_runs_base[0].params;
        m0 = g_runs_base[0].macs;
        p1 = g_runs_if[0].params;
        m1 = g_runs_if[0].macs;
    } else {
        SegModel a = make_seg_model(kMapSide, kMapSide, kClasses, 1);
        SegModel b = make_seg_model(kMapSide, kMapSide, kClasses, 2);
        p0 = inference_param_count(a);
        m0 = inference_mac_count(a);
        p1 = inference_param_count(b);
        m1 = inference_mac_count(b);
    }
    bool ok = p0 == p1 && m0 == m1;
    std::snprintf(buf_detail, sizeof(buf_detail),
                  "inference path: %zu params / %zu MACs (gamma=0) vs %zu / %zu (gamma=0.5), "
                  "exact equality required",
                  p0, m0, p1, m1);
    return {ok, buf_detail};
}

// ---- criterion 9: bitwise determinism through the CLI -----------------------------------

std::string cli_bin() {
    if (const char* env = std::getenv("IFORM_BIN")) return env;
    return "./tools/inverseform";
}

bool same_file(const std::string& a, const std::string& b) {
    return read_file(a) == read_file(b);
}

std::pair<bool, std::string> c9() {
    std::string bin = cli_bin();
    std::string d = g.work + "/det";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    auto sh = [&](const std::string& cmd) {
        std::string full = cmd + " > /dev/null 2>&1";
        return std::system(full.c_str()) == 0;
    };
    // identical config = identical command line, including --out: snapshot the
    // artifacts, re-run in place, then compare bytes
    auto snapshot = [&](const std::string& dir, const std::string& copy) {
        std::filesystem::copy(dir, copy, std::filesystem::copy_options::recursive);
    };
    bool ran = true;
    std::string gp = bin + " gen-pairs --maps 25 --count 120 --seed 7 --out " + d + "/p";
    std::string ti = bin + " train-itn --data " + d + "/p --epochs 2 --batch_size 64 --lr 0.03" +
                     " --seed 7 --out " + d + "/t";
    std::string be = bin + " bench --checkpoint " + d + "/t/itn.ifck --maps 6 --num_tiles 12" +
                     " --seed 7 --magnitudes 0,0.09 --out " + d + "/b";
    ran = ran && sh(gp);
    snapshot(d + "/p", d + "/p_snap");
    ran = ran && sh(gp);
    ran = ran && sh(ti);
    snapshot(d + "/t", d + "/t_snap");
    ran = ran && sh(ti);
    ran = ran && sh(be);
    snapshot(d + "/b", d + "/b_snap");
    ran = ran && sh(be);
    if (!ran) return {false, "a CLI invocation failed (binary: " + bin + ")"};

    bool ok = true;
    for (const char* f : {"sources.iftn", "warped.iftn", "targets.iftn", "thetas.iftn",
                          "manifest.json", "run.json"})
        ok = ok && same_file(d + "/p/" + f, d + "/p_snap/" + f);
    for (const char* f : {"itn.ifck", "loss_curve.json", "run.json"})
        ok = ok && same_file(d + "/t/" + f, d + "/t_snap/" + f);
    for (const char* f : {"sweep.csv", "sweep.svg", "run.json"})
        ok = ok && same_file(d + "/b/" + f, d + "/b_snap/" + f);
    return {ok, ok ? "gen-pairs, train-itn and bench re-runs are byte-identical"
                   : "re-run artifacts differ"};
}

// ---- criterion 10: format round-trips ----------------------------------------------------

std::pair<bool, std::string> c10() {
    Rng rng(1010);
    std::string d = g.work + "/fmt";
    std::filesystem::create_directories(d);
    bool ok = true;

    // IFTN
    std::vector<double> data(60);
    for (double& v : data) v = rng.uniform(-3.0, 3.0);
    write_iftn(d + "/a.iftn", Tensor::from_data({3, 4, 5}, data));
    write_iftn(d + "/b.iftn", read_iftn(d + "/a.iftn"));
    ok = ok && same_file(d + "/a.iftn", d + "/b.iftn");

    // IFCK
    ItnModel m = make_itn(8, ParamMode::Homography8, DistanceMode::Geodesic, 9, 16);
    save_checkpoint(m, d + "/a.ifck");
    save_checkpoint(load_checkpoint(d + "/a.ifck"), d + "/b.ifck");
    ok = ok && same_file(d + "/a.ifck", d + "/b.ifck");

    // PGM (quantization is idempotent after the first write)
    BoundaryMap bm;
    bm.height = 9;
    bm.width = 7;
    bm.kind = BoundaryKind::Probability;
    bm.values.resize(63);
    for (double& v : bm.values) v = rng.uniform01();
    save_boundary_pgm(d + "/a.pgm", bm);
    save_boundary_pgm(d + "/b.pgm", load_boundary_pgm(d + "/a.pgm", BoundaryKind::Probability));
    ok = ok && same_file(d + "/a.pgm", d + "/b.pgm");

    // shapes dataset manifest + files
    std::vector<ShapesSample> s = gen_shapes(2, 32, 32, 4, 11);
    save_shapes_dataset(d + "/ds_a", s);
    save_shapes_dataset(d + "/ds_b", load_shapes_dataset(d + "/ds_a"));
    for (const char* f : {"manifest.json", "sample_0.ppm", "sample_0_labels.iftn",
                          "sample_0_boundary.pgm", "sample_1.ppm"})
        ok = ok && same_file(d + "/ds_a/" + f, d + "/ds_b/" + f);

    return {ok, ok ? "IFTN, IFCK, PGM and dataset manifests survive write-read-write byte-identically"
                   : "a format round-trip changed bytes"};
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) g_only.insert(std::atoi(argv[i]));
    int threads = 1;
    if (const char* env = std::getenv("IF_THREADS")) threads = std::atoi(env);
    set_threads(threads);
    std::filesystem::create_directories(g.work);

    std::printf("acceptance suite (threads=%d; results are thread-count invariant)\n", threads);
    run(1, c1);
    run(2, c2);
    run(3, c3);
    run(4, c4);
    run(5, c5);
    run(6, c6);
    run(8, c8);
    run(7, c7);
    run(9, c9);
    run(10, c10);

    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
