// Command-line front end: reproducible workflows over the pair generator, the
// inverse-transformation network, the toy segmentation harness and the
// distance-comparison bench. Every run resolves its configuration from
// defaults < config file < flags and records it in <out>/run.json.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "iform/bench.hpp"
#include "iform/boundary.hpp"
#include "iform/config.hpp"
#include "iform/distance.hpp"
#include "iform/errors.hpp"
#include "iform/io.hpp"
#include "iform/itn.hpp"
#include "iform/loss.hpp"
#include "iform/metrics.hpp"
#include "iform/rng.hpp"
#include "iform/segtoy.hpp"
#include "iform/threading.hpp"

using namespace iform;
using nlohmann::json;

namespace {

ParamMode parse_mode(const std::string& s) {
    if (s == "affine6") return ParamMode::Affine6;
    if (s == "homography8") return ParamMode::Homography8;
    throw ConfigError("mode must be affine6 or homography8, got '" + s + "'");
}

std::string mode_name(ParamMode m) {
    return m == ParamMode::Affine6 ? "affine6" : "homography8";
}

DistanceMode parse_distance_mode(const std::string& s) {
    if (s == "euclidean") return DistanceMode::Euclidean;
    if (s == "geodesic") return DistanceMode::Geodesic;
    throw ConfigError("distance_mode must be euclidean or geodesic, got '" + s + "'");
}

TransformRanges ranges_from(const RunConfig& cfg) {
    TransformRanges r;
    r.max_translation = cfg.get_double("max_translation");
    r.max_rotation = cfg.get_double("max_rotation_deg") * 0.017453292519943295;
    r.scale_lo = cfg.get_double("scale_lo");
    r.scale_hi = cfg.get_double("scale_hi");
    r.max_shear = cfg.get_double("max_shear");
    r.max_perspective = cfg.get_double("max_perspective");
    validate(r);
    return r;
}

void declare_ranges(RunConfig& cfg) {
    cfg.declare("max_translation", "0.15", "translation limit as a fraction of the tile side");
    cfg.declare("max_rotation_deg", "15", "rotation limit in degrees");
    cfg.declare("scale_lo", "0.85", "lower scale bound");
    cfg.declare("scale_hi", "1.15", "upper scale bound");
    cfg.declare("max_shear", "0.1", "shear limit");
    cfg.declare("max_perspective", "0.001", "perspective limit (homography8 only)");
}

void declare_shapes(RunConfig& cfg) {
    cfg.declare("map_height", "96", "generated map height in pixels");
    cfg.declare("map_width", "96", "generated map width in pixels");
    cfg.declare("num_classes", "5", "label classes including background");
}

void write_run_json(const std::string& dir, const std::string& command, const RunConfig& cfg) {
    json j;
    j["command"] = command;
    json c = json::object();
    for (const auto& [k, v] : cfg.resolved()) c[k] = v;
    j["config"] = c;
    write_file_atomic(dir + "/run.json", j.dump(2) + "\n");
}

// shared pieces of every command: --config file, flag overrides, threads
struct CommonArgs {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> flag_overrides;
    int threads = 0;
};

void attach_config_flags(CLI::App* app, RunConfig& cfg, CommonArgs& common) {
    app->add_option("--config", common.config_file, "key=value config file");
    app->add_option("--threads", common.threads,
                    "worker cap (results are identical for any value); env IF_THREADS");
    for (const auto& [key, value] : cfg.resolved()) {
        std::string k = key;
        app->add_option_function<std::string>(
               "--" + key,
               [&common, k](const std::string& v) { common.flag_overrides.emplace_back(k, v); },
               "")
            ->type_name("VAL");
        (void)value;
    }
}

void resolve_config(RunConfig& cfg, const CommonArgs& common) {
    if (!common.config_file.empty()) cfg.load(RunConfig::parse_file(common.config_file));
    for (const auto& [k, v] : common.flag_overrides) cfg.set(k, v);

    int threads = 1;
    if (const char* env = std::getenv("IF_THREADS")) threads = std::atoi(env);
    if (common.threads > 0) threads = common.threads;
    set_threads(threads);
}

BoundaryMap shapes_boundary(std::uint64_t seed, std::size_t idx, const RunConfig& cfg) {
    return gen_shapes_sample(seed, idx, cfg.get_u64("map_height"), cfg.get_u64("map_width"),
                             static_cast<int>(cfg.get_int("num_classes")))
        .gt_boundary;
}

// ---- gen-pairs --------------------------------------------------------------------

void declare_gen_pairs(RunConfig& cfg) {
    cfg.declare("seed", "1", "root seed for all random streams");
    cfg.declare("maps", "400", "number of source boundary maps to scan");
    cfg.declare("count", "2000", "maximum number of pairs to materialize");
    cfg.declare("tile_size", "32", "tile side in pixels");
    cfg.declare("mode", "affine6", "parameter mode: affine6 | homography8");
    cfg.declare("min_boundary_fraction", "0.02", "informative-tile threshold");
    cfg.declare("out", "pairs_out", "output directory");
    declare_shapes(cfg);
    declare_ranges(cfg);
}

int cmd_gen_pairs(RunConfig& cfg) {
    std::uint64_t seed = cfg.get_u64("seed");
    ParamMode mode = parse_mode(cfg.get("mode"));
    std::size_t tile = cfg.get_u64("tile_size");
    std::string out = cfg.get("out");

    PairDataset ds([&](std::size_t i) { return shapes_boundary(seed, i, cfg); },
                   cfg.get_u64("maps"), ranges_from(cfg), mode, tile,
                   cfg.get_double("min_boundary_fraction"), seed);
    std::size_t count = std::min<std::size_t>(cfg.get_u64("count"), ds.pair_count());
    TilePairBatch pairs = ds.load_range(0, count);

    std::filesystem::create_directories(out);
    std::size_t k = static_cast<std::size_t>(param_count(mode));
    write_iftn(out + "/sources.iftn", Tensor::from_data({count, tile, tile}, pairs.sources));
    write_iftn(out + "/warped.iftn", Tensor::from_data({count, tile, tile}, pairs.warped));
    write_iftn(out + "/targets.iftn", Tensor::from_data({count, k}, pairs.targets));
    write_iftn(out + "/thetas.iftn", Tensor::from_data({count, 3, 3}, pairs.thetas));

    json manifest;
    manifest["kind"] = "pair-dataset";
    manifest["count"] = count;
    manifest["tile_size"] = tile;
    manifest["mode"] = mode_name(mode);
    manifest["seed"] = seed;
    manifest["min_boundary_fraction"] = cfg.get_double("min_boundary_fraction");
    manifest["files"] = {{"sources", "sources.iftn"},
                         {"warped", "warped.iftn"},
                         {"targets", "targets.iftn"},
                         {"thetas", "thetas.iftn"}};
    write_file_atomic(out + "/manifest.json", manifest.dump(2) + "\n");
    write_run_json(out, "gen-pairs", cfg);
    std::printf("gen-pairs: wrote %zu pairs (of %zu available) to %s\n", count, ds.pair_count(),
                out.c_str());
    return 0;
}

TilePairBatch load_pair_dir(const std::string& dir) {
    json manifest = json::parse(read_text_file(dir + "/manifest.json"));
    if (manifest.value("kind", "") != "pair-dataset")
        throw FormatError("not a pair-dataset manifest: " + dir, 0);
    TilePairBatch b;
    b.tile_size = manifest.at("tile_size").get<std::size_t>();
    b.mode = parse_mode(manifest.at("mode").get<std::string>());
    b.count = manifest.at("count").get<std::size_t>();
    b.sources = read_iftn(dir + "/" + manifest["files"]["sources"].get<std::string>()).data();
    b.warped = read_iftn(dir + "/" + manifest["files"]["warped"].get<std::string>()).data();
    b.targets = read_iftn(dir + "/" + manifest["files"]["targets"].get<std::string>()).data();
    b.thetas = read_iftn(dir + "/" + manifest["files"]["thetas"].get<std::string>()).data();
    return b;
}

// ---- train-itn --------------------------------------------------------------------

void declare_train_itn(RunConfig& cfg) {
    cfg.declare("seed", "1", "root seed for all random streams");
    cfg.declare("data", "", "pair-dataset directory from gen-pairs (empty = procedural stream)");
    cfg.declare("maps", "9000", "procedural source maps for training");
    cfg.declare("holdout_maps", "900", "procedural source maps for the holdout split");
    cfg.declare("holdout_fraction", "0.1", "holdout share when --data is materialized");
    cfg.declare("tile_size", "32", "tile side in pixels");
    cfg.declare("mode", "affine6", "parameter mode: affine6 | homography8");
    cfg.declare("distance_mode", "euclidean", "training objective: euclidean | geodesic");
    cfg.declare("lambda", "0.1", "geodesic residual weight");
    cfg.declare("hidden", "256", "hidden layer width");
    cfg.declare("epochs", "20", "training epochs");
    cfg.declare("batch_size", "128", "pairs per optimizer step");
    cfg.declare("lr", "0.05", "learning rate");
    cfg.declare("momentum", "0.9", "SGD momentum");
    cfg.declare("min_boundary_fraction", "0.02", "informative-tile threshold");
    cfg.declare("freeze", "true", "freeze the model in the saved checkpoint");
    cfg.declare("out", "itn_out", "output directory");
    declare_shapes(cfg);
    declare_ranges(cfg);
}

int cmd_train_itn(RunConfig& cfg) {
    std::uint64_t seed = cfg.get_u64("seed");
    ParamMode mode = parse_mode(cfg.get("mode"));
    DistanceMode dmode = parse_distance_mode(cfg.get("distance_mode"));
    std::size_t tile = cfg.get_u64("tile_size");
    std::string out = cfg.get("out");

    std::unique_ptr<PairDataset> train, holdout;
    if (!cfg.get("data").empty()) {
        TilePairBatch all = load_pair_dir(cfg.get("data"));
        std::size_t hold = static_cast<std::size_t>(static_cast<double>(all.count) *
                                                    cfg.get_double("holdout_fraction"));
        hold = std::min(hold, all.count - 1);
        PairDataset whole(all);
        TilePairBatch train_part = whole.load_range(0, all.count - hold);
        train = std::make_unique<PairDataset>(train_part);
        if (hold > 0) {
            TilePairBatch hold_part = whole.load_range(all.count - hold, all.count);
            holdout = std::make_unique<PairDataset>(hold_part);
        }
        if (train_part.tile_size != tile)
            throw ConfigError("tile_size does not match the materialized dataset");
        mode = train_part.mode;
    } else {
        std::size_t n_train = cfg.get_u64("maps"), n_hold = cfg.get_u64("holdout_maps");
        TransformRanges ranges = ranges_from(cfg);
        double minf = cfg.get_double("min_boundary_fraction");
        train = std::make_unique<PairDataset>(
            [&, seed](std::size_t i) { return shapes_boundary(seed, i, cfg); }, n_train, ranges,
            mode, tile, minf, seed);
        if (n_hold > 0)
            holdout = std::make_unique<PairDataset>(
                [&, seed, n_train](std::size_t i) {
                    return shapes_boundary(seed, n_train + i, cfg);
                },
                n_hold, ranges, mode, tile, minf, Rng::stream(seed, "holdout-thetas").next_u64());
    }

    ItnModel model = make_itn(tile, mode, dmode, seed, cfg.get_u64("hidden"));
    ItnTrainOptions opts;
    opts.epochs = static_cast<int>(cfg.get_int("epochs"));
    opts.batch_size = cfg.get_u64("batch_size");
    opts.learning_rate = cfg.get_double("lr");
    opts.momentum = cfg.get_double("momentum");
    opts.seed = seed;
    opts.lambda = cfg.get_double("lambda");

    std::printf("train-itn: %zu training pairs, %zu holdout pairs, %d epochs\n",
                train->pair_count(), holdout ? holdout->pair_count() : 0, opts.epochs);
    std::fflush(stdout);
    opts.on_epoch = [](int epoch, double loss, double mse) {
        std::printf("epoch %d: train_loss=%.6f holdout_mse=%.6f\n", epoch, loss, mse);
        std::fflush(stdout);
    };
    LossCurve curve = train_itn(model, *train, opts, holdout.get());

    std::filesystem::create_directories(out);
    ItnModel final_model = cfg.get_bool("freeze") ? freeze(model) : model;
    save_checkpoint(final_model, out + "/itn.ifck");
    json jc;
    jc["epoch"] = curve.epoch;
    jc["train_loss"] = curve.train_loss;
    jc["holdout_mse"] = curve.holdout_mse;
    write_file_atomic(out + "/loss_curve.json", jc.dump(2) + "\n");
    write_run_json(out, "train-itn", cfg);
    return 0;
}

// ---- eval-distance ------------------------------------------------------------------

void declare_eval_distance(RunConfig& cfg) {
    cfg.declare("checkpoint", "itn_out/itn.ifck", "trained model checkpoint");
    cfg.declare("map_a", "", "predicted/probe boundary map (PGM)");
    cfg.declare("map_b", "", "reference boundary map (PGM, thresholded to binary)");
    cfg.declare("lambda", "0.1", "geodesic residual weight");
    cfg.declare("min_boundary_fraction", "0.02", "informative-tile threshold");
}

int cmd_eval_distance(RunConfig& cfg) {
    if (cfg.get("map_a").empty() || cfg.get("map_b").empty())
        throw ConfigError("eval-distance needs --map_a and --map_b");
    ItnModel model = load_checkpoint(cfg.get("checkpoint"));
    if (!model.frozen) model = freeze(model);

    BoundaryMap a = load_boundary_pgm(cfg.get("map_a"), BoundaryKind::Probability);
    BoundaryMap b = load_boundary_pgm(cfg.get("map_b"), BoundaryKind::Binary);
    if (a.height != b.height || a.width != b.width)
        throw ConfigError("eval-distance: maps differ in size");

    Tensor pred = boundary_to_tensor(a);
    double minf = cfg.get_double("min_boundary_fraction");

    DistanceConfig euc;
    euc.mode = DistanceMode::Euclidean;
    DistanceConfig geo;
    geo.mode = DistanceMode::Geodesic;
    geo.lambda = cfg.get_double("lambda");

    InverseFormResult re = inverseform_loss(pred, b, model, euc, model.tile_size, minf);
    InverseFormResult rg = inverseform_loss(pred, b, model, geo, model.tile_size, minf);
    std::printf("tiles: %d informative, %d skipped\n", re.informative_tiles, re.skipped_tiles);
    std::printf("inverseform distance (euclidean, mean/tile): %.6f\n", re.loss.value());
    std::printf("inverseform distance (geodesic,  mean/tile): %.6f\n", rg.loss.value());
    std::printf("balanced cross-entropy:                      %.6f\n",
                balanced_boundary_xe(a, b));
    return 0;
}

// ---- train-seg --------------------------------------------------------------------

void declare_train_seg(RunConfig& cfg) {
    cfg.declare("seed", "1", "root seed for all random streams");
    cfg.declare("itn", "itn_out/itn.ifck", "frozen distance-model checkpoint");
    cfg.declare("train_count", "2000", "training samples");
    cfg.declare("val_count", "200", "validation samples");
    cfg.declare("channels", "32", "trunk width");
    cfg.declare("epochs", "4", "training epochs");
    cfg.declare("batch_size", "8", "samples per optimizer step");
    cfg.declare("lr", "0.15", "learning rate");
    cfg.declare("momentum", "0.9", "SGD momentum");
    cfg.declare("beta", "1", "weight of the balanced boundary cross-entropy");
    cfg.declare("gamma", "0.5", "weight of the tiled distance loss (0 = baseline)");
    cfg.declare("distance_mode", "euclidean", "tile distance: euclidean | geodesic");
    cfg.declare("lambda", "0.1", "geodesic residual weight");
    cfg.declare("tile_size", "32", "tile side for the distance loss");
    cfg.declare("min_boundary_fraction", "0.02", "informative-tile threshold");
    cfg.declare("normalize_if", "true", "mean over informative tiles (false = raw sum)");
    cfg.declare("concat_boundary", "false", "feed the predicted boundary back into the seg head");
    cfg.declare("data", "", "optional shapes dataset directory (overrides procedural data)");
    cfg.declare("save_data", "", "optional directory to persist the generated dataset");
    cfg.declare("out", "seg_out", "output directory");
    declare_shapes(cfg);
}

int cmd_train_seg(RunConfig& cfg) {
    std::uint64_t seed = cfg.get_u64("seed");
    std::string out = cfg.get("out");
    std::size_t h = cfg.get_u64("map_height"), w = cfg.get_u64("map_width");
    int classes = static_cast<int>(cfg.get_int("num_classes"));

    std::vector<ShapesSample> train, val;
    if (!cfg.get("data").empty()) {
        std::vector<ShapesSample> all = load_shapes_dataset(cfg.get("data"));
        std::size_t nv = std::min<std::size_t>(cfg.get_u64("val_count"), all.size() / 5);
        val.assign(all.end() - static_cast<long>(nv), all.end());
        all.resize(all.size() - nv);
        train = std::move(all);
        if (!train.empty()) {
            h = train[0].height;
            w = train[0].width;
        }
    } else {
        Rng tr = Rng::stream(seed, "seg-train-data");
        Rng va = Rng::stream(seed, "seg-val-data");
        train = gen_shapes(cfg.get_u64("train_count"), h, w, classes, tr.next_u64());
        val = gen_shapes(cfg.get_u64("val_count"), h, w, classes, va.next_u64());
    }
    if (!cfg.get("save_data").empty()) save_shapes_dataset(cfg.get("save_data"), train);

    ItnModel itn = load_checkpoint(cfg.get("itn"));
    if (!itn.frozen) itn = freeze(itn);

    SegModel model = make_seg_model(h, w, classes, seed, cfg.get_u64("channels"),
                                    cfg.get_bool("concat_boundary"));
    LossWeights weights;
    weights.beta = cfg.get_double("beta");
    weights.gamma = cfg.get_double("gamma");
    DistanceConfig dc;
    dc.mode = parse_distance_mode(cfg.get("distance_mode"));
    dc.lambda = cfg.get_double("lambda");

    SegTrainOptions opts;
    opts.epochs = static_cast<int>(cfg.get_int("epochs"));
    opts.batch_size = cfg.get_u64("batch_size");
    opts.learning_rate = cfg.get_double("lr");
    opts.momentum = cfg.get_double("momentum");
    opts.seed = seed;
    opts.tile_size = cfg.get_u64("tile_size");
    opts.min_boundary_fraction = cfg.get_double("min_boundary_fraction");
    opts.normalize_if = cfg.get_bool("normalize_if");

    std::printf("train-seg: %zu train / %zu val samples, %d epochs, gamma=%g\n", train.size(),
                val.size(), opts.epochs, weights.gamma);
    std::fflush(stdout);
    opts.on_epoch = [](const SegEpochMetrics& m) {
        std::printf("epoch %d: total=%.4f xe=%.4f bxe=%.4f if=%.4f miou=%.4f acc=%.4f mba=%.4f\n",
                    m.epoch, m.train_total, m.train_xe, m.train_bxe, m.train_if, m.val_miou,
                    m.val_pixel_acc, m.val_mba);
        std::fflush(stdout);
    };
    std::vector<SegEpochMetrics> history = train_seg(model, train, val, itn, weights, dc, opts);

    std::filesystem::create_directories(out);
    std::string jsonl;
    for (const SegEpochMetrics& m : history) {
        json j;
        j["epoch"] = m.epoch;
        j["train_total"] = m.train_total;
        j["train_xe"] = m.train_xe;
        j["train_bxe"] = m.train_bxe;
        j["train_if"] = m.train_if;
        j["val_miou"] = m.val_miou;
        j["val_pixel_acc"] = m.val_pixel_acc;
        j["val_mba"] = m.val_mba;
        jsonl += j.dump() + "\n";
    }
    write_file_atomic(out + "/metrics.jsonl", jsonl);
    save_seg_checkpoint(model, out + "/seg.ifsg");
    json costs;
    costs["inference_params"] = inference_param_count(model);
    costs["inference_macs"] = inference_mac_count(model);
    write_file_atomic(out + "/inference_cost.json", costs.dump(2) + "\n");
    write_run_json(out, "train-seg", cfg);
    return 0;
}

// ---- bench ------------------------------------------------------------------------

void declare_bench(RunConfig& cfg) {
    cfg.declare("seed", "1", "root seed");
    cfg.declare("checkpoint", "itn_out/itn.ifck", "trained model checkpoint");
    cfg.declare("axis", "translation", "sweep axis: translation | rotation | scale");
    cfg.declare("magnitudes", "0,0.03,0.06,0.09,0.125,0.1875,0.25",
                "comma-separated increasing magnitudes starting at 0");
    cfg.declare("maps", "40", "procedural boundary maps for the tile pool");
    cfg.declare("num_tiles", "200", "tiles sampled from the pool");
    cfg.declare("tile_size", "32", "tile side in pixels");
    cfg.declare("min_boundary_fraction", "0.02", "informative-tile threshold");
    cfg.declare("distance_mode", "euclidean", "model distance: euclidean | geodesic");
    cfg.declare("lambda", "0.1", "geodesic residual weight");
    cfg.declare("out", "bench_out", "output directory");
    declare_shapes(cfg);
}

int cmd_bench(RunConfig& cfg) {
    std::uint64_t seed = cfg.get_u64("seed");
    ItnModel itn = load_checkpoint(cfg.get("checkpoint"));
    if (!itn.frozen) itn = freeze(itn);

    SweepSpec spec;
    std::string axis = cfg.get("axis");
    if (axis == "translation") spec.axis = SweepAxis::Translation;
    else if (axis == "rotation") spec.axis = SweepAxis::Rotation;
    else if (axis == "scale") spec.axis = SweepAxis::Scale;
    else throw ConfigError("axis must be translation | rotation | scale");

    spec.magnitudes.clear();
    std::string mags = cfg.get("magnitudes");
    std::size_t pos = 0;
    while (pos <= mags.size()) {
        std::size_t comma = mags.find(',', pos);
        if (comma == std::string::npos) comma = mags.size();
        spec.magnitudes.push_back(std::atof(mags.substr(pos, comma - pos).c_str()));
        pos = comma + 1;
        if (pos > mags.size()) break;
    }
    spec.num_tiles = cfg.get_u64("num_tiles");
    spec.seed = seed;
    spec.tile_size = cfg.get_u64("tile_size");
    spec.min_boundary_fraction = cfg.get_double("min_boundary_fraction");
    validate(spec);

    std::vector<BoundaryMap> maps;
    for (std::size_t i = 0; i < cfg.get_u64("maps"); ++i)
        maps.push_back(shapes_boundary(seed, i, cfg));

    DistanceConfig dc;
    dc.mode = parse_distance_mode(cfg.get("distance_mode"));
    dc.lambda = cfg.get_double("lambda");

    SweepTable table = run_sweep(spec, maps, itn, dc);
    std::string out = cfg.get("out");
    std::filesystem::create_directories(out);
    write_file_atomic(out + "/sweep.csv", sweep_to_csv(table));
    write_file_atomic(out + "/sweep.svg", sweep_to_svg(table));
    write_run_json(out, "bench", cfg);
    std::printf("bench: wrote %zu cells to %s\n", table.cells.size(), out.c_str());
    return 0;
}

// ---- report -----------------------------------------------------------------------

struct RunSummary {
    std::string dir;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double miou = 0.0, acc = 0.0, mba = 0.0;
};

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_path) {
    std::vector<RunSummary> runs;
    for (const std::string& dir : dirs) {
        RunSummary r;
        r.dir = dir;
        json run = json::parse(read_text_file(dir + "/run.json"));
        r.gamma = std::atof(run["config"].value("gamma", "0").c_str());
        r.seed = std::strtoull(run["config"].value("seed", "0").c_str(), nullptr, 10);
        std::string jsonl = read_text_file(dir + "/metrics.jsonl");
        std::size_t pos = 0;
        json last;
        while (pos < jsonl.size()) {
            std::size_t end = jsonl.find('\n', pos);
            if (end == std::string::npos) end = jsonl.size();
            if (end > pos) last = json::parse(jsonl.substr(pos, end - pos));
            pos = end + 1;
        }
        if (last.is_null()) throw FormatError("empty metrics.jsonl in " + dir, 0);
        r.miou = last["val_miou"].get<double>();
        r.acc = last["val_pixel_acc"].get<double>();
        r.mba = last["val_mba"].get<double>();
        runs.push_back(r);
    }

    char line[256];
    std::string md = "| run | seed | gamma | mIoU | pixel acc | mBA |\n";
    md += "|---|---|---|---|---|---|\n";
    for (const RunSummary& r : runs) {
        std::snprintf(line, sizeof(line), "| %s | %llu | %g | %.4f | %.4f | %.4f |\n",
                      r.dir.c_str(), static_cast<unsigned long long>(r.seed), r.gamma, r.miou,
                      r.acc, r.mba);
        md += line;
    }

    // pair gamma=0 baselines with gamma>0 runs of the same seed
    std::string pairs = "\n| seed | gamma | Δ mIoU | Δ mBA |\n|---|---|---|---|\n";
    bool any_pair = false;
    double dmiou_sum = 0, dmba_sum = 0;
    int pair_count = 0;
    for (const RunSummary& base : runs) {
        if (base.gamma != 0.0) continue;
        for (const RunSummary& r : runs) {
            if (r.gamma == 0.0 || r.seed != base.seed) continue;
            any_pair = true;
            ++pair_count;
            dmiou_sum += r.miou - base.miou;
            dmba_sum += r.mba - base.mba;
            std::snprintf(line, sizeof(line), "| %llu | %g | %+.4f | %+.4f |\n",
                          static_cast<unsigned long long>(base.seed), r.gamma, r.miou - base.miou,
                          r.mba - base.mba);
            pairs += line;
        }
    }
    if (any_pair) {
        std::snprintf(line, sizeof(line), "| mean | | %+.4f | %+.4f |\n",
                      dmiou_sum / pair_count, dmba_sum / pair_count);
        pairs += line;
        md += pairs;
    }

    std::printf("%s", md.c_str());
    if (!out_path.empty()) write_file_atomic(out_path, md);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-aware segmentation loss toolkit"};
    app.require_subcommand(1);

    struct Cmd {
        RunConfig cfg;
        CommonArgs common;
        CLI::App* sub = nullptr;
    };
    Cmd gen_pairs, train_itn_c, eval_distance, train_seg_c, bench_c;

    gen_pairs.sub = app.add_subcommand("gen-pairs", "materialize a tile-pair dataset");
    declare_gen_pairs(gen_pairs.cfg);
    attach_config_flags(gen_pairs.sub, gen_pairs.cfg, gen_pairs.common);

    train_itn_c.sub = app.add_subcommand("train-itn", "train the inverse-transformation network");
    declare_train_itn(train_itn_c.cfg);
    attach_config_flags(train_itn_c.sub, train_itn_c.cfg, train_itn_c.common);

    eval_distance.sub =
        app.add_subcommand("eval-distance", "distance report between two boundary maps");
    declare_eval_distance(eval_distance.cfg);
    attach_config_flags(eval_distance.sub, eval_distance.cfg, eval_distance.common);

    train_seg_c.sub = app.add_subcommand("train-seg", "train the toy segmentation model");
    declare_train_seg(train_seg_c.cfg);
    attach_config_flags(train_seg_c.sub, train_seg_c.cfg, train_seg_c.common);

    bench_c.sub = app.add_subcommand("bench", "sweep distance measures over transforms");
    declare_bench(bench_c.cfg);
    attach_config_flags(bench_c.sub, bench_c.cfg, bench_c.common);

    CLI::App* report_sub = app.add_subcommand("report", "comparison table across run directories");
    std::vector<std::string> report_dirs;
    std::string report_out;
    report_sub->add_option("dirs", report_dirs, "train-seg run directories")->required();
    report_sub->add_option("--out", report_out, "write the markdown table here too");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_pairs.sub->parsed()) {
            resolve_config(gen_pairs.cfg, gen_pairs.common);
            return cmd_gen_pairs(gen_pairs.cfg);
        }
        if (train_itn_c.sub->parsed()) {
            resolve_config(train_itn_c.cfg, train_itn_c.common);
            return cmd_train_itn(train_itn_c.cfg);
        }
        if (eval_distance.sub->parsed()) {
            resolve_config(eval_distance.cfg, eval_distance.common);
            return cmd_eval_distance(eval_distance.cfg);
        }
        if (train_seg_c.sub->parsed()) {
            resolve_config(train_seg_c.cfg, train_seg_c.common);
            return cmd_train_seg(train_seg_c.cfg);
        }
        if (bench_c.sub->parsed()) {
            resolve_config(bench_c.cfg, bench_c.common);
            return cmd_bench(bench_c.cfg);
        }
        if (report_sub->parsed()) return cmd_report(report_dirs, report_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
