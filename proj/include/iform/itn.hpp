#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iform/boundary.hpp"
#include "iform/distance.hpp"
#include "iform/homography.hpp"
#include "iform/tensor.hpp"

namespace iform {

// Dense inverse-transformation network [2*T*T -> hidden -> hidden -> K] with
// ReLU between layers. The output layer starts at zero and the output is a
// residual added to the identity parameter vector, so a fresh model predicts
// exactly the identity transform. Weights are stored (in x out).
struct ItnModel {
    std::size_t tile_size = 32;
    ParamMode mode = ParamMode::Affine6;
    DistanceMode distance_mode = DistanceMode::Euclidean;
    bool frozen = false;
    std::vector<Tensor> weights;  // W1, W2, W3
    std::vector<Tensor> biases;   // b1, b2, b3

    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;
};

ItnModel make_itn(std::size_t tile_size, ParamMode mode, DistanceMode distance_mode,
                  std::uint64_t seed, std::size_t hidden = 256);

// Frozen copy: parameters stop requiring grad (inputs still get gradients).
ItnModel freeze(const ItnModel& model);

// Batched forward: X is {B, 2*T*T} rows of [flattened tile a | flattened
// tile b]; result is {B, K} from_vector-compatible parameter rows.
Tensor itn_forward_batch(const ItnModel& model, const Tensor& x);

// Single pair; tiles are {T,T} tensors with values in [0,1].
Tensor itn_forward(const ItnModel& model, const Tensor& a, const Tensor& b);

// ---- pair data -------------------------------------------------------------------

// Aligned batch of (source tile, warped tile, target parameter vector).
struct TilePairBatch {
    std::size_t tile_size = 0;
    ParamMode mode = ParamMode::Affine6;
    std::size_t count = 0;
    std::vector<double> sources;  // count x T*T, row-major
    std::vector<double> warped;   // count x T*T
    std::vector<double> targets;  // count x K
    std::vector<double> thetas;   // count x 9, row-major matrices

    void append(const TilePairBatch& other);
    void clear();
};

// Deterministic pair dataset: every informative tile of every map yields one
// (x, warp(x, theta), to_vector(theta)) triple with theta drawn from a stream
// keyed by (seed, map index, tile index). Maps come from an indexed factory so
// large datasets never have to be resident at once.
class PairDataset {
public:
    // Procedural: scans all maps once to index informative tiles. Throws
    // EmptyDatasetError when no tile anywhere passes the threshold.
    PairDataset(std::function<BoundaryMap(std::size_t)> map_at, std::size_t num_maps,
                const TransformRanges& ranges, ParamMode mode, std::size_t tile_size,
                double min_boundary_fraction, std::uint64_t seed);

    // Materialized (e.g. loaded from a gen-pairs directory).
    explicit PairDataset(TilePairBatch all);

    std::size_t pair_count() const { return pair_count_; }
    std::size_t group_count() const;  // maps (procedural) or chunks (materialized)
    std::size_t tile_size() const { return tile_size_; }
    ParamMode mode() const { return mode_; }

    // All pairs of one group, dataset order.
    TilePairBatch load_group(std::size_t g) const;

    // Materializes a specific half-open pair range (used for holdout sets).
    TilePairBatch load_range(std::size_t lo, std::size_t hi) const;

private:
    struct TileRef {
        std::uint32_t map_idx, tile_row, tile_col;
    };

    std::function<BoundaryMap(std::size_t)> map_at_;
    TransformRanges ranges_;
    ParamMode mode_ = ParamMode::Affine6;
    std::size_t tile_size_ = 32;
    double min_fraction_ = 0.02;
    std::uint64_t seed_ = 0;
    std::vector<TileRef> refs_;            // procedural backend
    std::vector<std::size_t> group_start_; // per map, index into refs_
    TilePairBatch all_;                    // materialized backend
    bool materialized_ = false;
    std::size_t pair_count_ = 0;

    void emit_pair(const TileRef& ref, const BoundaryMap& map, TilePairBatch& out) const;
};

// Batch iterator with a map-level shuffle per pass; order depends only on
// (pass_seed, dataset), never on batch size.
class PairStream {
public:
    PairStream(const PairDataset& ds, std::uint64_t pass_seed);
    bool next(std::size_t batch_size, TilePairBatch& out);

private:
    const PairDataset& ds_;
    std::vector<std::size_t> group_order_;
    std::size_t next_group_ = 0;
    TilePairBatch buffer_;
    std::size_t buffer_pos_ = 0;
};

// ---- training ----------------------------------------------------------------------

struct ItnTrainOptions {
    int epochs = 20;
    std::size_t batch_size = 128;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    double lambda = 0.1;  // geodesic residual weight
    // called after each epoch (epoch number, mean train loss, holdout mse)
    std::function<void(int, double, double)> on_epoch;
};

struct LossCurve {
    std::vector<int> epoch;
    std::vector<double> train_loss;
    std::vector<double> holdout_mse;
};

// SGD with momentum on the training objective of model.distance_mode:
// Euclidean = mean squared parameter-vector error, Geodesic = mean geodesic
// distance (lambda-weighted residual) between target and predicted matrices.
// Deterministic per (model seed, options.seed). Throws ContractError for a
// frozen model and DivergenceError (with epoch/step) for non-finite loss.
LossCurve train_itn(ItnModel& model, const PairDataset& dataset, const ItnTrainOptions& opts,
                    const PairDataset* holdout = nullptr);

// Mean squared error per parameter component of predictions vs targets.
double holdout_parameter_mse(const ItnModel& model, const TilePairBatch& pairs);

// MSE of the constant identity prediction: the variance oracle used to gauge
// trained models.
double identity_baseline_mse(const TilePairBatch& pairs);

// ---- checkpoints ---------------------------------------------------------------------
// "IFCK", u8 version=1, u8 mode, u16 tile_size (LE), u8 distance_mode,
// u8 frozen, then IFTN blobs W1,b1,W2,b2,W3,b3.

void save_checkpoint(const ItnModel& model, const std::string& path);
ItnModel load_checkpoint(const std::string& path);

}  // namespace iform
