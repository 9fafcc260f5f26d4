#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iform/boundary.hpp"
#include "iform/itn.hpp"
#include "iform/loss.hpp"
#include "iform/metrics.hpp"
#include "iform/tensor.hpp"

namespace iform {

// One procedural sample: RGB image, integer labels, and the Sobel boundary of
// the labels (kept in sync by construction).
struct ShapesSample {
    std::size_t height = 0, width = 0;
    std::vector<double> image;  // {3,H,W} planes in [0,1]
    std::vector<int> labels;    // H*W, values < num_classes
    BoundaryMap gt_boundary;
};

// Deterministic procedural shapes: 2-6 filled ellipses/convex polygons with
// class-correlated colors plus pixel noise (sigma 0.05). Index-addressable so
// large datasets can stream.
ShapesSample gen_shapes_sample(std::uint64_t seed, std::size_t index, std::size_t height,
                               std::size_t width, int num_classes);
std::vector<ShapesSample> gen_shapes(std::size_t count, std::size_t height, std::size_t width,
                                     int num_classes, std::uint64_t seed);

// ---- model --------------------------------------------------------------------------

struct ConvLayer {
    Tensor w, b;
    int stride = 1, pad = 1;
    bool transposed = false;
};

// Encoder-decoder trunk (4 conv layers, two of them stride 2, then two
// transposed convs back to full resolution), a 1x1 segmentation head and a
// detachable 1x1 sigmoid boundary head on the same features. The boundary
// head exists only at training time; the inference path never evaluates it.
struct SegModel {
    std::size_t height = 96, width = 96;
    int num_classes = 5;
    std::size_t channels = 32;
    bool concat_boundary = false;  // optionally feed b_pred back into the seg head
    std::vector<ConvLayer> trunk;
    ConvLayer seg_head;
    ConvLayer boundary_head;

    std::vector<Tensor> parameters() const;
};

SegModel make_seg_model(std::size_t height, std::size_t width, int num_classes,
                        std::uint64_t seed, std::size_t channels = 32,
                        bool concat_boundary = false);

struct SegForward {
    Tensor y_logits;  // {C,H,W}
    Tensor b_pred;    // {H,W} in (0,1)
};

SegForward seg_forward(const SegModel& model, const Tensor& image);

// Inference path: trunk + seg head only. Returns argmax labels; logits_out
// (when given) receives the raw head output for head-removal checks.
std::vector<int> infer_labels(const SegModel& model, const Tensor& image,
                              Tensor* logits_out = nullptr);

// Multiply-accumulate and parameter counts of the inference path (trunk +
// seg head; the boundary head is excluded because it is removed for
// inference).
std::size_t inference_param_count(const SegModel& model);
std::size_t inference_mac_count(const SegModel& model);

// ---- training -----------------------------------------------------------------------

struct SegEpochMetrics {
    int epoch = 0;
    double train_total = 0.0, train_xe = 0.0, train_bxe = 0.0, train_if = 0.0;
    double val_miou = 0.0, val_pixel_acc = 0.0, val_mba = 0.0;
};

struct SegTrainOptions {
    int epochs = 4;
    std::size_t batch_size = 8;
    double learning_rate = 0.15;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    std::size_t tile_size = 32;
    double min_boundary_fraction = 0.02;
    bool normalize_if = true;
    std::function<void(const SegEpochMetrics&)> on_epoch;
};

// Joint objective xe + beta*bxe + gamma*if with SGD+momentum; gamma = 0 is
// the pixel-loss baseline. The total is assembled on-tape from the three
// components, so the reported decomposition is exact. Deterministic per seed.
std::vector<SegEpochMetrics> train_seg(SegModel& model, const std::vector<ShapesSample>& train,
                                       const std::vector<ShapesSample>& val,
                                       const ItnModel& itn, const LossWeights& weights,
                                       const DistanceConfig& cfg, const SegTrainOptions& opts);

// Validation metrics only (aggregated confusion for mIoU/accuracy, mean of
// per-image mBA).
SegEpochMetrics evaluate_seg(const SegModel& model, const std::vector<ShapesSample>& val);

// ---- persistence ----------------------------------------------------------------------

// "IFSG" container: header then IFTN blobs per layer.
void save_seg_checkpoint(const SegModel& model, const std::string& path);
SegModel load_seg_checkpoint(const std::string& path);

// Dataset directory: PPM images, PGM label maps, IFTN label tensors and a
// JSON manifest.
void save_shapes_dataset(const std::string& dir, const std::vector<ShapesSample>& samples);
std::vector<ShapesSample> load_shapes_dataset(const std::string& dir);

}  // namespace iform
