#pragma once

#include "iform/boundary.hpp"
#include "iform/distance.hpp"
#include "iform/itn.hpp"
#include "iform/tensor.hpp"

namespace iform {

// Scaling of the auxiliary terms in the total objective:
// total = xe + beta * bxe + gamma * if.
struct LossWeights {
    double beta = 1.0;
    double gamma = 0.5;
};

void validate(const LossWeights& w);

// Mean over pixels of -log softmax(logits)[label]. logits {C,H,W}, labels
// row-major H*W with values < C.
Tensor pixel_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Class-balanced binary cross-entropy over a predicted probability map and a
// binary ground truth of the same shape. Weights are the complementary class
// frequencies of gt (w+ = #neg/#pix, w- = #pos/#pix); a gt with only one class
// degenerates to the plain negative log-likelihood of that class. pred is
// clamped to [1e-7, 1-1e-7].
Tensor balanced_boundary_xe(const Tensor& pred, const BoundaryMap& gt);
double balanced_boundary_xe(const BoundaryMap& pred, const BoundaryMap& gt);

struct InverseFormResult {
    Tensor loss;                 // scalar; exactly 0 when no tile is informative
    int informative_tiles = 0;
    int skipped_tiles = 0;
    int degenerate_fallbacks = 0;  // geodesic stop-gradient events (counted during backward)
};

// Tiled distance loss: both maps are split identically; every tile whose gt
// side passes min_boundary_fraction contributes the configured distance
// between itn(pred_tile, gt_tile) and the identity. Mean over informative
// tiles by default; normalize=false keeps the raw sum. Gradients flow into
// pred only, so the model must be frozen (ContractError otherwise).
InverseFormResult inverseform_loss(const Tensor& pred, const BoundaryMap& gt,
                                   const ItnModel& model, const DistanceConfig& cfg,
                                   std::size_t tile_size, double min_boundary_fraction,
                                   bool normalize = true);

// xe + w.beta * bxe + w.gamma * if_loss; throws DivergenceError naming the
// first non-finite component.
Tensor total_loss(const Tensor& xe, const Tensor& bxe, const Tensor& if_loss,
                  const LossWeights& w);

}  // namespace iform
