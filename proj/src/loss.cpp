#include "iform/loss.hpp"

#include <cmath>

#include "iform/errors.hpp"

namespace iform {

void validate(const LossWeights& w) {
    if (!(std::isfinite(w.beta) && std::isfinite(w.gamma)) || w.beta < 0.0 || w.gamma < 0.0)
        throw ContractError("loss weights: beta and gamma must be finite and >= 0");
}

Tensor pixel_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 3)
        throw ShapeError("pixel_cross_entropy: logits must be {C,H,W}, got " +
                         shape_str(logits.shape()));
    std::size_t C = logits.shape()[0], H = logits.shape()[1], W = logits.shape()[2];
    std::size_t hw = H * W;
    if (labels.size() != hw)
        throw ContractError("pixel_cross_entropy: label count does not match H*W");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= C)
            throw ContractError("pixel_cross_entropy: label " + std::to_string(l) +
                                " out of range for " + std::to_string(C) + " classes");

    // fused log-softmax + NLL; softmax probabilities are kept for the pullback
    const std::vector<double>& lv = logits.data();
    std::vector<double> softmax(C * hw);
    double nll = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
        double mx = lv[p];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, lv[c * hw + p]);
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c) z += std::exp(lv[c * hw + p] - mx);
        double logz = std::log(z) + mx;
        for (std::size_t c = 0; c < C; ++c)
            softmax[c * hw + p] = std::exp(lv[c * hw + p] - logz);
        nll -= lv[static_cast<std::size_t>(labels[p]) * hw + p] - logz;
    }
    nll /= static_cast<double>(hw);

    return Tensor::make_op(
        {1}, {nll}, {logits},
        [C, hw, labels, softmax = std::move(softmax)](Tensor::Node& self) {
            Tensor::Node* p = self.parents[0].get();
            if (!p->requires_grad) return;
            double g = self.scratch[0] / static_cast<double>(hw);
            for (std::size_t px = 0; px < hw; ++px) {
                std::size_t lbl = static_cast<std::size_t>(labels[px]);
                for (std::size_t c = 0; c < C; ++c) {
                    double d = softmax[c * hw + px] - (c == lbl ? 1.0 : 0.0);
                    p->scratch[c * hw + px] += g * d;
                }
            }
        });
}

Tensor balanced_boundary_xe(const Tensor& pred, const BoundaryMap& gt) {
    if (pred.rank() != 2 || pred.shape()[0] != gt.height || pred.shape()[1] != gt.width)
        throw ShapeError("balanced_boundary_xe: pred " + shape_str(pred.shape()) +
                         " does not match gt (" + std::to_string(gt.height) + "," +
                         std::to_string(gt.width) + ")");
    std::size_t n = gt.values.size();
    std::size_t pos = 0;
    for (double v : gt.values)
        if (v != 0.0) ++pos;
    std::size_t neg = n - pos;

    Tensor p = clamp(pred, 1e-7, 1.0 - 1e-7);
    Tensor gt_t = Tensor::from_data({gt.height, gt.width}, gt.values);
    Tensor one_minus_gt = add_scalar(scale(gt_t, -1.0), 1.0);
    Tensor log_p = log(p);
    Tensor log_1mp = log(add_scalar(scale(p, -1.0), 1.0));

    double w_pos, w_neg;
    if (pos == 0) {
        // single-class gt: plain negative log-likelihood of the negatives
        w_pos = 0.0;
        w_neg = 1.0;
    } else if (neg == 0) {
        w_pos = 1.0;
        w_neg = 0.0;
    } else {
        w_pos = static_cast<double>(neg) / static_cast<double>(n);
        w_neg = static_cast<double>(pos) / static_cast<double>(n);
    }
    Tensor term = add(scale(mul(gt_t, log_p), w_pos), scale(mul(one_minus_gt, log_1mp), w_neg));
    return scale(mean(term), -1.0);
}

double balanced_boundary_xe(const BoundaryMap& pred, const BoundaryMap& gt) {
    return balanced_boundary_xe(boundary_to_tensor(pred), gt).value();
}

InverseFormResult inverseform_loss(const Tensor& pred, const BoundaryMap& gt,
                                   const ItnModel& model, const DistanceConfig& cfg,
                                   std::size_t tile_size, double min_boundary_fraction,
                                   bool normalize) {
    if (!model.frozen)
        throw ContractError("inverseform_loss: model must be frozen before use as a loss");
    if (model.tile_size != tile_size)
        throw ContractError("inverseform_loss: tile_size does not match the model");
    if (pred.rank() != 2 || pred.shape()[0] != gt.height || pred.shape()[1] != gt.width)
        throw ShapeError("inverseform_loss: pred " + shape_str(pred.shape()) +
                         " does not match gt (" + std::to_string(gt.height) + "," +
                         std::to_string(gt.width) + ")");
    validate(cfg);

    InverseFormResult result;
    TileLayout lay = tile_layout(gt.height, gt.width, tile_size);
    TileGrid gt_tiles = tile_split(gt, tile_size);

    Tensor padded = (lay.pad_bottom || lay.pad_right)
                        ? pad2d(pred, lay.pad_bottom, lay.pad_right)
                        : pred;

    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t tr = 0; tr < lay.rows; ++tr)
        for (std::size_t tc = 0; tc < lay.cols; ++tc) {
            const std::vector<double>& gt_tile = gt_tiles.tiles[tr * lay.cols + tc];
            if (!tile_is_informative(gt_tile, min_boundary_fraction)) {
                ++result.skipped_tiles;
                continue;
            }
            ++result.informative_tiles;
            Tensor pred_tile = slice2d(padded, tr * tile_size, tc * tile_size, tile_size, tile_size);
            Tensor gt_tile_t = Tensor::from_data({tile_size, tile_size}, gt_tile);
            Tensor vec = itn_forward(model, pred_tile, gt_tile_t);
            Tensor mat = params_to_matrix(vec, model.mode);
            acc = add(acc, inverseform_tile_distance(mat, cfg, &result.degenerate_fallbacks));
        }

    if (result.informative_tiles == 0) {
        result.loss = Tensor::scalar(0.0);
        return result;
    }
    result.loss =
        normalize ? scale(acc, 1.0 / static_cast<double>(result.informative_tiles)) : acc;
    return result;
}

Tensor total_loss(const Tensor& xe, const Tensor& bxe, const Tensor& if_loss,
                  const LossWeights& w) {
    validate(w);
    if (!std::isfinite(xe.value())) throw DivergenceError("total_loss: non-finite xe component");
    if (!std::isfinite(bxe.value())) throw DivergenceError("total_loss: non-finite bxe component");
    if (!std::isfinite(if_loss.value()))
        throw DivergenceError("total_loss: non-finite if component");
    return add(xe, add(scale(bxe, w.beta), scale(if_loss, w.gamma)));
}

}  // namespace iform
