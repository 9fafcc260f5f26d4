#pragma once

#include <cstdint>
#include <vector>

namespace iform {

// C x C counts; rows = ground truth, cols = prediction. Merging matrices and
// accumulating pixel-by-pixel commute exactly (integer arithmetic).
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts;

    explicit ConfusionMatrix(std::size_t classes = 0)
        : num_classes(classes), counts(classes * classes, 0) {}

    std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts[gt * num_classes + pred]; }
    std::uint64_t at(std::size_t gt, std::size_t pred) const {
        return counts[gt * num_classes + pred];
    }

    void accumulate(const std::vector<int>& pred, const std::vector<int>& gt);
    void merge(const ConfusionMatrix& other);
    std::uint64_t total() const;
};

// Mean over classes present in the ground truth of TP/(TP+FP+FN); classes
// absent from gt are excluded from the mean.
double miou(const ConfusionMatrix& cm);
double pixel_accuracy(const ConfusionMatrix& cm);

struct MbaResult {
    double value = 1.0;
    bool vacuous = false;  // gt had no boundary pixels at all
};

// Mean boundary accuracy: for each radius, the band is every pixel within
// Chebyshev distance <= r of a gt boundary pixel (Sobel of gt labels); the
// band accuracy is the fraction of band pixels where pred == gt. mBA averages
// the band accuracies over the radii.
MbaResult mba(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
              std::size_t height, std::size_t width,
              const std::vector<int>& radii = {1, 2, 3, 5});

}  // namespace iform
