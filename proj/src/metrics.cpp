#include "iform/metrics.hpp"

#include <algorithm>

#include "iform/boundary.hpp"
#include "iform/errors.hpp"

namespace iform {

void ConfusionMatrix::accumulate(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size())
        throw ContractError("confusion matrix: prediction and ground truth differ in size");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || gt[i] < 0 || static_cast<std::size_t>(pred[i]) >= num_classes ||
            static_cast<std::size_t>(gt[i]) >= num_classes)
            throw ContractError("confusion matrix: label out of range");
        ++at(static_cast<std::size_t>(gt[i]), static_cast<std::size_t>(pred[i]));
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.num_classes != num_classes)
        throw ContractError("confusion matrix: class counts differ in merge");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts) t += c;
    return t;
}

double miou(const ConfusionMatrix& cm) {
    if (cm.num_classes == 0 || cm.total() == 0)
        throw ContractError("miou: empty confusion matrix");
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < cm.num_classes; ++c) {
        std::uint64_t tp = cm.at(c, c), fn = 0, fp = 0;
        for (std::size_t o = 0; o < cm.num_classes; ++o) {
            if (o == c) continue;
            fn += cm.at(c, o);
            fp += cm.at(o, c);
        }
        if (tp + fn == 0) continue;  // class absent from ground truth
        ++present;
        sum += static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    }
    if (present == 0) throw ContractError("miou: no class present in ground truth");
    return sum / static_cast<double>(present);
}

double pixel_accuracy(const ConfusionMatrix& cm) {
    std::uint64_t t = cm.total();
    if (t == 0) throw ContractError("pixel_accuracy: empty confusion matrix");
    std::uint64_t correct = 0;
    for (std::size_t c = 0; c < cm.num_classes; ++c) correct += cm.at(c, c);
    return static_cast<double>(correct) / static_cast<double>(t);
}

MbaResult mba(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
              std::size_t height, std::size_t width, const std::vector<int>& radii) {
    if (pred_labels.size() != gt_labels.size() || gt_labels.size() != height * width)
        throw ContractError("mba: label maps must share dimensions");

    BoundaryMap b = sobel_boundary(gt_labels, height, width);
    std::vector<std::size_t> bpix;
    for (std::size_t i = 0; i < b.values.size(); ++i)
        if (b.values[i] != 0.0) bpix.push_back(i);

    MbaResult r;
    if (bpix.empty()) {
        r.value = 1.0;
        r.vacuous = true;
        return r;
    }

    // Chebyshev distance to the boundary set, capped at max radius + 1; one
    // dilation pass per unit distance.
    int max_r = *std::max_element(radii.begin(), radii.end());
    std::vector<int> dist(height * width, max_r + 1);
    for (std::size_t i : bpix) dist[i] = 0;
    for (int d = 1; d <= max_r; ++d) {
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                std::size_t i = y * width + x;
                if (dist[i] <= d) continue;
                bool near = false;
                for (long dy = -1; dy <= 1 && !near; ++dy)
                    for (long dx = -1; dx <= 1 && !near; ++dx) {
                        long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
                        if (ny < 0 || nx < 0 || ny >= static_cast<long>(height) ||
                            nx >= static_cast<long>(width))
                            continue;
                        if (dist[static_cast<std::size_t>(ny) * width +
                                 static_cast<std::size_t>(nx)] == d - 1)
                            near = true;
                    }
                if (near) dist[i] = d;
            }
    }

    double acc_sum = 0.0;
    for (int rad : radii) {
        std::uint64_t band = 0, correct = 0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            if (dist[i] > rad) continue;
            ++band;
            if (pred_labels[i] == gt_labels[i]) ++correct;
        }
        acc_sum += band ? static_cast<double>(correct) / static_cast<double>(band) : 1.0;
    }
    r.value = acc_sum / static_cast<double>(radii.size());
    return r;
}

}  // namespace iform
