#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iform/boundary.hpp"
#include "iform/distance.hpp"
#include "iform/homography.hpp"
#include "iform/itn.hpp"

namespace iform {

enum class SweepAxis : std::uint8_t { Translation = 0, Rotation = 1, Scale = 2 };

// Transform magnitudes swept over a pool of informative tiles. Magnitudes are
// fraction-of-tile-side (translation, applied to both axes), radians
// (rotation) or scale-delta (scale factor 1+m).
struct SweepSpec {
    SweepAxis axis = SweepAxis::Translation;
    std::vector<double> magnitudes;  // strictly increasing, first entry 0
    std::size_t num_tiles = 200;
    std::uint64_t seed = 1;
    std::size_t tile_size = 32;
    double min_boundary_fraction = 0.02;
};

void validate(const SweepSpec& spec);

struct SweepCell {
    double magnitude = 0.0;
    std::string measure;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

struct SweepTable {
    std::vector<SweepCell> cells;
};

// Distance measures compared per magnitude: balanced boundary cross-entropy,
// 1 - normalized cross-correlation, symmetric Hausdorff over boundary pixel
// sets, and the per-tile distance of the frozen model under cfg.mode.
SweepTable run_sweep(const SweepSpec& spec, const std::vector<BoundaryMap>& maps,
                     const ItnModel& itn, const DistanceConfig& cfg);

// Max over directed Hausdorff distances between the boundary pixel sets,
// Euclidean pixel metric, exact brute force. Both maps need at least one
// boundary pixel.
double hausdorff_boundary(const BoundaryMap& a, const BoundaryMap& b);

// 1 - NCC in [0,2]; 0 for identical tiles. Constant tiles compare as 0 when
// equal and 2 otherwise.
double ncc_distance(const std::vector<double>& a, const std::vector<double>& b);

std::string sweep_to_csv(const SweepTable& table);
// Self-rendered line plot, one panel per measure.
std::string sweep_to_svg(const SweepTable& table);

}  // namespace iform
