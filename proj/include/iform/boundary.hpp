#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iform/tensor.hpp"

namespace iform {

enum class BoundaryKind : std::uint8_t { Binary = 0, Probability = 1 };

// 2-d grid of boundary values in [0,1]. Ground truth is Binary (values in
// {0,1}); predictions are Probability.
struct BoundaryMap {
    std::size_t height = 0, width = 0;
    std::vector<double> values;  // row-major
    BoundaryKind kind = BoundaryKind::Binary;

    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
    double& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
};

void validate(const BoundaryMap& m);

// Non-overlapping tile_size x tile_size patches in row-major tile order; the
// source map is zero-padded bottom/right to tile multiples.
struct TileGrid {
    std::size_t tile_size = 0;
    std::size_t rows = 0, cols = 0;
    std::size_t pad_bottom = 0, pad_right = 0;
    BoundaryKind kind = BoundaryKind::Binary;
    std::vector<std::vector<double>> tiles;
};

// Geometry shared by everything that tiles a map identically.
struct TileLayout {
    std::size_t rows, cols, pad_bottom, pad_right;
};
TileLayout tile_layout(std::size_t height, std::size_t width, std::size_t tile_size);

// 3x3 Sobel magnitude > 0 on the integer label image, replicate-padded
// borders. Any response marks a class change.
BoundaryMap sobel_boundary(const std::vector<int>& labels, std::size_t height, std::size_t width);

TileGrid tile_split(const BoundaryMap& map, std::size_t tile_size);
BoundaryMap tile_reassemble(const TileGrid& grid);  // exact inverse, crops padding

bool tile_is_informative(const std::vector<double>& tile, double min_boundary_fraction);

// PGM interchange: boundary value 255 <-> 1.0.
void save_boundary_pgm(const std::string& path, const BoundaryMap& m);
BoundaryMap load_boundary_pgm(const std::string& path, BoundaryKind kind);

Tensor boundary_to_tensor(const BoundaryMap& m, bool requires_grad = false);
BoundaryMap tensor_to_boundary(const Tensor& t, BoundaryKind kind);

}  // namespace iform
