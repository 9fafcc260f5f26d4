#include "iform/boundary.hpp"

#include <cmath>

#include "iform/errors.hpp"
#include "iform/io.hpp"

namespace iform {

void validate(const BoundaryMap& m) {
    if (m.values.size() != m.height * m.width)
        throw ContractError("boundary map: value count does not match dimensions");
    for (double v : m.values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractError("boundary map: value outside [0,1]");
        if (m.kind == BoundaryKind::Binary && v != 0.0 && v != 1.0)
            throw ContractError("boundary map: binary map holds a non-binary value");
    }
}

TileLayout tile_layout(std::size_t height, std::size_t width, std::size_t tile_size) {
    std::size_t rows = (height + tile_size - 1) / tile_size;
    std::size_t cols = (width + tile_size - 1) / tile_size;
    return TileLayout{rows, cols, rows * tile_size - height, cols * tile_size - width};
}

BoundaryMap sobel_boundary(const std::vector<int>& labels, std::size_t height, std::size_t width) {
    if (labels.size() != height * width)
        throw ContractError("sobel_boundary: label count does not match dimensions");
    for (int v : labels)
        if (v < 0) throw ContractError("sobel_boundary: labels must be non-negative");

    BoundaryMap out;
    out.height = height;
    out.width = width;
    out.kind = BoundaryKind::Binary;
    out.values.assign(height * width, 0.0);

    auto lab = [&](long y, long x) -> double {
        // replicate border
        if (y < 0) y = 0;
        if (y >= static_cast<long>(height)) y = static_cast<long>(height) - 1;
        if (x < 0) x = 0;
        if (x >= static_cast<long>(width)) x = static_cast<long>(width) - 1;
        return static_cast<double>(labels[static_cast<std::size_t>(y) * width +
                                          static_cast<std::size_t>(x)]);
    };

    for (long y = 0; y < static_cast<long>(height); ++y)
        for (long x = 0; x < static_cast<long>(width); ++x) {
            double gx = -lab(y - 1, x - 1) + lab(y - 1, x + 1) - 2 * lab(y, x - 1) +
                        2 * lab(y, x + 1) - lab(y + 1, x - 1) + lab(y + 1, x + 1);
            double gy = -lab(y - 1, x - 1) - 2 * lab(y - 1, x) - lab(y - 1, x + 1) +
                        lab(y + 1, x - 1) + 2 * lab(y + 1, x) + lab(y + 1, x + 1);
            if (gx * gx + gy * gy > 0.0)
                out.values[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] = 1.0;
        }
    return out;
}

TileGrid tile_split(const BoundaryMap& map, std::size_t tile_size) {
    if (tile_size < 4) throw ContractError("tile_split: tile_size must be >= 4");
    TileLayout lay = tile_layout(map.height, map.width, tile_size);
    TileGrid g;
    g.tile_size = tile_size;
    g.rows = lay.rows;
    g.cols = lay.cols;
    g.pad_bottom = lay.pad_bottom;
    g.pad_right = lay.pad_right;
    g.kind = map.kind;
    g.tiles.reserve(lay.rows * lay.cols);
    for (std::size_t tr = 0; tr < lay.rows; ++tr)
        for (std::size_t tc = 0; tc < lay.cols; ++tc) {
            std::vector<double> tile(tile_size * tile_size, 0.0);
            for (std::size_t y = 0; y < tile_size; ++y) {
                std::size_t sy = tr * tile_size + y;
                if (sy >= map.height) break;
                for (std::size_t x = 0; x < tile_size; ++x) {
                    std::size_t sx = tc * tile_size + x;
                    if (sx >= map.width) break;
                    tile[y * tile_size + x] = map.at(sy, sx);
                }
            }
            g.tiles.push_back(std::move(tile));
        }
    return g;
}

BoundaryMap tile_reassemble(const TileGrid& grid) {
    if (grid.tiles.size() != grid.rows * grid.cols)
        throw ContractError("tile_reassemble: tile count does not match rows*cols");
    std::size_t ts = grid.tile_size;
    if (grid.rows * ts < grid.pad_bottom || grid.cols * ts < grid.pad_right)
        throw ContractError("tile_reassemble: padding exceeds grid size");
    BoundaryMap m;
    m.height = grid.rows * ts - grid.pad_bottom;
    m.width = grid.cols * ts - grid.pad_right;
    m.kind = grid.kind;
    m.values.assign(m.height * m.width, 0.0);
    for (std::size_t tr = 0; tr < grid.rows; ++tr)
        for (std::size_t tc = 0; tc < grid.cols; ++tc) {
            const std::vector<double>& tile = grid.tiles[tr * grid.cols + tc];
            if (tile.size() != ts * ts)
                throw ContractError("tile_reassemble: tile has wrong size");
            for (std::size_t y = 0; y < ts; ++y) {
                std::size_t sy = tr * ts + y;
                if (sy >= m.height) break;
                for (std::size_t x = 0; x < ts; ++x) {
                    std::size_t sx = tc * ts + x;
                    if (sx >= m.width) break;
                    m.at(sy, sx) = tile[y * ts + x];
                }
            }
        }
    return m;
}

bool tile_is_informative(const std::vector<double>& tile, double min_boundary_fraction) {
    std::size_t count = 0;
    for (double v : tile)
        if (v != 0.0) ++count;
    return static_cast<double>(count) >= min_boundary_fraction * static_cast<double>(tile.size());
}

void save_boundary_pgm(const std::string& path, const BoundaryMap& m) {
    write_pgm(path, m.height, m.width, m.values);
}

BoundaryMap load_boundary_pgm(const std::string& path, BoundaryKind kind) {
    BoundaryMap m;
    m.kind = kind;
    read_pgm(path, m.height, m.width, m.values);
    if (kind == BoundaryKind::Binary)
        for (double& v : m.values) v = v >= 0.5 ? 1.0 : 0.0;
    return m;
}

Tensor boundary_to_tensor(const BoundaryMap& m, bool requires_grad) {
    return Tensor::from_data({m.height, m.width}, m.values, requires_grad);
}

BoundaryMap tensor_to_boundary(const Tensor& t, BoundaryKind kind) {
    if (t.rank() != 2) throw ShapeError("tensor_to_boundary: rank != 2");
    BoundaryMap m;
    m.height = t.shape()[0];
    m.width = t.shape()[1];
    m.kind = kind;
    m.values = t.data();
    return m;
}

}  // namespace iform
