#include "iform/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "iform/errors.hpp"
#include "iform/loss.hpp"
#include "iform/rng.hpp"

namespace iform {

void validate(const SweepSpec& spec) {
    if (spec.magnitudes.empty() || spec.magnitudes.front() != 0.0)
        throw ContractError("sweep: magnitudes must start at 0");
    for (std::size_t i = 1; i < spec.magnitudes.size(); ++i)
        if (spec.magnitudes[i] <= spec.magnitudes[i - 1])
            throw ContractError("sweep: magnitudes must be strictly increasing");
    if (spec.num_tiles == 0) throw ContractError("sweep: num_tiles must be > 0");
}

double hausdorff_boundary(const BoundaryMap& a, const BoundaryMap& b) {
    std::vector<std::pair<double, double>> pa, pb;
    for (std::size_t y = 0; y < a.height; ++y)
        for (std::size_t x = 0; x < a.width; ++x)
            if (a.at(y, x) != 0.0) pa.emplace_back(static_cast<double>(y), static_cast<double>(x));
    for (std::size_t y = 0; y < b.height; ++y)
        for (std::size_t x = 0; x < b.width; ++x)
            if (b.at(y, x) != 0.0) pb.emplace_back(static_cast<double>(y), static_cast<double>(x));
    if (pa.empty() || pb.empty())
        throw ContractError("hausdorff: both maps need at least one boundary pixel");

    auto directed = [](const std::vector<std::pair<double, double>>& from,
                       const std::vector<std::pair<double, double>>& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                double dy = p.first - q.first, dx = p.second - q.second;
                double d2 = dy * dy + dx * dx;
                if (d2 < best) best = d2;
            }
            if (best > worst) worst = best;
        }
        return std::sqrt(worst);
    };
    return std::max(directed(pa, pb), directed(pb, pa));
}

double ncc_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw ContractError("ncc_distance: size mismatch or empty input");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(a.size());
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0.0 || vb <= 0.0) {
        bool equal = true;
        for (std::size_t i = 0; i < a.size() && equal; ++i) equal = a[i] == b[i];
        return equal ? 0.0 : 2.0;
    }
    return 1.0 - num / std::sqrt(va * vb);
}

namespace {

Mat3 sweep_transform(SweepAxis axis, double magnitude) {
    switch (axis) {
        case SweepAxis::Translation:
            // fraction of the tile side on both axes; one side = 2 units
            return translation_matrix(2.0 * magnitude, 2.0 * magnitude);
        case SweepAxis::Rotation:
            return rotation_matrix(magnitude);
        case SweepAxis::Scale:
        default:
            return scale_matrix(1.0 + magnitude);
    }
}

BoundaryMap threshold_map(const std::vector<double>& tile, std::size_t ts) {
    BoundaryMap m;
    m.height = ts;
    m.width = ts;
    m.kind = BoundaryKind::Binary;
    m.values.resize(tile.size());
    for (std::size_t i = 0; i < tile.size(); ++i) m.values[i] = tile[i] >= 0.5 ? 1.0 : 0.0;
    return m;
}

}  // namespace

SweepTable run_sweep(const SweepSpec& spec, const std::vector<BoundaryMap>& maps,
                     const ItnModel& itn, const DistanceConfig& cfg) {
    validate(spec);
    if (!itn.frozen) throw ContractError("sweep: the distance model must be frozen");

    // informative tile pool, deterministic order
    std::vector<std::vector<double>> pool;
    for (const BoundaryMap& m : maps) {
        TileGrid g = tile_split(m, spec.tile_size);
        for (const std::vector<double>& t : g.tiles)
            if (tile_is_informative(t, spec.min_boundary_fraction)) pool.push_back(t);
    }
    if (pool.empty()) throw EmptyDatasetError("sweep: no informative tiles in the map pool");

    Rng rng = Rng::stream(spec.seed, "sweep-tiles");
    std::vector<std::size_t> pick(pool.size());
    for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
    rng.shuffle(pick.data(), pick.size());
    std::size_t n_tiles = std::min(spec.num_tiles, pool.size());

    const char* measures[] = {"balanced_xe", "ncc", "hausdorff", "inverseform"};
    SweepTable table;
    std::size_t ts = spec.tile_size;

    for (double mag : spec.magnitudes) {
        HomographyParams theta{sweep_transform(spec.axis, mag), itn.mode};
        std::map<std::string, std::vector<double>> vals;
        for (std::size_t i = 0; i < n_tiles; ++i) {
            const std::vector<double>& tile = pool[pick[i]];
            Tensor src = Tensor::from_data({ts, ts}, tile);
            Tensor warped = mag == 0.0 ? src : stn_warp(src, theta);

            BoundaryMap gt = threshold_map(tile, ts);
            vals["balanced_xe"].push_back(balanced_boundary_xe(warped, gt).value());
            vals["ncc"].push_back(ncc_distance(warped.data(), tile));
            BoundaryMap wb = threshold_map(warped.data(), ts);
            bool has_pixels = false;
            for (double v : wb.values) has_pixels = has_pixels || v != 0.0;
            if (has_pixels) vals["hausdorff"].push_back(hausdorff_boundary(wb, gt));

            Tensor vec = itn_forward(itn, warped, src);
            Tensor mat = params_to_matrix(vec, itn.mode);
            vals["inverseform"].push_back(inverseform_tile_distance(mat, cfg).value());
        }
        for (const char* m : measures) {
            const std::vector<double>& v = vals[m];
            SweepCell cell;
            cell.magnitude = mag;
            cell.measure = m;
            cell.n = v.size();
            if (!v.empty()) {
                double s = 0.0;
                for (double x : v) s += x;
                cell.mean = s / static_cast<double>(v.size());
                double q = 0.0;
                for (double x : v) q += (x - cell.mean) * (x - cell.mean);
                cell.stddev = std::sqrt(q / static_cast<double>(v.size()));
            }
            table.cells.push_back(cell);
        }
    }
    return table;
}

std::string sweep_to_csv(const SweepTable& table) {
    std::string out = "magnitude,measure,mean,stddev,n\n";
    char line[160];
    for (const SweepCell& c : table.cells) {
        std::snprintf(line, sizeof(line), "%.17g,%s,%.17g,%.17g,%zu\n", c.magnitude,
                      c.measure.c_str(), c.mean, c.stddev, c.n);
        out += line;
    }
    return out;
}

std::string sweep_to_svg(const SweepTable& table) {
    // group by measure, keep magnitude order
    std::vector<std::string> measures;
    for (const SweepCell& c : table.cells)
        if (std::find(measures.begin(), measures.end(), c.measure) == measures.end())
            measures.push_back(c.measure);

    const int panel_w = 360, panel_h = 180, margin = 42;
    int width = panel_w + 2 * margin;
    int height = static_cast<int>(measures.size()) * (panel_h + margin) + margin;
    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "font-family=\"monospace\" font-size=\"11\">\n",
                  width, height);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t mi = 0; mi < measures.size(); ++mi) {
        std::vector<const SweepCell*> cells;
        for (const SweepCell& c : table.cells)
            if (c.measure == measures[mi]) cells.push_back(&c);
        double xmin = cells.front()->magnitude, xmax = cells.back()->magnitude;
        double ymin = 0.0, ymax = 1e-12;
        for (const SweepCell* c : cells) ymax = std::max(ymax, c->mean + c->stddev);
        int top = margin + static_cast<int>(mi) * (panel_h + margin);

        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                      "stroke=\"black\"/>\n",
                      margin, top, panel_w, panel_h);
        svg += buf;
        std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\">%s (max %.4g)</text>\n", margin,
                      top - 6, measures[mi].c_str(), ymax);
        svg += buf;

        auto px = [&](double x) {
            return margin + (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.0) * panel_w;
        };
        auto py = [&](double y) { return top + panel_h - (y - ymin) / (ymax - ymin) * panel_h; };

        std::string pts;
        for (const SweepCell* c : cells) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(c->magnitude), py(c->mean));
            pts += buf;
        }
        svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
        for (const SweepCell* c : cells) {
            std::snprintf(buf, sizeof(buf),
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                          "stroke=\"#1f77b4\" stroke-width=\"0.7\"/>\n",
                          px(c->magnitude), py(std::max(ymin, c->mean - c->stddev)),
                          px(c->magnitude), py(c->mean + c->stddev));
            svg += buf;
        }
        // x-axis tick labels at the endpoints
        std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\">%.3g</text>\n", margin,
                      top + panel_h + 14, xmin);
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%.3g</text>\n",
                      margin + panel_w, top + panel_h + 14, xmax);
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace iform
