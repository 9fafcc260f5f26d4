#include "iform/segtoy.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "iform/errors.hpp"
#include "iform/io.hpp"
#include "iform/rng.hpp"

#include <json.hpp>

namespace iform {

// ---- shapes ------------------------------------------------------------------------

namespace {

enum class ShapeKind : int { Ellipse, Rect, Polygon };

struct Shape {
    ShapeKind kind;
    double cx, cy, rot;
    double ra, rb;                    // ellipse radii / rect half-sides
    std::vector<double> px, py;       // polygon vertices (convex, ccw)
    int cls;
};

bool inside(const Shape& s, double x, double y) {
    if (s.kind == ShapeKind::Ellipse) {
        double dx = x - s.cx, dy = y - s.cy;
        double c = std::cos(-s.rot), sn = std::sin(-s.rot);
        double u = c * dx - sn * dy, v = sn * dx + c * dy;
        return (u * u) / (s.ra * s.ra) + (v * v) / (s.rb * s.rb) <= 1.0;
    }
    if (s.kind == ShapeKind::Rect)  // axis-aligned, like man-made structure
        return std::abs(x - s.cx) <= s.ra && std::abs(y - s.cy) <= s.rb;
    std::size_t n = s.px.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        double ex = s.px[j] - s.px[i], ey = s.py[j] - s.py[i];
        if (ex * (y - s.py[i]) - ey * (x - s.px[i]) < 0.0) return false;
    }
    return true;
}

// fixed palette; classes get well-separated hues, background stays dark
std::array<double, 3> class_color(int cls, int num_classes) {
    if (cls == 0) return {0.15, 0.15, 0.18};
    double hue = (cls - 1) / static_cast<double>(num_classes - 1);
    double r = 0.5 + 0.45 * std::cos(6.283185307179586 * hue);
    double g = 0.5 + 0.45 * std::cos(6.283185307179586 * (hue + 1.0 / 3.0));
    double b = 0.5 + 0.45 * std::cos(6.283185307179586 * (hue + 2.0 / 3.0));
    return {r, g, b};
}

}  // namespace

ShapesSample gen_shapes_sample(std::uint64_t seed, std::size_t index, std::size_t height,
                               std::size_t width, int num_classes) {
    if (num_classes < 2) throw ContractError("gen_shapes: need at least 2 classes");
    Rng rng = Rng::stream(seed, "shapes-sample", index);

    // 2-6 shapes, weighted toward more so every class shows up in nearly
    // every sample and tiles rarely hold a single lone edge; classes cycle
    // through a permutation before repeating.
    int n_shapes;
    {
        double u = rng.uniform01();
        if (u < 0.02) n_shapes = 2;
        else if (u < 0.10) n_shapes = 3;
        else if (u < 0.30) n_shapes = 4;
        else if (u < 0.60) n_shapes = 5;
        else n_shapes = 6;
    }
    std::vector<int> cls_pool(static_cast<std::size_t>(num_classes - 1));
    for (int c = 1; c < num_classes; ++c) cls_pool[static_cast<std::size_t>(c - 1)] = c;
    rng.shuffle(cls_pool.data(), cls_pool.size());

    double dim = static_cast<double>(std::min(height, width));
    std::vector<Shape> shapes;
    for (int i = 0; i < n_shapes; ++i) {
        Shape s;
        s.cls = i < static_cast<int>(cls_pool.size())
                    ? cls_pool[static_cast<std::size_t>(i)]
                    : cls_pool[static_cast<std::size_t>(rng.uniform_int(
                          0, static_cast<int>(cls_pool.size()) - 1))];
        s.cx = rng.uniform(0.12 * width, 0.88 * width);
        s.cy = rng.uniform(0.12 * height, 0.88 * height);
        s.rot = rng.uniform(0.0, 3.141592653589793);
        double kind_draw = rng.uniform01();
        s.kind = kind_draw < 0.75 ? ShapeKind::Rect
                                 : (kind_draw < 0.9 ? ShapeKind::Ellipse : ShapeKind::Polygon);
        if (s.kind == ShapeKind::Ellipse || s.kind == ShapeKind::Rect) {
            s.ra = rng.uniform(dim / 12.0, dim / 4.0);
            s.rb = rng.uniform(dim / 12.0, dim / 4.0);
        } else {
            int verts = rng.uniform_int(3, 5);
            double base = rng.uniform(dim / 10.0, dim / 4.0);
            // convex: sorted angles around the center
            std::vector<double> angles(static_cast<std::size_t>(verts));
            for (double& a : angles) a = rng.uniform(0.0, 6.283185307179586);
            std::sort(angles.begin(), angles.end());
            for (double a : angles) {
                double rr = base * rng.uniform(0.7, 1.3);
                s.px.push_back(s.cx + rr * std::cos(a));
                s.py.push_back(s.cy + rr * std::sin(a));
            }
        }
        shapes.push_back(std::move(s));
    }

    ShapesSample out;
    out.height = height;
    out.width = width;
    out.labels.assign(height * width, 0);
    out.image.assign(3 * height * width, 0.0);

    std::vector<int> owner(height * width, -1);  // which shape painted the pixel
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            std::size_t i = y * width + x;
            for (int si = n_shapes - 1; si >= 0; --si) {  // later shapes occlude
                if (inside(shapes[static_cast<std::size_t>(si)], static_cast<double>(x) + 0.5,
                           static_cast<double>(y) + 0.5)) {
                    out.labels[i] = shapes[static_cast<std::size_t>(si)].cls;
                    owner[i] = si;
                    break;
                }
            }
        }

    // colors: class base + per-shape brightness jitter + pixel noise
    std::vector<double> shape_jitter(static_cast<std::size_t>(n_shapes));
    for (double& j : shape_jitter) j = rng.uniform(-0.12, 0.12);
    double bg_jitter = rng.uniform(-0.05, 0.05);
    std::size_t hw = height * width;
    for (std::size_t i = 0; i < hw; ++i) {
        std::array<double, 3> base = class_color(out.labels[i], num_classes);
        double j = owner[i] >= 0 ? shape_jitter[static_cast<std::size_t>(owner[i])] : bg_jitter;
        for (int c = 0; c < 3; ++c) {
            double v = base[static_cast<std::size_t>(c)] + j + 0.05 * rng.gaussian();
            out.image[static_cast<std::size_t>(c) * hw + i] = std::min(std::max(v, 0.0), 1.0);
        }
    }

    out.gt_boundary = sobel_boundary(out.labels, height, width);
    return out;
}

std::vector<ShapesSample> gen_shapes(std::size_t count, std::size_t height, std::size_t width,
                                     int num_classes, std::uint64_t seed) {
    std::vector<ShapesSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(gen_shapes_sample(seed, i, height, width, num_classes));
    return out;
}

// ---- model -------------------------------------------------------------------------

namespace {

ConvLayer make_conv(Rng& rng, std::size_t cin, std::size_t cout, std::size_t k, int stride,
                    int pad, bool transposed) {
    ConvLayer l;
    l.stride = stride;
    l.pad = pad;
    l.transposed = transposed;
    std::size_t fan_in = cin * k * k;
    double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    // weight layout: conv {Co,Ci,k,k}, transposed {Ci,Co,k,k}
    std::vector<std::size_t> shape = transposed ? std::vector<std::size_t>{cin, cout, k, k}
                                                : std::vector<std::size_t>{cout, cin, k, k};
    std::vector<double> w(cin * cout * k * k);
    for (double& x : w) x = std_dev * rng.gaussian();
    l.w = Tensor::from_data(shape, std::move(w), true);
    l.b = Tensor::zeros({cout}, true);
    return l;
}

Tensor apply(const ConvLayer& l, const Tensor& x) {
    return l.transposed ? conv_transpose2d(x, l.w, l.b, l.stride, l.pad)
                        : conv2d(x, l.w, l.b, l.stride, l.pad);
}

}  // namespace

std::vector<Tensor> SegModel::parameters() const {
    std::vector<Tensor> p;
    for (const ConvLayer& l : trunk) {
        p.push_back(l.w);
        p.push_back(l.b);
    }
    p.push_back(seg_head.w);
    p.push_back(seg_head.b);
    p.push_back(boundary_head.w);
    p.push_back(boundary_head.b);
    return p;
}

SegModel make_seg_model(std::size_t height, std::size_t width, int num_classes,
                        std::uint64_t seed, std::size_t channels, bool concat_boundary) {
    if (height % 4 != 0 || width % 4 != 0)
        throw ContractError("seg model: dimensions must be multiples of 4");
    SegModel m;
    m.height = height;
    m.width = width;
    m.num_classes = num_classes;
    m.channels = channels;
    m.concat_boundary = concat_boundary;
    Rng rng = Rng::stream(seed, "seg-init");
    std::size_t F = channels;
    m.trunk.push_back(make_conv(rng, 3, F, 3, 2, 1, false));
    m.trunk.push_back(make_conv(rng, F, F, 3, 2, 1, false));
    m.trunk.push_back(make_conv(rng, F, F, 3, 1, 1, false));
    m.trunk.push_back(make_conv(rng, F, F, 3, 1, 1, false));
    m.trunk.push_back(make_conv(rng, F, F, 4, 2, 1, true));
    m.trunk.push_back(make_conv(rng, F, F, 4, 2, 1, true));
    std::size_t seg_in = concat_boundary ? F + 1 : F;
    m.seg_head = make_conv(rng, seg_in, static_cast<std::size_t>(num_classes), 1, 1, 0, false);
    m.boundary_head = make_conv(rng, F, 1, 1, 1, 0, false);
    return m;
}

namespace {

Tensor trunk_features(const SegModel& model, const Tensor& image) {
    if (image.shape() != std::vector<std::size_t>{3, model.height, model.width})
        throw ContractError("seg_forward: image must be {3," + std::to_string(model.height) +
                            "," + std::to_string(model.width) + "}, got " +
                            shape_str(image.shape()));
    Tensor h = image;
    for (const ConvLayer& l : model.trunk) h = relu(apply(l, h));
    return h;
}

Tensor concat_channel(const Tensor& feats, const Tensor& plane) {
    // {F,H,W} + {H,W} -> {F+1,H,W}
    std::size_t F = feats.shape()[0], H = feats.shape()[1], W = feats.shape()[2];
    std::vector<double> v;
    v.reserve((F + 1) * H * W);
    v.insert(v.end(), feats.data().begin(), feats.data().end());
    v.insert(v.end(), plane.data().begin(), plane.data().end());
    std::size_t nf = F * H * W, np = H * W;
    return Tensor::make_op({F + 1, H, W}, std::move(v), {feats, plane},
                           [nf, np](Tensor::Node& self) {
                               if (self.parents[0]->requires_grad)
                                   for (std::size_t i = 0; i < nf; ++i)
                                       self.parents[0]->scratch[i] += self.scratch[i];
                               if (self.parents[1]->requires_grad)
                                   for (std::size_t i = 0; i < np; ++i)
                                       self.parents[1]->scratch[i] += self.scratch[nf + i];
                           });
}

}  // namespace

SegForward seg_forward(const SegModel& model, const Tensor& image) {
    Tensor feats = trunk_features(model, image);
    Tensor b_logit = apply(model.boundary_head, feats);  // {1,H,W}
    Tensor b_pred = sigmoid(reshape(b_logit, {model.height, model.width}));
    Tensor seg_in = model.concat_boundary ? concat_channel(feats, b_pred) : feats;
    Tensor y = apply(model.seg_head, seg_in);
    return SegForward{y, b_pred};
}

std::vector<int> infer_labels(const SegModel& model, const Tensor& image, Tensor* logits_out) {
    if (model.concat_boundary) {
        // the optional feedback path makes the boundary head part of inference
        SegForward f = seg_forward(model, image);
        if (logits_out) *logits_out = f.y_logits;
        Tensor y = f.y_logits;
        std::size_t hw = model.height * model.width;
        std::vector<int> labels(hw);
        for (std::size_t p = 0; p < hw; ++p) {
            int best = 0;
            double bv = y.at(p);
            for (int c = 1; c < model.num_classes; ++c) {
                double v = y.at(static_cast<std::size_t>(c) * hw + p);
                if (v > bv) {
                    bv = v;
                    best = c;
                }
            }
            labels[p] = best;
        }
        return labels;
    }
    Tensor feats = trunk_features(model, image);
    Tensor y = apply(model.seg_head, feats);
    if (logits_out) *logits_out = y;
    std::size_t hw = model.height * model.width;
    std::vector<int> labels(hw);
    for (std::size_t p = 0; p < hw; ++p) {
        int best = 0;
        double bv = y.at(p);
        for (int c = 1; c < model.num_classes; ++c) {
            double v = y.at(static_cast<std::size_t>(c) * hw + p);
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        labels[p] = best;
    }
    return labels;
}

// ---- cost counters --------------------------------------------------------------------

namespace {

struct PlaneDims {
    std::size_t h, w;
};

// Counts true multiplies of one layer on an input plane of the given size and
// returns the output plane size.
std::size_t layer_macs(const ConvLayer& l, std::size_t cin, std::size_t cout, PlaneDims& dims) {
    std::size_t k = l.w.shape()[2];
    std::size_t macs = 0;
    if (!l.transposed) {
        std::size_t ho = (dims.h + 2 * static_cast<std::size_t>(l.pad) - k) /
                             static_cast<std::size_t>(l.stride) +
                         1;
        std::size_t wo = (dims.w + 2 * static_cast<std::size_t>(l.pad) - k) /
                             static_cast<std::size_t>(l.stride) +
                         1;
        // count valid taps (border positions read fewer input pixels)
        std::size_t taps = 0;
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ky = 0; ky < k; ++ky) {
                long iy = static_cast<long>(oy) * l.stride - l.pad + static_cast<long>(ky);
                if (iy < 0 || iy >= static_cast<long>(dims.h)) continue;
                for (std::size_t ox = 0; ox < wo; ++ox)
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        long ix = static_cast<long>(ox) * l.stride - l.pad + static_cast<long>(kx);
                        if (ix >= 0 && ix < static_cast<long>(dims.w)) ++taps;
                    }
            }
        macs = taps * cin * cout;
        dims = {ho, wo};
    } else {
        std::size_t ho = (dims.h - 1) * static_cast<std::size_t>(l.stride) + k -
                         2 * static_cast<std::size_t>(l.pad);
        std::size_t wo = (dims.w - 1) * static_cast<std::size_t>(l.stride) + k -
                         2 * static_cast<std::size_t>(l.pad);
        std::size_t taps = 0;
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ky = 0; ky < k; ++ky) {
                long iy = static_cast<long>(oy) + l.pad - static_cast<long>(ky);
                if (iy < 0 || iy % l.stride || iy / l.stride >= static_cast<long>(dims.h)) continue;
                for (std::size_t ox = 0; ox < wo; ++ox)
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        long ix = static_cast<long>(ox) + l.pad - static_cast<long>(kx);
                        if (ix >= 0 && ix % l.stride == 0 &&
                            ix / l.stride < static_cast<long>(dims.w))
                            ++taps;
                    }
            }
        macs = taps * cin * cout;
        dims = {ho, wo};
    }
    return macs;
}

}  // namespace

std::size_t inference_param_count(const SegModel& model) {
    std::size_t n = 0;
    for (const ConvLayer& l : model.trunk) n += l.w.size() + l.b.size();
    n += model.seg_head.w.size() + model.seg_head.b.size();
    if (model.concat_boundary) n += model.boundary_head.w.size() + model.boundary_head.b.size();
    return n;
}

std::size_t inference_mac_count(const SegModel& model) {
    PlaneDims dims{model.height, model.width};
    std::size_t macs = 0;
    std::size_t cin = 3;
    for (const ConvLayer& l : model.trunk) {
        std::size_t cout = l.transposed ? l.w.shape()[1] : l.w.shape()[0];
        macs += layer_macs(l, cin, cout, dims);
        cin = cout;
    }
    std::size_t seg_in = model.concat_boundary ? cin + 1 : cin;
    PlaneDims head_dims = dims;
    macs += layer_macs(model.seg_head, seg_in, static_cast<std::size_t>(model.num_classes),
                       head_dims);
    if (model.concat_boundary) {
        PlaneDims bd = dims;
        macs += layer_macs(model.boundary_head, cin, 1, bd);
    }
    return macs;
}

// ---- training ---------------------------------------------------------------------------

SegEpochMetrics evaluate_seg(const SegModel& model, const std::vector<ShapesSample>& val) {
    SegEpochMetrics m;
    ConfusionMatrix cm(static_cast<std::size_t>(model.num_classes));
    double mba_sum = 0.0;
    for (const ShapesSample& s : val) {
        Tensor img = Tensor::from_data({3, s.height, s.width}, s.image);
        std::vector<int> pred = infer_labels(model, img);
        cm.accumulate(pred, s.labels);
        mba_sum += mba(pred, s.labels, s.height, s.width).value;
    }
    m.val_miou = miou(cm);
    m.val_pixel_acc = pixel_accuracy(cm);
    m.val_mba = val.empty() ? 0.0 : mba_sum / static_cast<double>(val.size());
    return m;
}

std::vector<SegEpochMetrics> train_seg(SegModel& model, const std::vector<ShapesSample>& train,
                                       const std::vector<ShapesSample>& val,
                                       const ItnModel& itn, const LossWeights& weights,
                                       const DistanceConfig& cfg, const SegTrainOptions& opts) {
    if (train.empty()) throw EmptyDatasetError("train_seg: empty training set");
    if (!itn.frozen) throw ContractError("train_seg: the distance model must be frozen");
    validate(weights);

    std::vector<Tensor> params = model.parameters();
    std::vector<std::vector<double>> velocity;
    for (Tensor& p : params) velocity.emplace_back(p.size(), 0.0);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<SegEpochMetrics> history;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        Rng shuffle_rng = Rng::stream(opts.seed, "seg-epoch", static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order.data(), order.size());

        double sum_total = 0.0, sum_xe = 0.0, sum_bxe = 0.0, sum_if = 0.0;
        std::size_t step = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            std::size_t end = std::min(order.size(), start + opts.batch_size);
            double inv_b = 1.0 / static_cast<double>(end - start);
            for (Tensor& p : params) p.zero_grad();
            for (std::size_t bi = start; bi < end; ++bi) {
                const ShapesSample& s = train[order[bi]];
                Tensor img = Tensor::from_data({3, s.height, s.width}, s.image);
                SegForward f = seg_forward(model, img);
                Tensor xe = pixel_cross_entropy(f.y_logits, s.labels);
                Tensor bxe = balanced_boundary_xe(f.b_pred, s.gt_boundary);
                Tensor ifl = Tensor::scalar(0.0);
                if (weights.gamma != 0.0) {
                    InverseFormResult r =
                        inverseform_loss(f.b_pred, s.gt_boundary, itn, cfg, opts.tile_size,
                                         opts.min_boundary_fraction, opts.normalize_if);
                    ifl = r.loss;
                }
                Tensor total = total_loss(xe, bxe, ifl, weights);
                double tv = total.value();
                if (!std::isfinite(tv))
                    throw DivergenceError(
                        "train_seg: non-finite loss at epoch " + std::to_string(epoch + 1) +
                        " step " + std::to_string(step) + " (xe=" + std::to_string(xe.value()) +
                        " bxe=" + std::to_string(bxe.value()) +
                        " if=" + std::to_string(ifl.value()) + ")");
                sum_total += tv;
                sum_xe += xe.value();
                sum_bxe += bxe.value();
                sum_if += ifl.value();
                // mean-over-batch gradients
                scale(total, inv_b).backward();
            }
            for (std::size_t pi = 0; pi < params.size(); ++pi) {
                std::vector<double>& v = velocity[pi];
                const std::vector<double>& g = params[pi].grad();
                std::vector<double>& w = params[pi].leaf_data();
                for (std::size_t i = 0; i < w.size(); ++i) {
                    v[i] = opts.momentum * v[i] + g[i];
                    w[i] -= opts.learning_rate * v[i];
                }
            }
            ++step;
        }

        SegEpochMetrics m = evaluate_seg(model, val);
        m.epoch = epoch + 1;
        double n = static_cast<double>(train.size());
        m.train_total = sum_total / n;
        m.train_xe = sum_xe / n;
        m.train_bxe = sum_bxe / n;
        m.train_if = sum_if / n;
        history.push_back(m);
        if (opts.on_epoch) opts.on_epoch(m);
    }
    return history;
}

// ---- persistence --------------------------------------------------------------------------

void save_seg_checkpoint(const SegModel& model, const std::string& path) {
    std::vector<std::uint8_t> buf;
    const char magic[4] = {'I', 'F', 'S', 'G'};
    buf.insert(buf.end(), magic, magic + 4);
    buf.push_back(1);  // version
    buf.push_back(static_cast<std::uint8_t>(model.num_classes));
    buf.push_back(model.concat_boundary ? 1 : 0);
    buf.push_back(static_cast<std::uint8_t>(model.channels));
    auto push_u16 = [&](std::size_t v) {
        buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
        buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    };
    push_u16(model.height);
    push_u16(model.width);
    buf.push_back(static_cast<std::uint8_t>(model.trunk.size()));
    auto push_layer = [&](const ConvLayer& l) {
        buf.push_back(l.transposed ? 1 : 0);
        buf.push_back(static_cast<std::uint8_t>(l.stride));
        buf.push_back(static_cast<std::uint8_t>(l.pad));
        append_iftn(buf, l.w);
        append_iftn(buf, l.b);
    };
    for (const ConvLayer& l : model.trunk) push_layer(l);
    push_layer(model.seg_head);
    push_layer(model.boundary_head);
    write_file_atomic(path, buf.data(), buf.size());
}

SegModel load_seg_checkpoint(const std::string& path) {
    std::vector<std::uint8_t> buf = read_file(path);
    if (buf.size() < 13) throw FormatError("seg checkpoint too short", buf.size());
    if (buf[0] != 'I' || buf[1] != 'F' || buf[2] != 'S' || buf[3] != 'G')
        throw FormatError("bad IFSG magic", 0);
    if (buf[4] != 1) throw FormatError("unsupported IFSG version", 4);
    SegModel m;
    m.num_classes = buf[5];
    m.concat_boundary = buf[6] != 0;
    m.channels = buf[7];
    m.height = static_cast<std::size_t>(buf[8]) | (static_cast<std::size_t>(buf[9]) << 8);
    m.width = static_cast<std::size_t>(buf[10]) | (static_cast<std::size_t>(buf[11]) << 8);
    std::size_t n_trunk = buf[12];
    std::size_t off = 13;
    auto read_layer = [&]() {
        if (off + 3 > buf.size()) throw FormatError("seg checkpoint truncated in layer header", off);
        ConvLayer l;
        l.transposed = buf[off] != 0;
        l.stride = buf[off + 1];
        l.pad = buf[off + 2];
        off += 3;
        std::size_t at = off;
        Tensor w = decode_iftn(buf, off);
        if (w.rank() != 4) throw FormatError("seg checkpoint layer weight must be rank 4", at);
        at = off;
        Tensor b = decode_iftn(buf, off);
        std::size_t cout = l.transposed ? w.shape()[1] : w.shape()[0];
        if (b.rank() != 1 || b.shape()[0] != cout)
            throw FormatError("seg checkpoint bias does not match weight", at);
        l.w = Tensor::from_data(w.shape(), w.data(), true);
        l.b = Tensor::from_data(b.shape(), b.data(), true);
        return l;
    };
    for (std::size_t i = 0; i < n_trunk; ++i) m.trunk.push_back(read_layer());
    m.seg_head = read_layer();
    m.boundary_head = read_layer();
    if (off != buf.size()) throw FormatError("trailing bytes after seg checkpoint", off);
    return m;
}

void save_shapes_dataset(const std::string& dir, const std::vector<ShapesSample>& samples) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["kind"] = "shapes-dataset";
    manifest["count"] = samples.size();
    if (!samples.empty()) {
        manifest["height"] = samples[0].height;
        manifest["width"] = samples[0].width;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ShapesSample& s = samples[i];
        std::string stem = dir + "/sample_" + std::to_string(i);
        write_ppm(stem + ".ppm", s.height, s.width, s.image);
        std::vector<double> lab(s.labels.begin(), s.labels.end());
        write_iftn(stem + "_labels.iftn",
                   Tensor::from_data({s.height, s.width}, lab));
        save_boundary_pgm(stem + "_boundary.pgm", s.gt_boundary);
    }
    write_file_atomic(dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::vector<ShapesSample> load_shapes_dataset(const std::string& dir) {
    nlohmann::json manifest = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
    if (manifest.value("kind", "") != "shapes-dataset")
        throw FormatError("not a shapes-dataset manifest", 0);
    std::size_t count = manifest.at("count").get<std::size_t>();
    std::vector<ShapesSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string stem = dir + "/sample_" + std::to_string(i);
        ShapesSample s;
        read_ppm(stem + ".ppm", s.height, s.width, s.image);
        Tensor lab = read_iftn(stem + "_labels.iftn");
        s.labels.resize(lab.size());
        for (std::size_t j = 0; j < lab.size(); ++j)
            s.labels[j] = static_cast<int>(lab.at(j));
        s.gt_boundary = load_boundary_pgm(stem + "_boundary.pgm", BoundaryKind::Binary);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace iform
