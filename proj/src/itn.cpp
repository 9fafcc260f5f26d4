#include "iform/itn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "iform/errors.hpp"
#include "iform/io.hpp"
#include "iform/rng.hpp"

namespace iform {

std::vector<Tensor> ItnModel::parameters() const {
    std::vector<Tensor> p;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        p.push_back(weights[i]);
        p.push_back(biases[i]);
    }
    return p;
}

std::size_t ItnModel::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor& t : parameters()) n += t.size();
    return n;
}

ItnModel make_itn(std::size_t tile_size, ParamMode mode, DistanceMode distance_mode,
                  std::uint64_t seed, std::size_t hidden) {
    ItnModel m;
    m.tile_size = tile_size;
    m.mode = mode;
    m.distance_mode = distance_mode;
    m.frozen = false;
    std::size_t in = 2 * tile_size * tile_size;
    std::size_t k = static_cast<std::size_t>(param_count(mode));
    std::array<std::size_t, 4> dims{in, hidden, hidden, k};
    for (int layer = 0; layer < 3; ++layer) {
        std::size_t fan_in = dims[layer], fan_out = dims[layer + 1];
        std::vector<double> w(fan_in * fan_out, 0.0);
        if (layer < 2) {
            // He initialization for the ReLU hidden layers; the output layer
            // stays zero so a fresh model emits the identity transform.
            Rng rng = Rng::stream(seed, "itn-init", static_cast<std::uint64_t>(layer));
            double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (double& x : w) x = std_dev * rng.gaussian();
        }
        m.weights.push_back(Tensor::from_data({fan_in, fan_out}, std::move(w), true));
        m.biases.push_back(Tensor::zeros({fan_out}, true));
    }
    return m;
}

ItnModel freeze(const ItnModel& model) {
    ItnModel f;
    f.tile_size = model.tile_size;
    f.mode = model.mode;
    f.distance_mode = model.distance_mode;
    f.frozen = true;
    for (const Tensor& w : model.weights)
        f.weights.push_back(Tensor::from_data(w.shape(), w.data(), false));
    for (const Tensor& b : model.biases)
        f.biases.push_back(Tensor::from_data(b.shape(), b.data(), false));
    return f;
}

Tensor itn_forward_batch(const ItnModel& model, const Tensor& x) {
    std::size_t in = 2 * model.tile_size * model.tile_size;
    if (x.rank() != 2 || x.shape()[1] != in)
        throw ContractError("itn_forward: input must be {B," + std::to_string(in) + "}, got " +
                            shape_str(x.shape()));
    Tensor h1 = relu(add_rowvec(matmul(x, model.weights[0]), model.biases[0]));
    Tensor h2 = relu(add_rowvec(matmul(h1, model.weights[1]), model.biases[1]));
    Tensor o = add_rowvec(matmul(h2, model.weights[2]), model.biases[2]);
    Tensor id = Tensor::from_data({static_cast<std::size_t>(param_count(model.mode))},
                                  identity_vector(model.mode));
    return add_rowvec(o, id);
}

Tensor itn_forward(const ItnModel& model, const Tensor& a, const Tensor& b) {
    std::size_t t = model.tile_size;
    if (a.shape() != std::vector<std::size_t>{t, t} || b.shape() != std::vector<std::size_t>{t, t})
        throw ContractError("itn_forward: tiles must be {" + std::to_string(t) + "," +
                            std::to_string(t) + "}, got " + shape_str(a.shape()) + " and " +
                            shape_str(b.shape()));
    Tensor x = reshape(concat1d(reshape(a, {t * t}), reshape(b, {t * t})), {1, 2 * t * t});
    Tensor out = itn_forward_batch(model, x);
    return reshape(out, {static_cast<std::size_t>(param_count(model.mode))});
}

// ---- pair dataset ---------------------------------------------------------------------

void TilePairBatch::append(const TilePairBatch& other) {
    if (count == 0) {
        tile_size = other.tile_size;
        mode = other.mode;
    }
    count += other.count;
    sources.insert(sources.end(), other.sources.begin(), other.sources.end());
    warped.insert(warped.end(), other.warped.begin(), other.warped.end());
    targets.insert(targets.end(), other.targets.begin(), other.targets.end());
    thetas.insert(thetas.end(), other.thetas.begin(), other.thetas.end());
}

void TilePairBatch::clear() {
    count = 0;
    sources.clear();
    warped.clear();
    targets.clear();
    thetas.clear();
}

PairDataset::PairDataset(std::function<BoundaryMap(std::size_t)> map_at, std::size_t num_maps,
                         const TransformRanges& ranges, ParamMode mode, std::size_t tile_size,
                         double min_boundary_fraction, std::uint64_t seed)
    : map_at_(std::move(map_at)),
      ranges_(ranges),
      mode_(mode),
      tile_size_(tile_size),
      min_fraction_(min_boundary_fraction),
      seed_(seed) {
    if (num_maps == 0) throw EmptyDatasetError("pair dataset: no source maps");
    validate(ranges);
    group_start_.reserve(num_maps + 1);
    for (std::size_t mi = 0; mi < num_maps; ++mi) {
        group_start_.push_back(refs_.size());
        BoundaryMap map = map_at_(mi);
        TileGrid grid = tile_split(map, tile_size_);
        for (std::size_t tr = 0; tr < grid.rows; ++tr)
            for (std::size_t tc = 0; tc < grid.cols; ++tc)
                if (tile_is_informative(grid.tiles[tr * grid.cols + tc], min_fraction_))
                    refs_.push_back({static_cast<std::uint32_t>(mi),
                                     static_cast<std::uint32_t>(tr),
                                     static_cast<std::uint32_t>(tc)});
    }
    group_start_.push_back(refs_.size());
    pair_count_ = refs_.size();
    if (pair_count_ == 0) throw EmptyDatasetError("pair dataset: no informative tiles");
}

PairDataset::PairDataset(TilePairBatch all) : all_(std::move(all)), materialized_(true) {
    tile_size_ = all_.tile_size;
    mode_ = all_.mode;
    pair_count_ = all_.count;
    if (pair_count_ == 0) throw EmptyDatasetError("pair dataset: empty materialized batch");
}

std::size_t PairDataset::group_count() const {
    if (materialized_) return (pair_count_ + 511) / 512;
    return group_start_.size() - 1;
}

void PairDataset::emit_pair(const TileRef& ref, const BoundaryMap& map, TilePairBatch& out) const {
    std::size_t ts = tile_size_;
    // crop the tile (zero-padded at the bottom/right edge like tile_split)
    std::vector<double> tile(ts * ts, 0.0);
    for (std::size_t y = 0; y < ts; ++y) {
        std::size_t sy = ref.tile_row * ts + y;
        if (sy >= map.height) break;
        for (std::size_t x = 0; x < ts; ++x) {
            std::size_t sx = ref.tile_col * ts + x;
            if (sx >= map.width) break;
            tile[y * ts + x] = map.at(sy, sx);
        }
    }
    std::size_t tile_linear = static_cast<std::size_t>(ref.tile_row) * 4096 + ref.tile_col;
    Rng theta_rng = Rng::stream(seed_, "pair-theta", ref.map_idx, tile_linear);
    HomographyParams theta = sample_transform(ranges_, theta_rng.next_u64(), mode_);
    Tensor src = Tensor::from_data({ts, ts}, tile);
    Tensor wrp = stn_warp(src, theta);
    std::vector<double> tvec = to_vector(theta);

    out.tile_size = ts;
    out.mode = mode_;
    ++out.count;
    out.sources.insert(out.sources.end(), tile.begin(), tile.end());
    out.warped.insert(out.warped.end(), wrp.data().begin(), wrp.data().end());
    out.targets.insert(out.targets.end(), tvec.begin(), tvec.end());
    out.thetas.insert(out.thetas.end(), theta.matrix.a.begin(), theta.matrix.a.end());
}

TilePairBatch PairDataset::load_group(std::size_t g) const {
    TilePairBatch out;
    out.tile_size = tile_size_;
    out.mode = mode_;
    if (materialized_) {
        std::size_t lo = g * 512, hi = std::min(pair_count_, lo + 512);
        return load_range(lo, hi);
    }
    std::size_t lo = group_start_[g], hi = group_start_[g + 1];
    if (lo == hi) return out;
    BoundaryMap map = map_at_(refs_[lo].map_idx);
    for (std::size_t i = lo; i < hi; ++i) emit_pair(refs_[i], map, out);
    return out;
}

TilePairBatch PairDataset::load_range(std::size_t lo, std::size_t hi) const {
    TilePairBatch out;
    out.tile_size = tile_size_;
    out.mode = mode_;
    if (hi > pair_count_ || lo > hi) throw ContractError("pair dataset: bad range");
    if (materialized_) {
        std::size_t ts2 = tile_size_ * tile_size_;
        std::size_t k = static_cast<std::size_t>(param_count(mode_));
        out.count = hi - lo;
        out.sources.assign(all_.sources.begin() + lo * ts2, all_.sources.begin() + hi * ts2);
        out.warped.assign(all_.warped.begin() + lo * ts2, all_.warped.begin() + hi * ts2);
        out.targets.assign(all_.targets.begin() + lo * k, all_.targets.begin() + hi * k);
        if (all_.thetas.size() >= hi * 9)
            out.thetas.assign(all_.thetas.begin() + lo * 9, all_.thetas.begin() + hi * 9);
        return out;
    }
    std::size_t cur_map = static_cast<std::size_t>(-1);
    BoundaryMap map;
    for (std::size_t i = lo; i < hi; ++i) {
        if (refs_[i].map_idx != cur_map) {
            cur_map = refs_[i].map_idx;
            map = map_at_(cur_map);
        }
        emit_pair(refs_[i], map, out);
    }
    return out;
}

PairStream::PairStream(const PairDataset& ds, std::uint64_t pass_seed) : ds_(ds) {
    group_order_.resize(ds.group_count());
    for (std::size_t i = 0; i < group_order_.size(); ++i) group_order_[i] = i;
    Rng rng = Rng::stream(pass_seed, "pair-stream-shuffle");
    rng.shuffle(group_order_.data(), group_order_.size());
    buffer_.tile_size = ds.tile_size();
    buffer_.mode = ds.mode();
}

bool PairStream::next(std::size_t batch_size, TilePairBatch& out) {
    out.clear();
    out.tile_size = ds_.tile_size();
    out.mode = ds_.mode();
    std::size_t ts2 = ds_.tile_size() * ds_.tile_size();
    std::size_t k = static_cast<std::size_t>(param_count(ds_.mode()));
    while (out.count < batch_size) {
        if (buffer_pos_ >= buffer_.count) {
            if (next_group_ >= group_order_.size()) break;
            buffer_ = ds_.load_group(group_order_[next_group_++]);
            buffer_pos_ = 0;
            continue;
        }
        std::size_t i = buffer_pos_++;
        ++out.count;
        out.sources.insert(out.sources.end(), buffer_.sources.begin() + i * ts2,
                           buffer_.sources.begin() + (i + 1) * ts2);
        out.warped.insert(out.warped.end(), buffer_.warped.begin() + i * ts2,
                          buffer_.warped.begin() + (i + 1) * ts2);
        out.targets.insert(out.targets.end(), buffer_.targets.begin() + i * k,
                           buffer_.targets.begin() + (i + 1) * k);
        if (buffer_.thetas.size() >= (i + 1) * 9)
            out.thetas.insert(out.thetas.end(), buffer_.thetas.begin() + i * 9,
                              buffer_.thetas.begin() + (i + 1) * 9);
    }
    return out.count > 0;
}

// ---- training ---------------------------------------------------------------------------

namespace {

Tensor batch_input(const TilePairBatch& b) {
    std::size_t ts2 = b.tile_size * b.tile_size;
    std::vector<double> x(b.count * 2 * ts2);
    for (std::size_t i = 0; i < b.count; ++i) {
        std::copy(b.sources.begin() + i * ts2, b.sources.begin() + (i + 1) * ts2,
                  x.begin() + i * 2 * ts2);
        std::copy(b.warped.begin() + i * ts2, b.warped.begin() + (i + 1) * ts2,
                  x.begin() + i * 2 * ts2 + ts2);
    }
    return Tensor::from_data({b.count, 2 * ts2}, std::move(x));
}

Tensor batch_loss(const ItnModel& model, const TilePairBatch& batch, double lambda) {
    Tensor pred = itn_forward_batch(model, batch_input(batch));
    std::size_t k = static_cast<std::size_t>(param_count(model.mode));
    if (model.distance_mode == DistanceMode::Euclidean) {
        Tensor target = Tensor::from_data({batch.count, k}, batch.targets);
        Tensor d = sub(pred, target);
        return scale(sum(mul(d, d)), 1.0 / static_cast<double>(batch.count));
    }
    DistanceConfig cfg;
    cfg.mode = DistanceMode::Geodesic;
    cfg.lambda = lambda;
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < batch.count; ++i) {
        Mat3 theta;
        std::copy(batch.thetas.begin() + i * 9, batch.thetas.begin() + (i + 1) * 9,
                  theta.a.begin());
        Tensor row = reshape(slice2d(pred, i, 0, 1, k), {k});
        Tensor mat = params_to_matrix(row, model.mode);
        acc = add(acc, geodesic_distance_t(theta, mat, cfg));
    }
    return scale(acc, 1.0 / static_cast<double>(batch.count));
}

}  // namespace

double holdout_parameter_mse(const ItnModel& model, const TilePairBatch& pairs) {
    if (pairs.count == 0) throw EmptyDatasetError("holdout_parameter_mse: empty batch");
    std::size_t k = static_cast<std::size_t>(param_count(model.mode));
    double se = 0.0;
    // chunked forward keeps peak memory small
    std::size_t done = 0;
    while (done < pairs.count) {
        std::size_t n = std::min<std::size_t>(256, pairs.count - done);
        TilePairBatch chunk;
        chunk.tile_size = pairs.tile_size;
        chunk.mode = pairs.mode;
        chunk.count = n;
        std::size_t ts2 = pairs.tile_size * pairs.tile_size;
        chunk.sources.assign(pairs.sources.begin() + done * ts2,
                             pairs.sources.begin() + (done + n) * ts2);
        chunk.warped.assign(pairs.warped.begin() + done * ts2,
                            pairs.warped.begin() + (done + n) * ts2);
        Tensor pred = itn_forward_batch(model, batch_input(chunk));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                double d = pred.at(i * k + j) - pairs.targets[(done + i) * k + j];
                se += d * d;
            }
        done += n;
    }
    return se / static_cast<double>(pairs.count * k);
}

double identity_baseline_mse(const TilePairBatch& pairs) {
    if (pairs.count == 0) throw EmptyDatasetError("identity_baseline_mse: empty batch");
    std::size_t k = pairs.targets.size() / pairs.count;
    std::vector<double> id = identity_vector(pairs.mode);
    double se = 0.0;
    for (std::size_t i = 0; i < pairs.count; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double d = pairs.targets[i * k + j] - id[j];
            se += d * d;
        }
    return se / static_cast<double>(pairs.count * k);
}

LossCurve train_itn(ItnModel& model, const PairDataset& dataset, const ItnTrainOptions& opts,
                    const PairDataset* holdout) {
    if (model.frozen) throw ContractError("train_itn: model is frozen");
    if (dataset.pair_count() == 0) throw EmptyDatasetError("train_itn: empty dataset");
    if (dataset.tile_size() != model.tile_size || dataset.mode() != model.mode)
        throw ContractError("train_itn: dataset tile_size/mode do not match the model");

    std::vector<Tensor> params = model.parameters();
    std::vector<std::vector<double>> velocity;
    for (Tensor& p : params) velocity.emplace_back(p.size(), 0.0);

    TilePairBatch holdout_batch;
    if (holdout) holdout_batch = holdout->load_range(0, holdout->pair_count());

    LossCurve curve;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        PairStream stream(dataset, Rng::stream(opts.seed, "itn-epoch",
                                               static_cast<std::uint64_t>(epoch))
                                       .next_u64());
        TilePairBatch batch;
        double loss_sum = 0.0;
        std::size_t seen = 0;
        int step = 0;
        while (stream.next(opts.batch_size, batch)) {
            Tensor loss = batch_loss(model, batch, opts.lambda);
            double lv = loss.value();
            if (!std::isfinite(lv))
                throw DivergenceError("train_itn: non-finite loss at epoch " +
                                      std::to_string(epoch + 1) + " step " + std::to_string(step));
            loss_sum += lv * static_cast<double>(batch.count);
            seen += batch.count;
            for (Tensor& p : params) p.zero_grad();
            loss.backward();
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
        curve.epoch.push_back(epoch + 1);
        curve.train_loss.push_back(loss_sum / static_cast<double>(seen));
        curve.holdout_mse.push_back(
            holdout ? holdout_parameter_mse(model, holdout_batch)
                    : std::numeric_limits<double>::quiet_NaN());
        if (opts.on_epoch)
            opts.on_epoch(curve.epoch.back(), curve.train_loss.back(), curve.holdout_mse.back());
    }
    return curve;
}

// ---- checkpoints --------------------------------------------------------------------------

void save_checkpoint(const ItnModel& model, const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.push_back('I');
    buf.push_back('F');
    buf.push_back('C');
    buf.push_back('K');
    buf.push_back(1);  // version
    buf.push_back(static_cast<std::uint8_t>(model.mode));
    buf.push_back(static_cast<std::uint8_t>(model.tile_size & 0xFF));
    buf.push_back(static_cast<std::uint8_t>((model.tile_size >> 8) & 0xFF));
    buf.push_back(static_cast<std::uint8_t>(model.distance_mode));
    buf.push_back(model.frozen ? 1 : 0);
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        append_iftn(buf, model.weights[i]);
        append_iftn(buf, model.biases[i]);
    }
    write_file_atomic(path, buf.data(), buf.size());
}

ItnModel load_checkpoint(const std::string& path) {
    std::vector<std::uint8_t> buf = read_file(path);
    if (buf.size() < 10) throw FormatError("checkpoint too short", buf.size());
    if (buf[0] != 'I' || buf[1] != 'F' || buf[2] != 'C' || buf[3] != 'K')
        throw FormatError("bad IFCK magic", 0);
    if (buf[4] != 1) throw FormatError("unsupported IFCK version", 4);
    if (buf[5] > 1) throw FormatError("bad param mode byte", 5);
    if (buf[8] > 1) throw FormatError("bad distance mode byte", 8);

    ItnModel m;
    m.mode = static_cast<ParamMode>(buf[5]);
    m.tile_size = static_cast<std::size_t>(buf[6]) | (static_cast<std::size_t>(buf[7]) << 8);
    m.distance_mode = static_cast<DistanceMode>(buf[8]);
    m.frozen = buf[9] != 0;

    std::size_t off = 10;
    bool rg = !m.frozen;
    for (int layer = 0; layer < 3; ++layer) {
        std::size_t at = off;
        Tensor w = decode_iftn(buf, off);
        if (w.rank() != 2) throw FormatError("checkpoint layer weight must be rank 2", at);
        at = off;
        Tensor b = decode_iftn(buf, off);
        if (b.rank() != 1 || b.shape()[0] != w.shape()[1])
            throw FormatError("checkpoint layer bias does not match weight", at);
        m.weights.push_back(Tensor::from_data(w.shape(), w.data(), rg));
        m.biases.push_back(Tensor::from_data(b.shape(), b.data(), rg));
    }
    if (off != buf.size()) throw FormatError("trailing bytes after checkpoint payload", off);

    if (m.weights[0].shape()[0] != 2 * m.tile_size * m.tile_size)
        throw FormatError("checkpoint tile_size does not match first layer input width", 10);
    if (m.weights[0].shape()[1] != m.weights[1].shape()[0] ||
        m.weights[1].shape()[1] != m.weights[2].shape()[0])
        throw FormatError("checkpoint layer widths are inconsistent", 10);
    if (m.weights[2].shape()[1] != static_cast<std::size_t>(param_count(m.mode)))
        throw FormatError("checkpoint output width does not match mode", 10);
    return m;
}

}  // namespace iform
