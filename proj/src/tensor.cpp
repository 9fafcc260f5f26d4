#include "iform/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "iform/threading.hpp"

namespace iform {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string r = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    r += ")";
    return r;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw ShapeError("from_data: shape " + shape_str(shape) + " does not match data length " +
                         std::to_string(data.size()));
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    t.node_->requires_grad = requires_grad;
    if (requires_grad) t.node_->grad.assign(t.node_->value.size(), 0.0);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.node_->value[i * n + i] = 1.0;
    return t;
}

Tensor Tensor::from_mat3(const Mat3& m, bool requires_grad) {
    return from_data({3, 3}, std::vector<double>(m.a.begin(), m.a.end()), requires_grad);
}

const std::vector<double>& Tensor::grad() const {
    if (!node_->requires_grad) throw ContractError("grad(): tensor does not require grad");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return node_->value[0];
}

Mat3 Tensor::to_mat3() const {
    if (shape() != std::vector<std::size_t>{3, 3})
        throw ContractError("to_mat3(): shape " + shape_str(shape()) + " is not (3,3)");
    Mat3 m;
    std::copy(node_->value.begin(), node_->value.end(), m.a.begin());
    return m;
}

std::vector<double>& Tensor::leaf_data() {
    if (node_->pullback) throw ContractError("leaf_data(): tensor is not a leaf");
    return node_->value;
}

Tensor Tensor::make_op(std::vector<std::size_t> shape, std::vector<double> value,
                       std::vector<Tensor> inputs, Pullback pullback) {
    if (shape_numel(shape) != value.size())
        throw ShapeError("make_op: shape " + shape_str(shape) + " does not match value length " +
                         std::to_string(value.size()));
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(value);
    bool rg = false;
    for (const Tensor& in : inputs) rg = rg || in.requires_grad();
    t.node_->requires_grad = rg;
    if (rg) {
        t.node_->grad.assign(t.node_->value.size(), 0.0);
        t.node_->parents.reserve(inputs.size());
        for (const Tensor& in : inputs) t.node_->parents.push_back(in.node());
        t.node_->pullback = std::move(pullback);
    }
    return t;
}

void Tensor::backward() const {
    if (!node_) throw ContractError("backward(): undefined tensor");
    if (size() != 1)
        throw ContractError("backward(): root must be scalar, shape " + shape_str(shape()));

    // Reverse topological order via iterative post-order DFS.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    struct Frame {
        Node* n;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (node_->requires_grad) stack.push_back({node_.get(), 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent == 0) {
            if (seen.count(f.n)) {
                stack.pop_back();
                continue;
            }
            seen.insert(f.n);
        }
        if (f.next_parent < f.n->parents.size()) {
            Node* p = f.n->parents[f.next_parent++].get();
            if (p->requires_grad && !seen.count(p)) stack.push_back({p, 0});
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->scratch.assign(n->value.size(), 0.0);
    if (node_->requires_grad) node_->scratch[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->pullback) (*it)->pullback(**it);
    // Fold the freshly computed derivative into the persistent grads.
    for (Node* n : order) {
        for (std::size_t i = 0; i < n->grad.size(); ++i) n->grad[i] += n->scratch[i];
        n->scratch.clear();
        n->scratch.shrink_to_fit();
    }
}

// ---- op helpers --------------------------------------------------------------

namespace {

// Accumulate into a parent's scratch if that parent participates in backward.
inline double* scratch_of(Tensor::Node& self, std::size_t parent_idx) {
    Tensor::Node* p = self.parents[parent_idx].get();
    if (!p->requires_grad) return nullptr;
    return p->scratch.data();
}

Tensor unary_op(const Tensor& a, std::vector<double> value,
                std::function<void(const double*, const std::vector<double>&, double*)> pull) {
    // pull(out_scratch, a_value, a_scratch)
    std::vector<std::size_t> shape = a.shape();
    return Tensor::make_op(
        std::move(shape), std::move(value), {a},
        [pull = std::move(pull)](Tensor::Node& self) {
            double* pa = scratch_of(self, 0);
            if (pa) pull(self.scratch.data(), self.parents[0]->value, pa);
        });
}

}  // namespace

// ---- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) + b.at(i);
    return Tensor::make_op(a.shape(), std::move(v), {a, b}, [n](Tensor::Node& self) {
        for (std::size_t pi = 0; pi < 2; ++pi)
            if (double* p = scratch_of(self, pi))
                for (std::size_t i = 0; i < n; ++i) p[i] += self.scratch[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) - b.at(i);
    return Tensor::make_op(a.shape(), std::move(v), {a, b}, [n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < n; ++i) p[i] += self.scratch[i];
        if (double* p = scratch_of(self, 1))
            for (std::size_t i = 0; i < n; ++i) p[i] -= self.scratch[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) * b.at(i);
    return Tensor::make_op(a.shape(), std::move(v), {a, b}, [n](Tensor::Node& self) {
        const std::vector<double>& av = self.parents[0]->value;
        const std::vector<double>& bv = self.parents[1]->value;
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < n; ++i) p[i] += self.scratch[i] * bv[i];
        if (double* p = scratch_of(self, 1))
            for (std::size_t i = 0; i < n; ++i) p[i] += self.scratch[i] * av[i];
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) + c;
    return unary_op(a, std::move(v), [n](const double* g, const std::vector<double>&, double* pa) {
        for (std::size_t i = 0; i < n; ++i) pa[i] += g[i];
    });
}

Tensor scale(const Tensor& a, double c) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) * c;
    return unary_op(a, std::move(v), [n, c](const double* g, const std::vector<double>&, double* pa) {
        for (std::size_t i = 0; i < n; ++i) pa[i] += g[i] * c;
    });
}

Tensor relu(const Tensor& a) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
    return unary_op(a, std::move(v), [n](const double* g, const std::vector<double>& av, double* pa) {
        for (std::size_t i = 0; i < n; ++i)
            if (av[i] > 0.0) pa[i] += g[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-a.at(i)));
    // derivative from the forward value: s(1-s)
    std::vector<double> s = v;
    return unary_op(a, std::move(v),
                    [n, s = std::move(s)](const double* g, const std::vector<double>&, double* pa) {
                        for (std::size_t i = 0; i < n; ++i) pa[i] += g[i] * s[i] * (1.0 - s[i]);
                    });
}

Tensor log(const Tensor& a) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::log(a.at(i));
    return unary_op(a, std::move(v), [n](const double* g, const std::vector<double>& av, double* pa) {
        for (std::size_t i = 0; i < n; ++i) pa[i] += g[i] / av[i];
    });
}

Tensor exp(const Tensor& a) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a.at(i));
    std::vector<double> ev = v;
    return unary_op(a, std::move(v),
                    [n, ev = std::move(ev)](const double* g, const std::vector<double>&, double* pa) {
                        for (std::size_t i = 0; i < n; ++i) pa[i] += g[i] * ev[i];
                    });
}

Tensor sqrt(const Tensor& a) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sqrt(a.at(i));
    std::vector<double> sv = v;
    // Subgradient 0 at exactly 0 keeps losses like the Frobenius distance
    // finite at their minimum.
    return unary_op(a, std::move(v),
                    [n, sv = std::move(sv)](const double* g, const std::vector<double>&, double* pa) {
                        for (std::size_t i = 0; i < n; ++i)
                            if (sv[i] > 0.0) pa[i] += g[i] * 0.5 / sv[i];
                    });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw ContractError("clamp: lo > hi");
    std::size_t n = a.size();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::min(std::max(a.at(i), lo), hi);
    return unary_op(a, std::move(v),
                    [n, lo, hi](const double* g, const std::vector<double>& av, double* pa) {
                        for (std::size_t i = 0; i < n; ++i)
                            if (av[i] > lo && av[i] < hi) pa[i] += g[i];
                    });
}

Tensor arccos(const Tensor& a, double eps) {
    std::size_t n = a.size();
    std::vector<double> v(n);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = std::min(std::max(a.at(i), -1.0 + eps), 1.0 - eps);
        v[i] = std::acos(c[i]);
    }
    double lo = -1.0 + eps, hi = 1.0 - eps;
    return unary_op(a, std::move(v),
                    [n, c = std::move(c), lo, hi](const double* g, const std::vector<double>& av,
                                                  double* pa) {
                        for (std::size_t i = 0; i < n; ++i)
                            if (av[i] > lo && av[i] < hi)
                                pa[i] -= g[i] / std::sqrt(1.0 - c[i] * c[i]);
                    });
}

// ---- structural ----------------------------------------------------------------

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    if (shape_numel(shape) != a.size())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape) +
                         " changes element count");
    std::size_t n = a.size();
    return Tensor::make_op(std::move(shape), a.data(), {a}, [n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < n; ++i) p[i] += self.scratch[i];
    });
}

Tensor concat1d(const Tensor& a, const Tensor& b) {
    std::size_t na = a.size(), nb = b.size();
    std::vector<double> v;
    v.reserve(na + nb);
    v.insert(v.end(), a.data().begin(), a.data().end());
    v.insert(v.end(), b.data().begin(), b.data().end());
    return Tensor::make_op({na + nb}, std::move(v), {a, b}, [na, nb](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < na; ++i) p[i] += self.scratch[i];
        if (double* p = scratch_of(self, 1))
            for (std::size_t i = 0; i < nb; ++i) p[i] += self.scratch[na + i];
    });
}

Tensor slice2d(const Tensor& a, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) {
    if (a.rank() != 2) throw ShapeError("slice2d: input rank " + std::to_string(a.rank()) + " != 2");
    std::size_t H = a.shape()[0], W = a.shape()[1];
    if (r0 + h > H || c0 + w > W)
        throw ShapeError("slice2d: window exceeds input " + shape_str(a.shape()));
    std::vector<double> v(h * w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) v[r * w + c] = a.at((r0 + r) * W + c0 + c);
    return Tensor::make_op({h, w}, std::move(v), {a}, [r0, c0, h, w, W](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c)
                    p[(r0 + r) * W + c0 + c] += self.scratch[r * w + c];
    });
}

Tensor pad2d(const Tensor& a, std::size_t bottom, std::size_t right) {
    if (a.rank() != 2) throw ShapeError("pad2d: input rank " + std::to_string(a.rank()) + " != 2");
    std::size_t H = a.shape()[0], W = a.shape()[1];
    std::size_t Ho = H + bottom, Wo = W + right;
    std::vector<double> v(Ho * Wo, 0.0);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) v[r * Wo + c] = a.at(r * W + c);
    return Tensor::make_op({Ho, Wo}, std::move(v), {a}, [H, W, Wo](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t r = 0; r < H; ++r)
                for (std::size_t c = 0; c < W; ++c) p[r * W + c] += self.scratch[r * Wo + c];
    });
}

// ---- reductions / linear algebra ----------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i);
    std::size_t n = a.size();
    return Tensor::make_op({1}, {s}, {a}, [n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0)) {
            double g = self.scratch[0];
            for (std::size_t i = 0; i < n; ++i) p[i] += g;
        }
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean: empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i);
    std::size_t n = a.size();
    double inv = 1.0 / static_cast<double>(n);
    return Tensor::make_op({1}, {s * inv}, {a}, [n, inv](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0)) {
            double g = self.scratch[0] * inv;
            for (std::size_t i = 0; i < n; ++i) p[i] += g;
        }
    });
}

Tensor trace(const Tensor& a) {
    if (a.rank() != 2 || a.shape()[0] != a.shape()[1])
        throw ShapeError("trace: needs a square matrix, got " + shape_str(a.shape()));
    std::size_t n = a.shape()[0];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a.at(i * n + i);
    return Tensor::make_op({1}, {s}, {a}, [n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0)) {
            double g = self.scratch[0];
            for (std::size_t i = 0; i < n; ++i) p[i * n + i] += g;
        }
    });
}

namespace {

// C(m x n) += A(m x k) * B(k x n); ikj order, rows of C parallelized. Each C
// element is produced by a fixed-order k loop, so the result is independent of
// the worker count.
void matmul_accum(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
                  std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* crow = C + i * n;
            const double* arow = A + i * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
                double a = arow[kk];
                const double* brow = B + kk * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

// C(m x n) += A(m x k) * B^T where Bt is (n x k): dot of contiguous rows.
void matmul_bt_accum(const double* A, const double* Bt, double* C, std::size_t m, std::size_t k,
                     std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* arow = A + i * k;
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = Bt + j * k;
                double s = 0.0;
                for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
                crow[j] += s;
            }
        }
    });
}

// C(k x n) += A^T * B where A is (m x k), B is (m x n); parallel over k rows.
void matmul_at_accum(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
                     std::size_t n) {
    parallel_for(k, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t kk = lo; kk < hi; ++kk) {
            double* crow = C + kk * n;
            for (std::size_t i = 0; i < m; ++i) {
                double a = A[i * k + kk];
                const double* brow = B + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
            }
        }
    });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: needs rank-2 operands, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    std::size_t m = a.shape()[0], k = a.shape()[1];
    if (b.shape()[0] != k)
        throw ShapeError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::size_t n = b.shape()[1];
    std::vector<double> v(m * n, 0.0);
    matmul_accum(a.data().data(), b.data().data(), v.data(), m, k, n);
    return Tensor::make_op({m, n}, std::move(v), {a, b}, [m, k, n](Tensor::Node& self) {
        const double* g = self.scratch.data();
        const double* av = self.parents[0]->value.data();
        const double* bv = self.parents[1]->value.data();
        if (double* pa = scratch_of(self, 0)) matmul_bt_accum(g, bv, pa, m, n, k);  // dA = g * B^T
        if (double* pb = scratch_of(self, 1)) matmul_at_accum(av, g, pb, m, k, n);  // dB = A^T * g
    });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: needs rank-2, got " + shape_str(a.shape()));
    std::size_t m = a.shape()[0], n = a.shape()[1];
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a.at(i * n + j);
    return Tensor::make_op({n, m}, std::move(v), {a}, [m, n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) p[i * n + j] += self.scratch[j * m + i];
    });
}

Tensor add_rowvec(const Tensor& mat, const Tensor& vec) {
    if (mat.rank() != 2 || vec.rank() != 1 || vec.shape()[0] != mat.shape()[1])
        throw ShapeError("add_rowvec: incompatible shapes " + shape_str(mat.shape()) + " and " +
                         shape_str(vec.shape()));
    std::size_t m = mat.shape()[0], n = mat.shape()[1];
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] = mat.at(i * n + j) + vec.at(j);
    return Tensor::make_op({m, n}, std::move(v), {mat, vec}, [m, n](Tensor::Node& self) {
        if (double* p = scratch_of(self, 0))
            for (std::size_t i = 0; i < m * n; ++i) p[i] += self.scratch[i];
        if (double* p = scratch_of(self, 1))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) p[j] += self.scratch[i * n + j];
    });
}

}  // namespace iform
