#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iform/errors.hpp"
#include "iform/mat3.hpp"

namespace iform {

// Reverse-mode autodiff over dense n-d double arrays, row-major. A Tensor is a
// shared handle to a graph node; ops that see a grad-requiring input record a
// pullback, and backward() on a scalar root propagates through the recorded
// graph. Values are immutable after construction except for grad accumulation;
// a graph is confined to one thread (data-parallel kernels under an op are
// fine because they partition output elements).
//
// backward() folds the derivative of the root into .grad() of every reachable
// grad-requiring node, so calling it twice accumulates twice the gradient;
// call zero_grad() between steps.
class Tensor {
public:
    struct Node;
    using Pullback = std::function<void(Node&)>;

    struct Node {
        std::vector<std::size_t> shape;
        std::vector<double> value;
        std::vector<double> grad;      // persistent; sized iff requires_grad
        std::vector<double> scratch;   // transient per-backward buffer
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        Pullback pullback;  // reads this->scratch, accumulates into parents' scratch
    };

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor identity(std::size_t n);
    static Tensor from_mat3(const Mat3& m, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rank() const { return node_->shape.size(); }
    const std::vector<double>& data() const { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<double>& grad() const;
    void zero_grad();

    double value() const;    // scalar-only
    double at(std::size_t i) const { return node_->value[i]; }
    Mat3 to_mat3() const;    // {3,3}-only

    // Leaf parameters are updated in place by optimizers; using this on a
    // non-leaf node would invalidate recorded pullbacks.
    std::vector<double>& leaf_data();

    void backward() const;

    // Op-author interface: create a node whose pullback distributes
    // node.scratch into the parents' scratch buffers.
    static Tensor make_op(std::vector<std::size_t> shape, std::vector<double> value,
                          std::vector<Tensor> inputs, Pullback pullback);

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

std::string shape_str(const std::vector<std::size_t>& s);

// ---- elementwise / structural ops ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);   // elementwise
Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// arccos with the argument clamped to [-1+eps, 1-eps] before evaluation, so
// value and gradient stay finite for any input.
Tensor arccos(const Tensor& a, double eps = 1e-7);

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor concat1d(const Tensor& a, const Tensor& b);
Tensor slice2d(const Tensor& a, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w);
Tensor pad2d(const Tensor& a, std::size_t bottom, std::size_t right);  // zero fill

// ---- reductions / linear algebra -------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor trace(const Tensor& a);                       // square 2-d
Tensor matmul(const Tensor& a, const Tensor& b);     // 2-d
Tensor transpose(const Tensor& a);                   // 2-d
Tensor add_rowvec(const Tensor& mat, const Tensor& vec);  // broadcast vec over rows

// ---- convolution (NCHW single image) ----------------------------------------

// input {Ci,H,W}, weight {Co,Ci,kh,kw}, bias {Co} -> {Co,Ho,Wo}
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);
// input {Ci,H,W}, weight {Ci,Co,kh,kw}, bias {Co} -> {Co,Ho,Wo},
// Ho = (H-1)*stride - 2*pad + kh
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int pad);

}  // namespace iform
