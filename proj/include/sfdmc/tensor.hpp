#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sfdmc/errors.hpp"

namespace sfdmc {

// Dense row-major tensor of 64-bit floats. Rank 1 is a vector, rank 2 a
// matrix [rows x cols], rank 3 a feature map [h x w x c]. `node` links the
// tensor into the tape that produced it (-1 when detached).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    int node = -1;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor of(std::vector<int> shape, std::vector<double> values);
    static Tensor scalar(double v);

    std::size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    bool is_scalar() const { return data.size() == 1; }
    double item() const;

    // rank-2 accessors
    double& at(int i, int j);
    double at(int i, int j) const;
    // rank-3 accessors, layout (y * w + x) * c + ch
    double& at(int y, int x, int c);
    double at(int y, int x, int c) const;

    std::string shape_str() const;
    bool all_finite() const;
};

// Hands backward closures write access to the gradient accumulators and
// records which nodes have received any gradient.
class GradSink {
public:
    GradSink(std::vector<Tensor>& grads, std::vector<char>& touched)
        : grads_(grads), touched_(touched) {}
    Tensor& grad(int node) {
        touched_[static_cast<std::size_t>(node)] = 1;
        return grads_[static_cast<std::size_t>(node)];
    }

private:
    std::vector<Tensor>& grads_;
    std::vector<char>& touched_;
};

class GradientMap {
public:
    const Tensor& at(int node) const;
    std::size_t size() const { return grads_.size(); }

private:
    friend class Tape;
    explicit GradientMap(std::vector<Tensor> grads) : grads_(std::move(grads)) {}
    std::vector<Tensor> grads_;
};

// Define-by-run gradient tape. Each op appends a node holding the forward
// value and a closure that scatters the upstream gradient to its parents.
// A non-recording tape runs the same forward code with zero bookkeeping.
class Tape {
public:
    using BackFn = std::function<void(const Tensor& upstream, GradSink& sink)>;

    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    std::size_t node_count() const { return nodes_.size(); }

    // Registers a tensor as a graph source. Returns a copy with `node` set
    // so its gradient can be looked up after backward().
    Tensor leaf(Tensor t);

    // Used by the op implementations; not meant for direct calls elsewhere.
    int push(const Tensor& value, BackFn back);

    // Reverse accumulation from a scalar loss. Every node gets an entry in
    // the result; nodes the loss does not reach keep a zero gradient.
    GradientMap backward(const Tensor& loss) const;

private:
    struct Node {
        std::vector<int> value_shape;
        BackFn back;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;
};

// ---- differentiable ops ----------------------------------------------------

// [m x k] * [k x n] -> [m x n]
Tensor matmul(Tape& tp, const Tensor& a, const Tensor& b);

// input [h x w x cin], kernels [k x k x cin x cout], zero padding.
// out spatial extent: floor((h + 2*padding - k) / stride) + 1
Tensor conv2d(Tape& tp, const Tensor& input, const Tensor& kernels, int stride, int padding);

Tensor relu(Tape& tp, const Tensor& x);

// [h x w x c] -> [c]
Tensor global_avg_pool(Tape& tp, const Tensor& m);

// v / max(||v||_2, epsilon), rank 1
Tensor l2_normalize(Tape& tp, const Tensor& v, double epsilon = 1e-12);

// column-wise l2_normalize of a rank-2 tensor
Tensor l2_normalize_cols(Tape& tp, const Tensor& m, double epsilon = 1e-12);

// row-wise softmax with max subtraction, rank 2
Tensor softmax_rows(Tape& tp, const Tensor& x);

Tensor add(Tape& tp, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tp, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tp, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tp, const Tensor& x, double k);
Tensor add_const(Tape& tp, const Tensor& x, double k);
Tensor dot(Tape& tp, const Tensor& a, const Tensor& b);  // same shape -> scalar
Tensor sum(Tape& tp, const Tensor& x);                   // all elements -> scalar
Tensor bias_add(Tape& tp, const Tensor& x, const Tensor& b);  // b spans the last dim
Tensor reshape(Tape& tp, const Tensor& x, std::vector<int> shape);
Tensor sum_rows(Tape& tp, const Tensor& x);  // [r x c] -> [r]
Tensor pick(Tape& tp, const Tensor& v, int index);  // rank 1 -> scalar
Tensor clamp_min(Tape& tp, const Tensor& x, double lo);
Tensor log_elem(Tape& tp, const Tensor& x);
// one channel of a [h x w x c] map, flattened to [h*w]
Tensor channel_flat(Tape& tp, const Tensor& maps, int ch);

}  // namespace sfdmc
