#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "edgeformer/rng.hpp"
#include "edgeformer/tensor.hpp"

namespace edgeformer::autodiff {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape: forward value, accumulated
/// gradient of the final scalar w.r.t. this value, and a closure that
/// scatters this node's gradient into its parents.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void()> backward_fn;
    const char* op = "leaf";
};

/// Cheap handle to a graph node. Graphs are DAGs built per forward pass;
/// handles keep the subgraph they reference alive.
class Value {
public:
    Value() = default;
    explicit Value(NodePtr node) : node_(std::move(node)) {}

    const Tensor& tensor() const { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    const NodePtr& node() const { return node_; }
    bool valid() const { return node_ != nullptr; }

    std::int64_t rows() const { return node_->value.rows(); }
    std::int64_t cols() const { return node_->value.cols(); }

private:
    NodePtr node_;
};

/// Differentiable leaf (a trainable parameter).
Value leaf(Tensor value);
/// Non-differentiable input (features, labels, targets).
Value constant(Tensor value);

// Elementwise; shapes must match exactly.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double factor);

Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);

/// out[i,j] = sum_k x[i,k] * w[k,j] + b[j].  x: [n x a], w: [a x b], b: [b].
Value affine(const Value& x, const Value& w, const Value& b);

Value relu(const Value& x);
/// Exact GELU: x * Phi(x) with Phi the standard normal CDF via erfc
/// (not the tanh approximation).
Value gelu(const Value& x);

/// Row-wise softmax, stabilized by per-row max subtraction.
Value softmax_rows(const Value& x);

/// Per-row normalization to mean 0 / variance 1 (population variance, eps
/// inside the sqrt), then the gamma/beta affine. gamma, beta: [d].
Value layer_norm(const Value& x, const Value& gamma, const Value& beta, double eps);

/// Inverted-scaling dropout. rate == 0 returns the input node unchanged.
Value dropout(const Value& x, double rate, Rng& rng);

Value concat_rows(const std::vector<Value>& parts);
Value slice_rows(const Value& x, std::int64_t start, std::int64_t count);
Value concat_cols(const std::vector<Value>& parts);
Value slice_cols(const Value& x, std::int64_t start, std::int64_t width);
Value reshape(const Value& x, std::vector<std::int64_t> shape);

/// Scalar reductions produce shape [1].
Value sum(const Value& x);
Value dot(const Value& a, const Value& b);
Value l2_norm(const Value& x);
/// Mean of scalar values, summed in argument order.
Value mean_list(const std::vector<Value>& scalars);

/// Mean of the numerically stable elementwise binary cross entropy
/// max(z,0) - z*y + log1p(exp(-|z|)). Labels must be exactly 0 or 1.
Value bce_with_logits(const Value& logits, const Tensor& labels);

/// Mean squared error over masked rows only: mean of (pred - target)^2
/// across every masked row and all of its columns. mask[i] selects row i.
Value mse_masked(const Value& pred, const Tensor& target, const std::vector<bool>& mask);

/// Reverse pass from a scalar loss. Zero-initializes gradients reachable
/// from `loss`, seeds d(loss)/d(loss) = 1, then runs the tape once in
/// reverse topological order.
void backward(const Value& loss);

}  // namespace edgeformer::autodiff
