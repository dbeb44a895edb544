#include "edgeformer/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "edgeformer/errors.hpp"

namespace edgeformer::autodiff {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

void check_finite(const Tensor& t, const char* op) {
    if (!t.all_finite()) {
        throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
}

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> parents) {
    check_finite(value, op);
    auto node = std::make_shared<Node>();
    node->op = op;
    node->grad = Tensor::zeros(value.shape());
    node->value = std::move(value);
    node->parents = std::move(parents);
    for (const auto& p : node->parents) {
        if (p->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    return node;
}

void require_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a.tensor().same_shape(b.tensor())) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.tensor().shape_str() +
                             " vs " + b.tensor().shape_str());
    }
}

}  // namespace

Value leaf(Tensor value) {
    check_finite(value, "leaf");
    auto node = std::make_shared<Node>();
    node->op = "leaf";
    node->grad = Tensor::zeros(value.shape());
    node->value = std::move(value);
    node->requires_grad = true;
    return Value(node);
}

Value constant(Tensor value) {
    check_finite(value, "constant");
    auto node = std::make_shared<Node>();
    node->op = "constant";
    node->grad = Tensor::zeros(value.shape());
    node->value = std::move(value);
    node->requires_grad = false;
    return Value(node);
}

Value add(const Value& a, const Value& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] += b.tensor()[i];
    auto node = make_node("add", std::move(out), {a.node(), b.node()});
    Node* n = node.get();
    node->backward_fn = [n] {
        Node* pa = n->parents[0].get();
        Node* pb = n->parents[1].get();
        for (std::int64_t i = 0; i < n->grad.size(); ++i) {
            pa->grad[i] += n->grad[i];
            pb->grad[i] += n->grad[i];
        }
    };
    return Value(node);
}

Value sub(const Value& a, const Value& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= b.tensor()[i];
    auto node = make_node("sub", std::move(out), {a.node(), b.node()});
    Node* n = node.get();
    node->backward_fn = [n] {
        Node* pa = n->parents[0].get();
        Node* pb = n->parents[1].get();
        for (std::int64_t i = 0; i < n->grad.size(); ++i) {
            pa->grad[i] += n->grad[i];
            pb->grad[i] -= n->grad[i];
        }
    };
    return Value(node);
}

Value mul(const Value& a, const Value& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= b.tensor()[i];
    auto node = make_node("mul", std::move(out), {a.node(), b.node()});
    Node* n = node.get();
    node->backward_fn = [n] {
        Node* pa = n->parents[0].get();
        Node* pb = n->parents[1].get();
        for (std::int64_t i = 0; i < n->grad.size(); ++i) {
            pa->grad[i] += n->grad[i] * pb->value[i];
            pb->grad[i] += n->grad[i] * pa->value[i];
        }
    };
    return Value(node);
}

Value scale(const Value& a, double factor) {
    Tensor out = a.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= factor;
    auto node = make_node("scale", std::move(out), {a.node()});
    Node* n = node.get();
    node->backward_fn = [n, factor] {
        Node* pa = n->parents[0].get();
        for (std::int64_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += factor * n->grad[i];
    };
    return Value(node);
}

Value matmul(const Value& a, const Value& b) {
    const Tensor& ta = a.tensor();
    const Tensor& tb = b.tensor();
    if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows()) {
        throw DimensionError("matmul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    }
    const std::int64_t n = ta.rows(), k = ta.cols(), m = tb.cols();
    Tensor out = Tensor::zeros({n, m});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const double av = ta.at(i, kk);
            for (std::int64_t j = 0; j < m; ++j) out.at(i, j) += av * tb.at(kk, j);
        }
    }
    auto node = make_node("matmul", std::move(out), {a.node(), b.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, n, k, m] {
        Node* pa = nd->parents[0].get();
        Node* pb = nd->parents[1].get();
        // dA = G * B^T
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < m; ++j) {
                const double g = nd->grad.at(i, j);
                for (std::int64_t kk = 0; kk < k; ++kk) pa->grad.at(i, kk) += g * pb->value.at(kk, j);
            }
        }
        // dB = A^T * G
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const double av = pa->value.at(i, kk);
                for (std::int64_t j = 0; j < m; ++j) pb->grad.at(kk, j) += av * nd->grad.at(i, j);
            }
        }
    };
    return Value(node);
}

Value transpose(const Value& a) {
    const Tensor& ta = a.tensor();
    if (ta.rank() != 2) throw DimensionError("transpose: expected rank-2, got " + ta.shape_str());
    const std::int64_t n = ta.rows(), m = ta.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < m; ++j) out.at(j, i) = ta.at(i, j);
    auto node = make_node("transpose", std::move(out), {a.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, n, m] {
        Node* pa = nd->parents[0].get();
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < m; ++j) pa->grad.at(i, j) += nd->grad.at(j, i);
    };
    return Value(node);
}

Value affine(const Value& x, const Value& w, const Value& b) {
    const Tensor& tx = x.tensor();
    const Tensor& tw = w.tensor();
    const Tensor& tb = b.tensor();
    if (tx.rank() != 2 || tw.rank() != 2 || tx.cols() != tw.rows()) {
        throw DimensionError("affine: shape mismatch " + tx.shape_str() + " vs " + tw.shape_str());
    }
    if (tb.rank() != 1 || tb.size() != tw.cols()) {
        throw DimensionError("affine: bias shape mismatch " + tb.shape_str() + " vs " + tw.shape_str());
    }
    const std::int64_t n = tx.rows(), k = tx.cols(), m = tw.cols();
    Tensor out = Tensor::zeros({n, m});
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < m; ++j) out.at(i, j) = tb[j];
        for (std::int64_t kk = 0; kk < k; ++kk) {
            const double xv = tx.at(i, kk);
            for (std::int64_t j = 0; j < m; ++j) out.at(i, j) += xv * tw.at(kk, j);
        }
    }
    auto node = make_node("affine", std::move(out), {x.node(), w.node(), b.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, n, k, m] {
        Node* px = nd->parents[0].get();
        Node* pw = nd->parents[1].get();
        Node* pb = nd->parents[2].get();
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < m; ++j) {
                const double g = nd->grad.at(i, j);
                pb->grad[j] += g;
                for (std::int64_t kk = 0; kk < k; ++kk) px->grad.at(i, kk) += g * pw->value.at(kk, j);
            }
        }
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const double xv = px->value.at(i, kk);
                for (std::int64_t j = 0; j < m; ++j) pw->grad.at(kk, j) += xv * nd->grad.at(i, j);
            }
        }
    };
    return Value(node);
}

Value relu(const Value& x) {
    Tensor out = x.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    auto node = make_node("relu", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < nd->grad.size(); ++i) {
            if (px->value[i] > 0.0) px->grad[i] += nd->grad[i];
        }
    };
    return Value(node);
}

Value gelu(const Value& x) {
    Tensor out = x.tensor();
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = out[i] * norm_cdf(out[i]);
    auto node = make_node("gelu", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < nd->grad.size(); ++i) {
            const double v = px->value[i];
            px->grad[i] += nd->grad[i] * (norm_cdf(v) + v * norm_pdf(v));
        }
    };
    return Value(node);
}

Value softmax_rows(const Value& x) {
    const Tensor& tx = x.tensor();
    if (tx.rank() != 2) throw DimensionError("softmax_rows: expected rank-2, got " + tx.shape_str());
    const std::int64_t n = tx.rows(), m = tx.cols();
    Tensor out = Tensor::zeros({n, m});
    for (std::int64_t i = 0; i < n; ++i) {
        double row_max = tx.at(i, 0);
        for (std::int64_t j = 1; j < m; ++j) row_max = std::max(row_max, tx.at(i, j));
        double denom = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            const double e = std::exp(tx.at(i, j) - row_max);
            out.at(i, j) = e;
            denom += e;
        }
        for (std::int64_t j = 0; j < m; ++j) out.at(i, j) /= denom;
    }
    auto node = make_node("softmax_rows", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, n, m] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < n; ++i) {
            double weighted = 0.0;
            for (std::int64_t j = 0; j < m; ++j) weighted += nd->grad.at(i, j) * nd->value.at(i, j);
            for (std::int64_t j = 0; j < m; ++j) {
                px->grad.at(i, j) += nd->value.at(i, j) * (nd->grad.at(i, j) - weighted);
            }
        }
    };
    return Value(node);
}

Value layer_norm(const Value& x, const Value& gamma, const Value& beta, double eps) {
    const Tensor& tx = x.tensor();
    if (tx.rank() != 2) throw DimensionError("layer_norm: expected rank-2, got " + tx.shape_str());
    if (eps <= 0.0) throw ValidationError("layer_norm: eps must be positive");
    const std::int64_t n = tx.rows(), d = tx.cols();
    const Tensor& tg = gamma.tensor();
    const Tensor& tb = beta.tensor();
    if (tg.rank() != 1 || tg.size() != d || tb.rank() != 1 || tb.size() != d) {
        throw DimensionError("layer_norm: gamma/beta shape mismatch " + tg.shape_str() + ", " +
                             tb.shape_str() + " vs row width " + std::to_string(d));
    }
    Tensor out = Tensor::zeros({n, d});
    std::vector<double> inv_std(static_cast<std::size_t>(n));
    std::vector<double> means(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::int64_t j = 0; j < d; ++j) mean += tx.at(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            const double c = tx.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double istd = 1.0 / std::sqrt(var + eps);
        means[static_cast<std::size_t>(i)] = mean;
        inv_std[static_cast<std::size_t>(i)] = istd;
        for (std::int64_t j = 0; j < d; ++j) {
            out.at(i, j) = tg[j] * (tx.at(i, j) - mean) * istd + tb[j];
        }
    }
    auto node = make_node("layer_norm", std::move(out), {x.node(), gamma.node(), beta.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, n, d, means, inv_std] {
        Node* px = nd->parents[0].get();
        Node* pg = nd->parents[1].get();
        Node* pb = nd->parents[2].get();
        for (std::int64_t i = 0; i < n; ++i) {
            const double mean = means[static_cast<std::size_t>(i)];
            const double istd = inv_std[static_cast<std::size_t>(i)];
            // dxhat_j = g_j * gamma_j; dX depends on row sums of dxhat and dxhat*xhat.
            double sum_dxhat = 0.0;
            double sum_dxhat_xhat = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
                const double xhat = (px->value.at(i, j) - mean) * istd;
                const double dxhat = nd->grad.at(i, j) * pg->value[j];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                pg->grad[j] += nd->grad.at(i, j) * xhat;
                pb->grad[j] += nd->grad.at(i, j);
            }
            const double inv_d = 1.0 / static_cast<double>(d);
            for (std::int64_t j = 0; j < d; ++j) {
                const double xhat = (px->value.at(i, j) - mean) * istd;
                const double dxhat = nd->grad.at(i, j) * pg->value[j];
                px->grad.at(i, j) += istd * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
            }
        }
    };
    return Value(node);
}

Value dropout(const Value& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ValidationError("dropout: rate must be in [0, 1)");
    if (rate == 0.0) return x;
    const double keep = 1.0 - rate;
    const double inv_keep = 1.0 / keep;
    Tensor out = x.tensor();
    std::vector<double> mask(static_cast<std::size_t>(out.size()));
    for (std::int64_t i = 0; i < out.size(); ++i) {
        const double m = rng.uniform() < keep ? inv_keep : 0.0;
        mask[static_cast<std::size_t>(i)] = m;
        out[i] *= m;
    }
    auto node = make_node("dropout", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, mask = std::move(mask)] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < nd->grad.size(); ++i) {
            px->grad[i] += nd->grad[i] * mask[static_cast<std::size_t>(i)];
        }
    };
    return Value(node);
}

Value concat_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    const std::int64_t cols = parts[0].tensor().cols();
    std::int64_t total_rows = 0;
    for (const auto& p : parts) {
        if (p.tensor().cols() != cols) {
            throw DimensionError("concat_rows: column mismatch " + p.tensor().shape_str() +
                                 " vs width " + std::to_string(cols));
        }
        total_rows += p.tensor().rows();
    }
    Tensor out = Tensor::zeros({total_rows, cols});
    std::vector<NodePtr> parent_nodes;
    parent_nodes.reserve(parts.size());
    std::int64_t r = 0;
    for (const auto& p : parts) {
        const Tensor& tp = p.tensor();
        for (std::int64_t i = 0; i < tp.rows(); ++i)
            for (std::int64_t j = 0; j < cols; ++j) out.at(r + i, j) = tp.rank() == 1 ? tp[j] : tp.at(i, j);
        r += tp.rows();
        parent_nodes.push_back(p.node());
    }
    auto node = make_node("concat_rows", std::move(out), std::move(parent_nodes));
    Node* nd = node.get();
    node->backward_fn = [nd, cols] {
        std::int64_t row = 0;
        for (auto& parent : nd->parents) {
            Node* p = parent.get();
            const std::int64_t pr = p->value.rows();
            for (std::int64_t i = 0; i < pr; ++i)
                for (std::int64_t j = 0; j < cols; ++j) p->grad[i * cols + j] += nd->grad.at(row + i, j);
            row += pr;
        }
    };
    return Value(node);
}

Value slice_rows(const Value& x, std::int64_t start, std::int64_t count) {
    const Tensor& tx = x.tensor();
    if (tx.rank() != 2 || start < 0 || count <= 0 || start + count > tx.rows()) {
        throw DimensionError("slice_rows: range [" + std::to_string(start) + ", " +
                             std::to_string(start + count) + ") out of " + tx.shape_str());
    }
    const std::int64_t cols = tx.cols();
    Tensor out = Tensor::zeros({count, cols});
    for (std::int64_t i = 0; i < count; ++i)
        for (std::int64_t j = 0; j < cols; ++j) out.at(i, j) = tx.at(start + i, j);
    auto node = make_node("slice_rows", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, start, count, cols] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < count; ++i)
            for (std::int64_t j = 0; j < cols; ++j) px->grad.at(start + i, j) += nd->grad.at(i, j);
    };
    return Value(node);
}

Value concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const std::int64_t rows = parts[0].tensor().rows();
    std::int64_t total_cols = 0;
    for (const auto& p : parts) {
        if (p.tensor().rank() != 2 || p.tensor().rows() != rows) {
            throw DimensionError("concat_cols: row mismatch " + p.tensor().shape_str() +
                                 " vs height " + std::to_string(rows));
        }
        total_cols += p.tensor().cols();
    }
    Tensor out = Tensor::zeros({rows, total_cols});
    std::vector<NodePtr> parent_nodes;
    parent_nodes.reserve(parts.size());
    std::int64_t c = 0;
    for (const auto& p : parts) {
        const Tensor& tp = p.tensor();
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < tp.cols(); ++j) out.at(i, c + j) = tp.at(i, j);
        c += tp.cols();
        parent_nodes.push_back(p.node());
    }
    auto node = make_node("concat_cols", std::move(out), std::move(parent_nodes));
    Node* nd = node.get();
    node->backward_fn = [nd, rows] {
        std::int64_t col = 0;
        for (auto& parent : nd->parents) {
            Node* p = parent.get();
            const std::int64_t pc = p->value.cols();
            for (std::int64_t i = 0; i < rows; ++i)
                for (std::int64_t j = 0; j < pc; ++j) p->grad.at(i, j) += nd->grad.at(i, col + j);
            col += pc;
        }
    };
    return Value(node);
}

Value slice_cols(const Value& x, std::int64_t start, std::int64_t width) {
    const Tensor& tx = x.tensor();
    if (tx.rank() != 2 || start < 0 || width <= 0 || start + width > tx.cols()) {
        throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                             std::to_string(start + width) + ") out of " + tx.shape_str());
    }
    const std::int64_t rows = tx.rows();
    Tensor out = Tensor::zeros({rows, width});
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < width; ++j) out.at(i, j) = tx.at(i, start + j);
    auto node = make_node("slice_cols", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, start, width, rows] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < width; ++j) px->grad.at(i, start + j) += nd->grad.at(i, j);
    };
    return Value(node);
}

Value reshape(const Value& x, std::vector<std::int64_t> shape) {
    Tensor out(std::move(shape), x.tensor().data());
    if (out.size() != x.tensor().size()) {
        throw DimensionError("reshape: size mismatch " + out.shape_str() + " vs " + x.tensor().shape_str());
    }
    auto node = make_node("reshape", std::move(out), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd] {
        Node* px = nd->parents[0].get();
        for (std::int64_t i = 0; i < nd->grad.size(); ++i) px->grad[i] += nd->grad[i];
    };
    return Value(node);
}

Value sum(const Value& x) {
    double total = 0.0;
    for (std::int64_t i = 0; i < x.tensor().size(); ++i) total += x.tensor()[i];
    auto node = make_node("sum", Tensor::vector({total}), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd] {
        Node* px = nd->parents[0].get();
        const double g = nd->grad[0];
        for (std::int64_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    };
    return Value(node);
}

Value dot(const Value& a, const Value& b) {
    require_same_shape(a, b, "dot");
    double total = 0.0;
    for (std::int64_t i = 0; i < a.tensor().size(); ++i) total += a.tensor()[i] * b.tensor()[i];
    auto node = make_node("dot", Tensor::vector({total}), {a.node(), b.node()});
    Node* nd = node.get();
    node->backward_fn = [nd] {
        Node* pa = nd->parents[0].get();
        Node* pb = nd->parents[1].get();
        const double g = nd->grad[0];
        for (std::int64_t i = 0; i < pa->grad.size(); ++i) {
            pa->grad[i] += g * pb->value[i];
            pb->grad[i] += g * pa->value[i];
        }
    };
    return Value(node);
}

Value l2_norm(const Value& x) {
    double total = 0.0;
    for (std::int64_t i = 0; i < x.tensor().size(); ++i) total += x.tensor()[i] * x.tensor()[i];
    const double norm = std::sqrt(total);
    auto node = make_node("l2_norm", Tensor::vector({norm}), {x.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, norm] {
        if (norm == 0.0) return;  // subgradient 0 at the origin
        Node* px = nd->parents[0].get();
        const double g = nd->grad[0] / norm;
        for (std::int64_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g * px->value[i];
    };
    return Value(node);
}

Value mean_list(const std::vector<Value>& scalars) {
    if (scalars.empty()) throw ValidationError("mean_list: empty list");
    double total = 0.0;
    std::vector<NodePtr> parents;
    parents.reserve(scalars.size());
    for (const auto& v : scalars) {
        if (v.tensor().size() != 1) {
            throw DimensionError("mean_list: expected scalars, got " + v.tensor().shape_str());
        }
        total += v.tensor()[0];
        parents.push_back(v.node());
    }
    const double inv_n = 1.0 / static_cast<double>(scalars.size());
    auto node = make_node("mean_list", Tensor::vector({total * inv_n}), std::move(parents));
    Node* nd = node.get();
    node->backward_fn = [nd, inv_n] {
        const double g = nd->grad[0] * inv_n;
        for (auto& parent : nd->parents) parent->grad[0] += g;
    };
    return Value(node);
}

Value bce_with_logits(const Value& logits, const Tensor& labels) {
    const Tensor& z = logits.tensor();
    if (!z.same_shape(labels)) {
        throw DimensionError("bce_with_logits: shape mismatch " + z.shape_str() + " vs " +
                             labels.shape_str());
    }
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0.0 && labels[i] != 1.0) {
            throw ValidationError("bce_with_logits: label must be 0 or 1, got " +
                                  std::to_string(labels[i]));
        }
    }
    const std::int64_t n = z.size();
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double zi = z[i];
        total += std::max(zi, 0.0) - zi * labels[i] + std::log1p(std::exp(-std::abs(zi)));
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    auto node = make_node("bce_with_logits", Tensor::vector({total * inv_n}), {logits.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, labels, inv_n] {
        Node* pz = nd->parents[0].get();
        const double g = nd->grad[0] * inv_n;
        for (std::int64_t i = 0; i < pz->value.size(); ++i) {
            const double zi = pz->value[i];
            const double sig = zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi))
                                         : std::exp(zi) / (1.0 + std::exp(zi));
            pz->grad[i] += g * (sig - labels[i]);
        }
    };
    return Value(node);
}

Value mse_masked(const Value& pred, const Tensor& target, const std::vector<bool>& mask) {
    const Tensor& p = pred.tensor();
    if (!p.same_shape(target)) {
        throw DimensionError("mse_masked: shape mismatch " + p.shape_str() + " vs " +
                             target.shape_str());
    }
    if (static_cast<std::int64_t>(mask.size()) != p.rows()) {
        throw DimensionError("mse_masked: mask length " + std::to_string(mask.size()) +
                             " vs rows " + std::to_string(p.rows()));
    }
    std::int64_t masked_rows = 0;
    for (bool m : mask) masked_rows += m ? 1 : 0;
    if (masked_rows == 0) throw ValidationError("no masked tokens");
    const std::int64_t d = p.cols();
    const double inv_count = 1.0 / static_cast<double>(masked_rows * d);
    double total = 0.0;
    for (std::int64_t i = 0; i < p.rows(); ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        for (std::int64_t j = 0; j < d; ++j) {
            const double diff = p.at(i, j) - target.at(i, j);
            total += diff * diff;
        }
    }
    auto node = make_node("mse_masked", Tensor::vector({total * inv_count}), {pred.node()});
    Node* nd = node.get();
    node->backward_fn = [nd, target, mask, inv_count, d] {
        Node* pp = nd->parents[0].get();
        const double g = nd->grad[0] * inv_count * 2.0;
        for (std::int64_t i = 0; i < pp->value.rows(); ++i) {
            if (!mask[static_cast<std::size_t>(i)]) continue;
            for (std::int64_t j = 0; j < d; ++j) {
                pp->grad.at(i, j) += g * (pp->value.at(i, j) - target.at(i, j));
            }
        }
    };
    return Value(node);
}

void backward(const Value& loss) {
    if (!loss.valid()) throw ValidationError("backward: invalid value");
    if (loss.tensor().size() != 1) {
        throw DimensionError("backward: loss must be scalar, got " + loss.tensor().shape_str());
    }
    // Iterative post-order DFS: parents land before their consumers.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    Node* root = loss.node().get();
    if (root->requires_grad) {
        stack.push_back({root, 0});
        visited.insert(root);
    }
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next_parent < frame.node->parents.size()) {
            Node* parent = frame.node->parents[frame.next_parent++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.push_back({parent, 0});
            }
        } else {
            order.push_back(frame.node);
            stack.pop_back();
        }
    }
    // Fresh gradient buffers for every node reachable from the loss.
    for (Node* node : order) {
        std::fill(node->grad.data().begin(), node->grad.data().end(), 0.0);
    }
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn) node->backward_fn();
    }
}

}  // namespace edgeformer::autodiff
