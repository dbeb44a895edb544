#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "edgeformer/autodiff.hpp"
#include "edgeformer/rng.hpp"
#include "edgeformer/tensor.hpp"

namespace testutil {

using edgeformer::Rng;
using edgeformer::Tensor;
namespace ad = edgeformer::autodiff;

inline Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

using OpBuilder = std::function<ad::Value(const std::vector<ad::Value>&)>;

/// Max relative error between reverse-mode gradients and central finite
/// differences for one op instance. The op output is contracted to a
/// scalar with a fixed random cotangent so non-scalar outputs are covered.
inline double op_gradient_max_rel_error(const std::vector<Tensor>& inputs, const OpBuilder& build,
                                        Rng& rng, double h = 1e-5) {
    std::vector<ad::Value> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(ad::leaf(t));
    ad::Value out = build(leaves);
    Tensor cotangent = random_tensor(out.tensor().shape(), rng);

    auto loss_value = [&](const std::vector<Tensor>& xs) {
        std::vector<ad::Value> ls;
        ls.reserve(xs.size());
        for (const auto& t : xs) ls.push_back(ad::leaf(t));
        ad::Value o = build(ls);
        double total = 0.0;
        for (std::int64_t i = 0; i < o.tensor().size(); ++i) total += o.tensor()[i] * cotangent[i];
        return total;
    };

    ad::Value loss = ad::dot(out, ad::constant(cotangent));
    ad::backward(loss);

    double max_rel = 0.0;
    std::vector<Tensor> work = inputs;
    for (std::size_t p = 0; p < inputs.size(); ++p) {
        for (std::int64_t i = 0; i < work[p].size(); ++i) {
            const double original = work[p][i];
            work[p][i] = original + h;
            const double plus = loss_value(work);
            work[p][i] = original - h;
            const double minus = loss_value(work);
            work[p][i] = original;
            const double central = (plus - minus) / (2.0 * h);
            const double analytic = leaves[p].grad()[i];
            const double rel = std::abs(analytic - central) / std::max(1.0, std::abs(central));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace testutil
