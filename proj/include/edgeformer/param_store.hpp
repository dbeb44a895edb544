#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgeformer/autodiff.hpp"
#include "edgeformer/tensor.hpp"

namespace edgeformer {

/// Named collection of trainable tensors. Iteration order is insertion
/// order and therefore deterministic; names are unique.
class ParamStore {
public:
    void add(const std::string& name, Tensor tensor);
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    std::int64_t parameter_count() const;

    bool same_layout(const ParamStore& other) const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> index_;
};

/// Parameters lifted into a graph as differentiable leaves, one per tensor.
class LiftedParams {
public:
    explicit LiftedParams(const ParamStore& store);

    const autodiff::Value& at(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }

    /// Gradient tensors after backward(), in store order.
    std::vector<std::pair<std::string, const Tensor*>> gradients() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, autodiff::Value> leaves_;
};

}  // namespace edgeformer
