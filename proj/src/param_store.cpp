#include "edgeformer/param_store.hpp"

#include "edgeformer/errors.hpp"

namespace edgeformer {

void ParamStore::add(const std::string& name, Tensor tensor) {
    if (contains(name)) throw ValidationError("duplicate parameter name: " + name);
    order_.push_back(name);
    index_.emplace(name, std::move(tensor));
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter name: " + name);
    return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter name: " + name);
    return it->second;
}

std::int64_t ParamStore::parameter_count() const {
    std::int64_t total = 0;
    for (const auto& name : order_) total += at(name).size();
    return total;
}

bool ParamStore::same_layout(const ParamStore& other) const {
    if (order_ != other.order_) return false;
    for (const auto& name : order_) {
        if (at(name).shape() != other.at(name).shape()) return false;
    }
    return true;
}

LiftedParams::LiftedParams(const ParamStore& store) : order_(store.names()) {
    for (const auto& name : order_) {
        leaves_.emplace(name, autodiff::leaf(store.at(name)));
    }
}

const autodiff::Value& LiftedParams::at(const std::string& name) const {
    auto it = leaves_.find(name);
    if (it == leaves_.end()) throw ValidationError("unknown parameter name: " + name);
    return it->second;
}

std::vector<std::pair<std::string, const Tensor*>> LiftedParams::gradients() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(order_.size());
    for (const auto& name : order_) {
        out.emplace_back(name, &at(name).grad());
    }
    return out;
}

}  // namespace edgeformer
