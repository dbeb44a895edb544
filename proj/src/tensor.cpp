#include "edgeformer/tensor.hpp"

#include <cmath>
#include <numeric>

#include "edgeformer/errors.hpp"

namespace edgeformer {

namespace {

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 2) {
        throw DimensionError("tensor rank must be 1 or 2, got shape " + edgeformer::shape_str(shape_));
    }
    for (std::int64_t d : shape_) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + edgeformer::shape_str(shape_));
    }
    if (shape_product(shape_) != static_cast<std::int64_t>(data_.size())) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + edgeformer::shape_str(shape_));
    }
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    std::vector<double> data(static_cast<std::size_t>(shape_product(shape)), 0.0);
    return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
    std::vector<double> data(static_cast<std::size_t>(shape_product(shape)), value);
    return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
    auto n = static_cast<std::int64_t>(values.size());
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DimensionError("matrix needs at least one row");
    const auto cols = static_cast<std::int64_t>(rows[0].size());
    std::vector<double> data;
    data.reserve(rows.size() * rows[0].size());
    for (const auto& row : rows) {
        if (static_cast<std::int64_t>(row.size()) != cols) {
            throw DimensionError("ragged matrix rows: " + std::to_string(row.size()) +
                                 " vs " + std::to_string(cols));
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({static_cast<std::int64_t>(rows.size()), cols}, std::move(data));
}

std::int64_t Tensor::rows() const { return rank() == 1 ? 1 : shape_[0]; }

std::int64_t Tensor::cols() const { return rank() == 1 ? shape_[0] : shape_[1]; }

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return edgeformer::shape_str(shape_); }

std::string shape_str(const std::vector<std::int64_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    out += "]";
    return out;
}

}  // namespace edgeformer
