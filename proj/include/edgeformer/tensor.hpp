#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace edgeformer {

/// Dense row-major tensor of doubles. Rank 1 or 2 is all the model needs.
/// Treated as immutable once built; mutation is limited to construction
/// helpers and the optimizer, which owns its parameters exclusively.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::int64_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, double value);
    /// 1-d tensor from values.
    static Tensor vector(std::vector<double> values);
    /// 2-d tensor from nested rows; all rows must have equal width.
    static Tensor matrix(const std::vector<std::vector<double>>& rows);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }

    /// Rows/cols of a rank-2 tensor; a rank-1 tensor is treated as a single row.
    std::int64_t rows() const;
    std::int64_t cols() const;

    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }
    double& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

/// "[2x3]" style rendering used by dimension errors.
std::string shape_str(const std::vector<std::int64_t>& shape);

}  // namespace edgeformer
