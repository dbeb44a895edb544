#pragma once

#include <vector>

#include "edgeformer/edge_record.hpp"
#include "edgeformer/tensor.hpp"

namespace edgeformer {

/// Standardized feature rows for one edge, ready for the embedding MLPs
/// and for use as reconstruction targets.
struct StdFeatures {
    Tensor head;  // [1 x dim_head]
    Tensor edge;  // [1 x dim_edge]
    Tensor tail;  // [1 x dim_tail]
};

/// Per-dimension z-score statistics computed on training data and stored
/// in checkpoints so that inference standardizes identically.
struct FeatureStats {
    std::vector<double> head_mean, head_std;
    std::vector<double> edge_mean, edge_std;
    std::vector<double> tail_mean, tail_std;

    static FeatureStats identity(int dim_head, int dim_edge, int dim_tail);
    /// Means and standard deviations over all edges. A dimension with zero
    /// spread keeps std 1 so standardization stays defined.
    static FeatureStats compute(const std::vector<EdgeRecord>& edges);

    StdFeatures apply(const EdgeRecord& edge) const;

    int dim_head() const { return static_cast<int>(head_mean.size()); }
    int dim_edge() const { return static_cast<int>(edge_mean.size()); }
    int dim_tail() const { return static_cast<int>(tail_mean.size()); }
};

}  // namespace edgeformer
