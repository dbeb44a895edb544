#include "edgeformer/feature_stats.hpp"

#include <cmath>
#include <string>

#include "edgeformer/errors.hpp"

namespace edgeformer {

namespace {

void accumulate(std::vector<double>& mean, std::vector<double>& m2, const std::vector<double>& x,
                double n) {
    // Welford update per dimension.
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double delta = x[i] - mean[i];
        mean[i] += delta / n;
        m2[i] += delta * (x[i] - mean[i]);
    }
}

std::vector<double> finalize_std(const std::vector<double>& m2, double n) {
    std::vector<double> out(m2.size(), 1.0);
    for (std::size_t i = 0; i < m2.size(); ++i) {
        const double var = n > 0 ? m2[i] / n : 0.0;
        out[i] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return out;
}

Tensor standardize(const std::vector<double>& x, const std::vector<double>& mean,
                   const std::vector<double>& std, const char* field) {
    if (x.size() != mean.size()) {
        throw ValidationError(std::string("feature width mismatch for ") + field + ": got " +
                              std::to_string(x.size()) + ", stats expect " +
                              std::to_string(mean.size()));
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
    return Tensor({1, static_cast<std::int64_t>(x.size())}, std::move(out));
}

}  // namespace

FeatureStats FeatureStats::identity(int dim_head, int dim_edge, int dim_tail) {
    FeatureStats s;
    s.head_mean.assign(static_cast<std::size_t>(dim_head), 0.0);
    s.head_std.assign(static_cast<std::size_t>(dim_head), 1.0);
    s.edge_mean.assign(static_cast<std::size_t>(dim_edge), 0.0);
    s.edge_std.assign(static_cast<std::size_t>(dim_edge), 1.0);
    s.tail_mean.assign(static_cast<std::size_t>(dim_tail), 0.0);
    s.tail_std.assign(static_cast<std::size_t>(dim_tail), 1.0);
    return s;
}

FeatureStats FeatureStats::compute(const std::vector<EdgeRecord>& edges) {
    if (edges.empty()) throw ValidationError("cannot compute feature statistics of an empty dataset");
    const auto dh = edges[0].x_head.size();
    const auto dr = edges[0].x_edge.size();
    const auto dt = edges[0].x_tail.size();
    FeatureStats s;
    s.head_mean.assign(dh, 0.0);
    s.edge_mean.assign(dr, 0.0);
    s.tail_mean.assign(dt, 0.0);
    std::vector<double> m2_head(dh, 0.0), m2_edge(dr, 0.0), m2_tail(dt, 0.0);
    double n = 0.0;
    for (const auto& e : edges) {
        if (e.x_head.size() != dh || e.x_edge.size() != dr || e.x_tail.size() != dt) {
            throw ValidationError("inconsistent feature widths within dataset at edge_id " +
                                  std::to_string(e.edge_id));
        }
        n += 1.0;
        accumulate(s.head_mean, m2_head, e.x_head, n);
        accumulate(s.edge_mean, m2_edge, e.x_edge, n);
        accumulate(s.tail_mean, m2_tail, e.x_tail, n);
    }
    s.head_std = finalize_std(m2_head, n);
    s.edge_std = finalize_std(m2_edge, n);
    s.tail_std = finalize_std(m2_tail, n);
    return s;
}

StdFeatures FeatureStats::apply(const EdgeRecord& edge) const {
    return StdFeatures{
        standardize(edge.x_head, head_mean, head_std, "x_head"),
        standardize(edge.x_edge, edge_mean, edge_std, "x_edge"),
        standardize(edge.x_tail, tail_mean, tail_std, "x_tail"),
    };
}

}  // namespace edgeformer
