#pragma once

#include <cstdint>
#include <vector>

namespace edgeformer {

/// Edge label in the bipartite active-player / lost-player graph.
/// positive: invited and returned; negative: invited and not returned, or
/// never invited; unlabeled: the head invited nobody (pre-training pool).
enum class EdgeLabel : int { negative = 0, positive = 1, unlabeled = -1 };

/// One (head features, edge features, tail features, label) instance.
/// x_edge[0] is the intimacy score by convention.
struct EdgeRecord {
    std::int64_t edge_id = 0;
    std::int64_t head_id = 0;
    std::int64_t tail_id = 0;
    EdgeLabel label = EdgeLabel::unlabeled;
    std::vector<double> x_head;
    std::vector<double> x_edge;
    std::vector<double> x_tail;
};

}  // namespace edgeformer
