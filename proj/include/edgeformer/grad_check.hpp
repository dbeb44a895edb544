#pragma once

#include <functional>
#include <string>

#include "edgeformer/param_store.hpp"

namespace edgeformer {

/// Builds a scalar loss graph from lifted parameters. Must be
/// deterministic: two invocations on the same parameters have to produce
/// bitwise-identical losses.
using ScalarLossFn = std::function<autodiff::Value(const LiftedParams&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    std::int64_t checked_entries = 0;
};

/// Compares reverse-mode gradients against central finite differences over
/// every entry of every parameter. Relative error per entry is
/// |analytic - central| / max(1, |central|). h must lie in [1e-6, 1e-4].
GradCheckReport grad_check(const ParamStore& params, const ScalarLossFn& fn, double h);

}  // namespace edgeformer
