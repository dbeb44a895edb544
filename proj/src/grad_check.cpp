#include "edgeformer/grad_check.hpp"

#include <cmath>
#include <cstring>

#include "edgeformer/errors.hpp"

namespace edgeformer {

namespace {

double eval_loss(const ParamStore& params, const ScalarLossFn& fn) {
    LiftedParams lifted(params);
    autodiff::Value loss = fn(lifted);
    if (loss.tensor().size() != 1) {
        throw DimensionError("grad_check: loss must be scalar, got " + loss.tensor().shape_str());
    }
    return loss.tensor()[0];
}

bool bits_equal(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

GradCheckReport grad_check(const ParamStore& params, const ScalarLossFn& fn, double h) {
    if (h < 1e-6 || h > 1e-4) {
        throw ValidationError("grad_check: step must be in [1e-6, 1e-4], got " + std::to_string(h));
    }

    const double probe = eval_loss(params, fn);
    if (!bits_equal(probe, eval_loss(params, fn))) {
        throw ValidationError("grad_check: loss function is not deterministic");
    }

    LiftedParams lifted(params);
    autodiff::Value loss = fn(lifted);
    autodiff::backward(loss);

    GradCheckReport report;
    ParamStore work;
    for (const auto& name : params.names()) work.add(name, params.at(name));

    for (const auto& name : params.names()) {
        const Tensor& analytic = lifted.at(name).grad();
        Tensor& tensor = work.at(name);
        for (std::int64_t i = 0; i < tensor.size(); ++i) {
            const double original = tensor[i];
            tensor[i] = original + h;
            const double plus = eval_loss(work, fn);
            tensor[i] = original - h;
            const double minus = eval_loss(work, fn);
            tensor[i] = original;
            const double central = (plus - minus) / (2.0 * h);
            const double rel = std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
            ++report.checked_entries;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace edgeformer
