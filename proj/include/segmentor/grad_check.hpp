#pragma once

#include "segmentor/param_store.hpp"

namespace seg {

// Central-difference verification of an analytic gradient.
//
// For every coordinate: numeric = (f(theta+h) - f(theta-h)) / 2h, and the
// reported error is max over coordinates of |a - n| / max(|a|, |n|, 1e-8).
// loss_fn must be deterministic (fixed dropout seed, fixed argmax regime).
template <typename LossFn, typename GradFn>
inline double grad_check(LossFn&& loss_fn, GradFn&& grad_fn, const ParamStore& params,
                         double h = 1e-5) {
    GradientBundle analytic = grad_fn(params);
    if (!analytic.same_shape(params))
        throw DataError("grad_check: gradient shape does not match parameters");

    ParamStore probe = params;
    double max_err = 0.0;
    for (std::size_t gi = 0; gi < probe.groups().size(); ++gi) {
        auto& vals = probe.groups()[gi].values;
        const auto& avals = analytic.groups()[gi].values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double saved = vals[i];
            vals[i] = saved + h;
            double f_plus = loss_fn(probe);
            vals[i] = saved - h;
            double f_minus = loss_fn(probe);
            vals[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw NumericError("grad_check: non-finite loss at perturbed point in group " +
                                   probe.groups()[gi].name);
            double numeric = (f_plus - f_minus) / (2.0 * h);
            double a = avals[i];
            double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace seg
