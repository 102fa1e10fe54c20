#pragma once

#include "segmentor/param_store.hpp"

namespace seg {

// Per-coordinate accumulator of squared gradients. Accumulators only grow, so
// the effective step eta / (sqrt(G) + eps) never increases for a coordinate.
struct AdaGradState {
    ParamStore accum;
    double eta = 0.01;
    double eps = 1e-8;
};

inline AdaGradState make_adagrad(const ParamStore& params, double eta = 0.01, double eps = 1e-8) {
    return AdaGradState{params.zero_like(), eta, eps};
}

// G += g^2; theta -= eta * g / (sqrt(G) + eps)
inline void adagrad_step(ParamStore& params, const GradientBundle& grads, AdaGradState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.accum))
        throw DataError("adagrad_step: parameter/gradient shape mismatch");
    for (std::size_t gi = 0; gi < params.groups().size(); ++gi) {
        auto& p = params.groups()[gi].values;
        const auto& g = grads.groups()[gi].values;
        auto& acc = state.accum.groups()[gi].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("adagrad_step: non-finite gradient in group " +
                                   params.groups()[gi].name);
            acc[i] += g[i] * g[i];
            p[i] -= state.eta * g[i] / (std::sqrt(acc[i]) + state.eps);
        }
    }
}

}  // namespace seg
