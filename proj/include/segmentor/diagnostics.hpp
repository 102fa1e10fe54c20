#pragma once

#include "segmentor/grad_check.hpp"
#include "segmentor/model.hpp"

namespace seg {

// End-to-end gradient audit: structural hinge through the scoring head and
// the whole recurrent stack, verified coordinate by coordinate against
// central differences.
//
// The hinge is piecewise linear in the parameters; near a switch of the
// loss-augmented argmax the two-sided difference straddles a kink and the
// comparison is meaningless. Candidate instances are therefore screened: the
// argmax must beat the runner-up by a clear margin, far larger than any
// score movement an h-sized parameter nudge can cause.
struct PipelineCheckSpec {
    std::size_t frames = 8;
    std::size_t dim = 3;
    std::size_t hidden = 4;
    std::size_t layers = 2;
    bool bidirectional = true;
    WeightMode mode = WeightMode::PerBoundary;
    long tau = 1;
    std::uint64_t seed = 1;
    double h = 1e-5;
    double min_margin = 1e-2;
};

struct PipelineCheckResult {
    double max_rel_error = 0.0;
    std::uint64_t instance_seed = 0;
    double margin = 0.0;  // augmented-score gap between argmax and runner-up
    TimingPair y_ref, y_hat;
};

namespace detail {

// gap between the best and second-best augmented pair
inline double runner_up_margin(const BoundaryScores& s, const TimingPair& y_ref, long tau,
                               const TimingPair& best) {
    const std::size_t T = s.frames();
    double best_val = -std::numeric_limits<double>::infinity();
    double second = best_val;
    for (std::size_t y1 = 0; y1 + 1 < T; ++y1)
        for (std::size_t y2 = y1 + 1; y2 < T; ++y2) {
            double v = (s.onset[y1] + boundary_cost(y1, y_ref.onset, tau)) +
                       (s.offset[y2] + boundary_cost(y2, y_ref.offset, tau));
            if (TimingPair{y1, y2} == best)
                best_val = v;
            else
                second = std::max(second, v);
        }
    return best_val - second;
}

}  // namespace detail

inline PipelineCheckResult run_pipeline_grad_check(const PipelineCheckSpec& spec) {
    RnnConfig cfg{spec.layers, spec.hidden, spec.bidirectional, 0.0};

    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        const std::uint64_t inst_seed = spec.seed + attempt * 0x9e3779b9ULL;
        std::mt19937_64 rng(inst_seed);
        Matrix input(spec.frames, spec.dim);
        for (double& v : input.data()) v = uniform_sym(rng, 1.0);
        TimingPair y_ref;
        y_ref.onset = uniform_index(rng, spec.frames - 1);
        y_ref.offset = y_ref.onset + 1 + uniform_index(rng, spec.frames - 1 - y_ref.onset);
        ParamStore params = init_params(structured_param_specs(spec.dim, cfg, spec.mode),
                                        inst_seed ^ 0xabcdefULL);

        auto forward_loss = [&](const ParamStore& p) {
            RnnCache cache;
            Matrix phi = bilstm_forward(input, p, cfg, false, 0, cache);
            return hinge_loss(phi, StructuredWeights::from_store(p, spec.mode), y_ref, spec.tau);
        };

        HingeResult h0 = forward_loss(params);
        if (h0.loss <= 0.0 || h0.y_hat == y_ref) continue;
        RnnCache cache;
        Matrix phi = bilstm_forward(input, params, cfg, false, 0, cache);
        double margin = detail::runner_up_margin(
            score_frames(phi, StructuredWeights::from_store(params, spec.mode)), y_ref, spec.tau,
            h0.y_hat);
        if (margin < spec.min_margin) continue;

        auto loss_fn = [&](const ParamStore& p) { return forward_loss(p).loss; };
        auto grad_fn = [&](const ParamStore& p) {
            RnnCache c;
            Matrix f = bilstm_forward(input, p, cfg, false, 0, c);
            StructuredWeights w = StructuredWeights::from_store(p, spec.mode);
            HingeResult h = hinge_loss(f, w, y_ref, spec.tau);
            GradientBundle g = p.zero_like();
            HingeGrads hg = hinge_gradients(f, w, y_ref, h.y_hat);
            if (spec.mode == WeightMode::Shared) {
                g.values("w") = hg.dw1;
            } else {
                g.values("w1") = hg.dw1;
                g.values("w2") = hg.dw2;
            }
            bilstm_backward(hg.dphi, c, p, g);
            return g;
        };

        PipelineCheckResult result;
        result.max_rel_error = grad_check(loss_fn, grad_fn, params, spec.h);
        result.instance_seed = inst_seed;
        result.margin = margin;
        result.y_ref = y_ref;
        result.y_hat = h0.y_hat;
        return result;
    }
    throw NumericError("could not find a margin-stable instance for the pipeline gradient audit");
}

}  // namespace seg
