#pragma once

#include "segmentor/lstm.hpp"
#include "segmentor/param_store.hpp"
#include "segmentor/types.hpp"

namespace seg {

// Stacked (bi)directional LSTM producing one feature row per frame. Layer
// outputs are the concatenation forward(+)backward; deeper layers consume the
// previous concatenation. Dropout sits between recurrent layers only, never
// after the last one.
struct RnnConfig {
    std::size_t layers = 2;
    std::size_t hidden = 32;
    bool bidirectional = true;
    double dropout_rate = 0.3;
};

inline void validate_config(const RnnConfig& cfg) {
    if (cfg.layers < 1 || cfg.hidden < 1)
        throw DataError("rnn config needs layers >= 1 and hidden >= 1");
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
        throw DataError("dropout rate must lie in [0, 1)");
}

// Columns of the per-frame feature matrix: 2H bidirectional, H forward-only.
inline std::size_t feature_dim(const RnnConfig& cfg) {
    return (cfg.bidirectional ? 2 : 1) * cfg.hidden;
}

inline std::string rnn_group_name(std::size_t layer, bool backward, const char* leaf) {
    return "rnn.l" + std::to_string(layer) + (backward ? ".bwd." : ".fwd.") + leaf;
}

inline std::vector<GroupSpec> rnn_param_specs(std::size_t input_dim, const RnnConfig& cfg) {
    validate_config(cfg);
    if (input_dim == 0) throw DataError("input dimension must be positive");
    std::vector<GroupSpec> specs;
    const std::size_t H = cfg.hidden;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        std::size_t in = l == 0 ? input_dim : feature_dim(cfg);
        for (bool backward : cfg.bidirectional ? std::vector<bool>{false, true}
                                               : std::vector<bool>{false}) {
            specs.push_back({rnn_group_name(l, backward, "Wx"), {4 * H, in}, ParamInit::GlorotUniform});
            specs.push_back({rnn_group_name(l, backward, "Wh"), {4 * H, H}, ParamInit::GlorotUniform});
            specs.push_back({rnn_group_name(l, backward, "b"), {4 * H}, ParamInit::LstmBias});
        }
    }
    return specs;
}

inline void validate_rnn_params(const ParamStore& params, std::size_t input_dim,
                                const RnnConfig& cfg) {
    for (const auto& spec : rnn_param_specs(input_dim, cfg)) {
        if (!params.has(spec.name)) throw DataError("missing parameter group: " + spec.name);
        if (params.at(spec.name).dims != spec.dims)
            throw DataError("parameter/config shape mismatch in group: " + spec.name);
    }
}

struct RnnCache {
    struct Layer {
        Matrix input;        // what the layer consumed (post-dropout of the previous output)
        LstmSeqCache fwd;
        LstmSeqCache bwd;    // stored in reversed frame order
        Matrix drop_mask;    // empty unless training dropped this layer's output
    };
    std::vector<Layer> layers;
    std::size_t input_dim = 0;
    RnnConfig cfg;
};

// Forward pass over a whole utterance. In train mode, inverted-dropout masks
// (0 or 1/(1-rate)) are sampled from dropout_seed; eval mode ignores the seed
// and applies no dropout.
inline Matrix bilstm_forward(const Matrix& input, const ParamStore& params, const RnnConfig& cfg,
                             bool train_mode, std::uint64_t dropout_seed, RnnCache& cache) {
    validate_rnn_params(params, input.cols(), cfg);
    if (input.rows() < 2) throw DataError("bilstm_forward: need at least 2 frames");
    if (!all_finite(input)) throw NumericError("bilstm_forward: non-finite input");

    const std::size_t H = cfg.hidden;
    cache.layers.assign(cfg.layers, {});
    cache.input_dim = input.cols();
    cache.cfg = cfg;
    std::mt19937_64 drop_rng(dropout_seed);

    Matrix current = input;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        auto& lc = cache.layers[l];
        lc.input = std::move(current);

        lstm_forward_seq(lc.input, params.values(rnn_group_name(l, false, "Wx")),
                         params.values(rnn_group_name(l, false, "Wh")),
                         params.values(rnn_group_name(l, false, "b")), H, lc.fwd);

        Matrix out;
        if (cfg.bidirectional) {
            Matrix reversed = reverse_rows(lc.input);
            lstm_forward_seq(reversed, params.values(rnn_group_name(l, true, "Wx")),
                             params.values(rnn_group_name(l, true, "Wh")),
                             params.values(rnn_group_name(l, true, "b")), H, lc.bwd);
            out = Matrix(lc.input.rows(), 2 * H);
            for (std::size_t t = 0; t < out.rows(); ++t) {
                std::memcpy(out.row(t), lc.fwd.h.row(t), H * sizeof(double));
                std::memcpy(out.row(t) + H, lc.bwd.h.row(out.rows() - 1 - t), H * sizeof(double));
            }
        } else {
            out = lc.fwd.h;
        }

        if (train_mode && cfg.dropout_rate > 0.0 && l + 1 < cfg.layers) {
            double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
            lc.drop_mask = Matrix(out.rows(), out.cols());
            for (std::size_t t = 0; t < out.rows(); ++t)
                for (std::size_t f = 0; f < out.cols(); ++f) {
                    double m = uniform01(drop_rng) >= cfg.dropout_rate ? keep_scale : 0.0;
                    lc.drop_mask(t, f) = m;
                    out(t, f) *= m;
                }
        }
        current = std::move(out);
    }
    return current;
}

// Exact gradients of sum(dPhi . phi) with respect to every rnn.* parameter
// group, accumulated into grads (which must mirror params' shapes).
inline void bilstm_backward(const Matrix& dPhi, const RnnCache& cache, const ParamStore& params,
                            GradientBundle& grads) {
    const RnnConfig& cfg = cache.cfg;
    const std::size_t H = cfg.hidden;
    if (cache.layers.size() != cfg.layers) throw DataError("bilstm_backward: stale cache");
    const std::size_t T = cache.layers.empty() ? 0 : cache.layers[0].input.rows();
    if (dPhi.rows() != T || dPhi.cols() != feature_dim(cfg))
        throw DataError("bilstm_backward: dPhi shape does not match the forward pass");

    Matrix d_out = dPhi;
    for (std::size_t l = cfg.layers; l-- > 0;) {
        const auto& lc = cache.layers[l];
        if (!lc.drop_mask.empty())
            for (std::size_t i = 0; i < d_out.data().size(); ++i)
                d_out.data()[i] *= lc.drop_mask.data()[i];

        Matrix d_input(lc.input.rows(), lc.input.cols());
        if (cfg.bidirectional) {
            Matrix dH_fwd(T, H), dH_bwd(T, H);
            for (std::size_t t = 0; t < T; ++t) {
                std::memcpy(dH_fwd.row(t), d_out.row(t), H * sizeof(double));
                std::memcpy(dH_bwd.row(t), d_out.row(t) + H, H * sizeof(double));
            }
            lstm_backward_seq(dH_fwd, lc.input, lc.fwd,
                              params.values(rnn_group_name(l, false, "Wx")),
                              params.values(rnn_group_name(l, false, "Wh")),
                              grads.values(rnn_group_name(l, false, "Wx")),
                              grads.values(rnn_group_name(l, false, "Wh")),
                              grads.values(rnn_group_name(l, false, "b")), d_input);
            Matrix rev_input = reverse_rows(lc.input);
            Matrix d_rev_input(rev_input.rows(), rev_input.cols());
            Matrix dH_bwd_rev = reverse_rows(dH_bwd);
            lstm_backward_seq(dH_bwd_rev, rev_input, lc.bwd,
                              params.values(rnn_group_name(l, true, "Wx")),
                              params.values(rnn_group_name(l, true, "Wh")),
                              grads.values(rnn_group_name(l, true, "Wx")),
                              grads.values(rnn_group_name(l, true, "Wh")),
                              grads.values(rnn_group_name(l, true, "b")), d_rev_input);
            Matrix d_unrev = reverse_rows(d_rev_input);
            for (std::size_t i = 0; i < d_input.data().size(); ++i)
                d_input.data()[i] += d_unrev.data()[i];
        } else {
            lstm_backward_seq(d_out, lc.input, lc.fwd,
                              params.values(rnn_group_name(l, false, "Wx")),
                              params.values(rnn_group_name(l, false, "Wh")),
                              grads.values(rnn_group_name(l, false, "Wx")),
                              grads.values(rnn_group_name(l, false, "Wh")),
                              grads.values(rnn_group_name(l, false, "b")), d_input);
        }
        d_out = std::move(d_input);
    }
}

inline GradientBundle bilstm_backward(const Matrix& dPhi, const RnnCache& cache,
                                      const ParamStore& params) {
    GradientBundle grads = params.zero_like();
    bilstm_backward(dPhi, cache, params, grads);
    return grads;
}

}  // namespace seg
