#pragma once

#include <iostream>

#include "segmentor/adagrad.hpp"
#include "segmentor/features_io.hpp"
#include "segmentor/model.hpp"

namespace seg {

// The four frame-classifier variants of the comparison grid.
enum class BaselineArch { Rnn, Rnn2, BiRnn, BiRnn2 };

inline const char* to_string(BaselineArch a) {
    switch (a) {
        case BaselineArch::Rnn: return "rnn";
        case BaselineArch::Rnn2: return "2-rnn";
        case BaselineArch::BiRnn: return "bi-rnn";
        case BaselineArch::BiRnn2: return "bi-2-rnn";
    }
    return "?";
}

inline BaselineArch parse_baseline_arch(const std::string& s) {
    if (s == "rnn") return BaselineArch::Rnn;
    if (s == "2-rnn") return BaselineArch::Rnn2;
    if (s == "bi-rnn") return BaselineArch::BiRnn;
    if (s == "bi-2-rnn") return BaselineArch::BiRnn2;
    throw DataError("unknown baseline architecture: " + s +
                    " (expected rnn, 2-rnn, bi-rnn or bi-2-rnn)");
}

struct TrainConfig {
    std::size_t epochs_max = 200;
    std::size_t patience = 10;
    double eta = 0.01;
    double epsilon = 1e-8;
    long tau_train = 1;
    std::size_t hidden = 32;
    std::size_t layers = 2;
    bool bidirectional = true;
    double dropout = 0.3;
    WeightMode mode = WeightMode::PerBoundary;
    std::uint64_t seed = 42;
    double grad_clip = 5.0;  // <= 0 disables clipping
    std::size_t smooth_window = 5;
    bool baseline_binarize = false;
    bool verbose = false;
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs_max < 1) throw DataError("epochs_max must be >= 1");
    if (cfg.patience < 1) throw DataError("patience must be >= 1");
    if (cfg.eta <= 0.0) throw DataError("learning rate must be positive");
    if (cfg.epsilon <= 0.0) throw DataError("epsilon must be positive");
    if (cfg.tau_train < 0) throw DataError("tau_train must be nonnegative");
    if (cfg.hidden < 1 || cfg.layers < 1) throw DataError("hidden and layers must be >= 1");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw DataError("dropout must lie in [0, 1)");
    if (cfg.smooth_window < 1 || cfg.smooth_window % 2 == 0)
        throw DataError("smooth_window must be a positive odd integer");
}

inline RnnConfig rnn_config_of(const TrainConfig& cfg) {
    return {cfg.layers, cfg.hidden, cfg.bidirectional, cfg.dropout};
}

struct TrainHistory {
    std::vector<double> train_loss;  // per-epoch mean surrogate (or NLL)
    std::vector<double> dev_cd;      // per-epoch mean CD at tau = 0
    std::size_t best_epoch = 0;
};

struct TrainResult {
    SegmenterModel model;
    TrainHistory history;
};

namespace detail {

inline void check_dataset(const LoadedDataset& ds, const char* split) {
    if (ds.seqs.empty()) throw DataError(std::string("empty ") + split + " split");
    for (std::size_t i = 0; i < ds.seqs.size(); ++i) {
        validate_sequence(ds.seqs[i]);
        validate_pair(ds.labels[i], ds.seqs[i].frames());
        if (ds.seqs[i].dim() != ds.seqs[0].dim())
            throw DataError("inconsistent feature dimensions within the " + std::string(split) +
                            " split");
    }
}

inline void compute_norm_stats(const LoadedDataset& train, std::vector<double>& mean,
                               std::vector<double>& stddev) {
    const std::size_t D = train.seqs[0].dim();
    mean.assign(D, 0.0);
    stddev.assign(D, 0.0);
    std::size_t n = 0;
    for (const auto& seq : train.seqs) {
        for (std::size_t t = 0; t < seq.frames(); ++t)
            for (std::size_t d = 0; d < D; ++d) mean[d] += seq.values(t, d);
        n += seq.frames();
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& seq : train.seqs)
        for (std::size_t t = 0; t < seq.frames(); ++t)
            for (std::size_t d = 0; d < D; ++d) {
                double c = seq.values(t, d) - mean[d];
                stddev[d] += c * c;
            }
    for (double& s : stddev) s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-8);
}

inline std::vector<Matrix> normalized_copies(const LoadedDataset& ds,
                                             const std::vector<double>& mean,
                                             const std::vector<double>& stddev) {
    std::vector<Matrix> out;
    out.reserve(ds.seqs.size());
    for (const auto& seq : ds.seqs) {
        Matrix m = seq.values;
        for (std::size_t t = 0; t < m.rows(); ++t)
            for (std::size_t d = 0; d < m.cols(); ++d)
                m(t, d) = (m(t, d) - mean[d]) / stddev[d];
        out.push_back(std::move(m));
    }
    return out;
}

inline double global_grad_norm(const GradientBundle& g) {
    double sq = 0.0;
    for (const auto& grp : g.groups())
        for (double v : grp.values) sq += v * v;
    return std::sqrt(sq);
}

inline void clip_gradients(GradientBundle& g, double max_norm) {
    if (max_norm <= 0.0) return;
    double norm = global_grad_norm(g);
    if (norm <= max_norm) return;
    double scale = max_norm / norm;
    for (auto& grp : g.groups())
        for (double& v : grp.values) v *= scale;
}

inline std::string config_echo(const TrainConfig& cfg, const std::string& extra = {}) {
    std::ostringstream os;
    os << "epochs_max = " << cfg.epochs_max << '\n'
       << "patience = " << cfg.patience << '\n'
       << "eta = " << format_double(cfg.eta) << '\n'
       << "epsilon = " << format_double(cfg.epsilon) << '\n'
       << "tau_train = " << cfg.tau_train << '\n'
       << "hidden = " << cfg.hidden << '\n'
       << "layers = " << cfg.layers << '\n'
       << "bidirectional = " << (cfg.bidirectional ? "true" : "false") << '\n'
       << "dropout = " << format_double(cfg.dropout) << '\n'
       << "mode = " << to_string(cfg.mode) << '\n'
       << "seed = " << cfg.seed << '\n'
       << "grad_clip = " << format_double(cfg.grad_clip) << '\n'
       << "smooth_window = " << cfg.smooth_window << '\n'
       << "baseline_binarize = " << (cfg.baseline_binarize ? "true" : "false") << '\n';
    os << extra;
    return os.str();
}

// Mean CD (tau = 0) of the current model over pre-normalized dev features.
inline double dev_mean_cd(const SegmenterModel& model, const std::vector<Matrix>& dev_feats,
                          const std::vector<TimingPair>& dev_labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dev_feats.size(); ++i) {
        TimingPair pred = predict_pair_normalized(model, dev_feats[i]);
        sum += cd_loss(dev_labels[i], pred, 0).total();
    }
    return sum / static_cast<double>(dev_feats.size());
}

// Shared epoch loop: one shuffled pass per epoch, one utterance per update,
// dev-tracked early stopping keeping the best-dev parameters. step_fn runs
// forward+backward for one utterance and returns its loss; gradients
// accumulate into a bundle the loop owns.
template <typename StepFn>
inline TrainResult run_epochs(SegmenterModel model, const TrainConfig& cfg,
                              const std::vector<Matrix>& train_feats,
                              const std::vector<TimingPair>& train_labels,
                              const std::vector<Matrix>& dev_feats,
                              const std::vector<TimingPair>& dev_labels,
                              const std::vector<std::string>& ids, StepFn&& step_fn) {
    AdaGradState opt = make_adagrad(model.params, cfg.eta, cfg.epsilon);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_feats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainHistory history;
    ParamStore best_params = model.params;
    double best_cd = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
        shuffle_indices(order, rng);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            std::uint64_t dropout_seed = rng();
            GradientBundle grads = model.params.zero_like();
            double loss = step_fn(model, train_feats[idx], train_labels[idx], dropout_seed, grads);
            if (!std::isfinite(loss))
                throw NumericError("non-finite loss at utterance " + ids[idx]);
            loss_sum += loss;
            if (loss > 0.0) {
                clip_gradients(grads, cfg.grad_clip);
                adagrad_step(model.params, grads, opt);
            }
        }
        history.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
        double cd = dev_mean_cd(model, dev_feats, dev_labels);
        history.dev_cd.push_back(cd);
        if (cd < best_cd) {
            best_cd = cd;
            best_epoch = epoch;
            best_params = model.params;
        }
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << "  train " << history.train_loss.back() << "  dev-cd "
                      << cd << (best_epoch == epoch ? "  *" : "") << '\n';
        if (epoch - best_epoch >= cfg.patience) break;
    }

    model.params = std::move(best_params);
    history.best_epoch = best_epoch;
    return {std::move(model), std::move(history)};
}

}  // namespace detail

// Joint training of the recurrent feature extractor and the max-margin
// scorer: forward -> structural hinge -> analytic top-layer gradients ->
// backpropagation through time -> clipped AdaGrad step. Deterministic given
// the seed; model selection tracks dev mean CD at tau = 0.
inline TrainResult train_structured(const LoadedDataset& train, const LoadedDataset& dev,
                                    const TrainConfig& cfg) {
    validate_train_config(cfg);
    detail::check_dataset(train, "train");
    detail::check_dataset(dev, "dev");
    const std::size_t D = train.seqs[0].dim();
    if (dev.seqs[0].dim() != D) throw DataError("train/dev feature dimensions differ");

    SegmenterModel model = make_structured_model(D, rnn_config_of(cfg), cfg.mode, cfg.seed);
    detail::compute_norm_stats(train, model.norm_mean, model.norm_std);
    model.smooth_window = cfg.smooth_window;
    model.train_config_echo = detail::config_echo(cfg);
    auto train_feats = detail::normalized_copies(train, model.norm_mean, model.norm_std);
    auto dev_feats = detail::normalized_copies(dev, model.norm_mean, model.norm_std);

    std::vector<std::string> ids;
    for (const auto& s : train.seqs) ids.push_back(s.source_id);

    auto step = [&cfg](SegmenterModel& m, const Matrix& feats, const TimingPair& label,
                       std::uint64_t drop_seed, GradientBundle& grads) {
        RnnCache cache;
        Matrix phi = bilstm_forward(feats, m.params, m.rnn, true, drop_seed, cache);
        StructuredWeights w = StructuredWeights::from_store(m.params, m.mode);
        HingeResult h = hinge_loss(phi, w, label, cfg.tau_train);
        if (h.loss > 0.0) {
            HingeGrads hg = hinge_gradients(phi, w, label, h.y_hat);
            if (m.mode == WeightMode::Shared) {
                grads.values("w") = hg.dw1;
            } else {
                grads.values("w1") = hg.dw1;
                grads.values("w2") = hg.dw2;
            }
            bilstm_backward(hg.dphi, cache, m.params, grads);
        }
        return h.loss;
    };
    return detail::run_epochs(std::move(model), cfg, train_feats, train.labels, dev_feats,
                              dev.labels, ids, step);
}

// Frame-classifier comparison system: the same loop with the mean per-frame
// NLL in place of the structural loss. The dev metric stays the final
// pipeline's CD (posteriors -> smoothing -> pair extraction), not frame
// accuracy.
inline TrainResult train_baseline(const LoadedDataset& train, const LoadedDataset& dev,
                                  const TrainConfig& cfg_in, BaselineArch arch) {
    TrainConfig cfg = cfg_in;
    switch (arch) {
        case BaselineArch::Rnn: cfg.layers = 1; cfg.bidirectional = false; break;
        case BaselineArch::Rnn2: cfg.layers = 2; cfg.bidirectional = false; break;
        case BaselineArch::BiRnn: cfg.layers = 1; cfg.bidirectional = true; break;
        case BaselineArch::BiRnn2: cfg.layers = 2; cfg.bidirectional = true; break;
    }
    validate_train_config(cfg);
    detail::check_dataset(train, "train");
    detail::check_dataset(dev, "dev");
    const std::size_t D = train.seqs[0].dim();
    if (dev.seqs[0].dim() != D) throw DataError("train/dev feature dimensions differ");

    SegmenterModel model = make_baseline_model(D, rnn_config_of(cfg), cfg.seed);
    detail::compute_norm_stats(train, model.norm_mean, model.norm_std);
    model.smooth_window = cfg.smooth_window;
    model.binarize_before_extract = cfg.baseline_binarize;
    model.train_config_echo =
        detail::config_echo(cfg, std::string("arch = ") + to_string(arch) + "\n");
    auto train_feats = detail::normalized_copies(train, model.norm_mean, model.norm_std);
    auto dev_feats = detail::normalized_copies(dev, model.norm_mean, model.norm_std);

    std::vector<std::string> ids;
    for (const auto& s : train.seqs) ids.push_back(s.source_id);

    auto step = [](SegmenterModel& m, const Matrix& feats, const TimingPair& label,
                   std::uint64_t drop_seed, GradientBundle& grads) {
        RnnCache cache;
        Matrix phi = bilstm_forward(feats, m.params, m.rnn, true, drop_seed, cache);
        Matrix logits = linear_logits(phi, m.params.values("out.W"), m.params.values("out.b"));
        FrameNll nll = frame_nll(logits, frame_labels(label, feats.rows()));
        Matrix dPhi(phi.rows(), phi.cols());
        linear_backward(nll.dlogits, phi, m.params.values("out.W"), grads.values("out.W"),
                        grads.values("out.b"), dPhi);
        bilstm_backward(dPhi, cache, m.params, grads);
        return nll.loss;
    };
    return detail::run_epochs(std::move(model), cfg, train_feats, train.labels, dev_feats,
                              dev.labels, ids, step);
}

}  // namespace seg
