#pragma once

#include <sstream>

#include "segmentor/baseline.hpp"
#include "segmentor/rnn_features.hpp"
#include "segmentor/structured.hpp"

namespace seg {

enum class ModelKind { Structured, Baseline };

inline const char* to_string(ModelKind k) {
    return k == ModelKind::Structured ? "structured" : "baseline";
}

// One serializable bundle: recurrent stack parameters, the scoring head
// (boundary weights or the 2-class output layer), feature normalization
// statistics, and enough configuration to run inference.
struct SegmenterModel {
    ModelKind kind = ModelKind::Structured;
    RnnConfig rnn;
    WeightMode mode = WeightMode::PerBoundary;  // structured head only
    std::size_t input_dim = 0;
    std::size_t smooth_window = 5;      // baseline pipeline
    bool binarize_before_extract = false;
    ParamStore params;
    std::vector<double> norm_mean, norm_std;  // empty means identity
    std::string train_config_echo;      // key=value lines recorded by the trainer
};

inline std::vector<GroupSpec> structured_param_specs(std::size_t input_dim, const RnnConfig& cfg,
                                                     WeightMode mode) {
    auto specs = rnn_param_specs(input_dim, cfg);
    const std::size_t F = feature_dim(cfg);
    if (mode == WeightMode::Shared) {
        specs.push_back({"w", {F}, ParamInit::GlorotUniform});
    } else {
        specs.push_back({"w1", {F}, ParamInit::GlorotUniform});
        specs.push_back({"w2", {F}, ParamInit::GlorotUniform});
    }
    return specs;
}

inline std::vector<GroupSpec> baseline_param_specs(std::size_t input_dim, const RnnConfig& cfg) {
    auto specs = rnn_param_specs(input_dim, cfg);
    const std::size_t F = feature_dim(cfg);
    specs.push_back({"out.W", {2, F}, ParamInit::GlorotUniform});
    specs.push_back({"out.b", {2}, ParamInit::Zero});
    return specs;
}

inline SegmenterModel make_structured_model(std::size_t input_dim, const RnnConfig& cfg,
                                            WeightMode mode, std::uint64_t seed) {
    SegmenterModel m;
    m.kind = ModelKind::Structured;
    m.rnn = cfg;
    m.mode = mode;
    m.input_dim = input_dim;
    m.params = init_params(structured_param_specs(input_dim, cfg, mode), seed);
    return m;
}

inline SegmenterModel make_baseline_model(std::size_t input_dim, const RnnConfig& cfg,
                                          std::uint64_t seed) {
    SegmenterModel m;
    m.kind = ModelKind::Baseline;
    m.rnn = cfg;
    m.input_dim = input_dim;
    m.params = init_params(baseline_param_specs(input_dim, cfg), seed);
    return m;
}

inline void require_kind(const SegmenterModel& m, ModelKind k, const char* where) {
    if (m.kind != k)
        throw DataError(std::string(where) + ": model kind is " + to_string(m.kind) +
                        ", expected " + to_string(k));
}

// Per-dimension z-normalization with the stored train-split statistics.
inline Matrix normalize_features(const SegmenterModel& m, const Matrix& raw) {
    if (raw.cols() != m.input_dim)
        throw DataError("feature dimension " + std::to_string(raw.cols()) +
                        " does not match model input dimension " + std::to_string(m.input_dim));
    if (m.norm_mean.empty()) return raw;
    Matrix out = raw;
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t d = 0; d < out.cols(); ++d)
            out(t, d) = (out(t, d) - m.norm_mean[d]) / m.norm_std[d];
    return out;
}

// --- inference -------------------------------------------------------------

inline DecodeResult predict_structured_normalized(const SegmenterModel& m, const Matrix& feats) {
    require_kind(m, ModelKind::Structured, "structured inference");
    RnnCache cache;
    Matrix phi = bilstm_forward(feats, m.params, m.rnn, false, 0, cache);
    return decode(score_frames(phi, StructuredWeights::from_store(m.params, m.mode)));
}

inline FramePosterior classify_frames_normalized(const SegmenterModel& m, const Matrix& feats) {
    require_kind(m, ModelKind::Baseline, "frame classification");
    RnnCache cache;
    Matrix phi = bilstm_forward(feats, m.params, m.rnn, false, 0, cache);
    return posteriors_from_logits(linear_logits(phi, m.params.values("out.W"),
                                                m.params.values("out.b")));
}

inline FramePosterior classify_frames(const SegmenterModel& m, const FeatureSequence& seq) {
    validate_sequence(seq);
    return classify_frames_normalized(m, normalize_features(m, seq.values));
}

inline TimingPair predict_baseline_normalized(const SegmenterModel& m, const Matrix& feats) {
    FramePosterior post = classify_frames_normalized(m, feats);
    if (m.binarize_before_extract)
        for (double& p : post.p) p = p >= 0.5 ? 1.0 : 0.0;
    return extract_pair(smooth_posteriors(post, m.smooth_window));
}

inline TimingPair predict_pair_normalized(const SegmenterModel& m, const Matrix& feats) {
    return m.kind == ModelKind::Structured ? predict_structured_normalized(m, feats).pair
                                           : predict_baseline_normalized(m, feats);
}

inline TimingPair predict_pair(const SegmenterModel& m, const FeatureSequence& seq) {
    validate_sequence(seq);
    return predict_pair_normalized(m, normalize_features(m, seq.values));
}

// --- serialization ----------------------------------------------------------
// Layout: the checkpoint array stream (parameters plus norm.mean/norm.std),
// then a length-prefixed UTF-8 metadata block of key = value lines.

inline constexpr std::uint16_t kModelFormatVersion = 1;

inline void save_model(std::ostream& os, const SegmenterModel& m) {
    ParamStore arrays = m.params;
    if (!m.norm_mean.empty()) {
        arrays.add("norm.mean", {m.norm_mean.size()}).values = m.norm_mean;
        arrays.add("norm.std", {m.norm_std.size()}).values = m.norm_std;
    }
    save_params(os, arrays);

    std::ostringstream meta;
    meta << "model_format = " << kModelFormatVersion << '\n';
    meta << "kind = " << to_string(m.kind) << '\n';
    meta << "input_dim = " << m.input_dim << '\n';
    meta << "layers = " << m.rnn.layers << '\n';
    meta << "hidden = " << m.rnn.hidden << '\n';
    meta << "bidirectional = " << (m.rnn.bidirectional ? "true" : "false") << '\n';
    meta << "dropout = " << detail::format_double(m.rnn.dropout_rate) << '\n';
    meta << "mode = " << to_string(m.mode) << '\n';
    meta << "smooth_window = " << m.smooth_window << '\n';
    meta << "binarize = " << (m.binarize_before_extract ? "true" : "false") << '\n';
    std::vector<std::string> echo_lines;
    std::istringstream echo_is(m.train_config_echo);
    std::string line;
    while (std::getline(echo_is, line))
        if (!line.empty()) echo_lines.push_back(line);
    std::sort(echo_lines.begin(), echo_lines.end());  // stable bytes across save/load cycles
    for (const auto& l : echo_lines) meta << "train." << l << '\n';
    std::string meta_str = meta.str();
    io::write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
}

inline SegmenterModel load_model(std::istream& is) {
    ParamStore arrays = load_params(is);
    std::uint32_t meta_len = io::read_u32(is, "metadata length");
    std::string meta_str(meta_len, '\0');
    if (!is.read(meta_str.data(), meta_len)) throw DataError("truncated model metadata");
    auto kv = detail::parse_kv_lines(meta_str);

    auto need = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError(std::string("model metadata missing key: ") + key);
        return it->second;
    };
    if (need("model_format") != std::to_string(kModelFormatVersion))
        throw DataError("unsupported model format version " + kv["model_format"]);

    SegmenterModel m;
    std::string kind = need("kind");
    if (kind == "structured")
        m.kind = ModelKind::Structured;
    else if (kind == "baseline")
        m.kind = ModelKind::Baseline;
    else
        throw DataError("unknown model kind: " + kind);
    m.input_dim = detail::parse_size(need("input_dim"), "input_dim");
    m.rnn.layers = detail::parse_size(need("layers"), "layers");
    m.rnn.hidden = detail::parse_size(need("hidden"), "hidden");
    m.rnn.bidirectional = need("bidirectional") == "true";
    m.rnn.dropout_rate = detail::parse_double(need("dropout"), "dropout");
    m.mode = need("mode") == std::string("shared") ? WeightMode::Shared : WeightMode::PerBoundary;
    m.smooth_window = detail::parse_size(need("smooth_window"), "smooth_window");
    m.binarize_before_extract = need("binarize") == "true";

    std::string echo;
    for (const auto& [k, v] : kv)
        if (k.starts_with("train.")) echo += k.substr(6) + " = " + v + "\n";
    m.train_config_echo = echo;

    m.params = ParamStore{};
    for (auto& g : arrays.groups()) {
        if (g.name == "norm.mean")
            m.norm_mean = g.values;
        else if (g.name == "norm.std")
            m.norm_std = g.values;
        else
            m.params.add(g.name, g.dims).values = g.values;
    }
    validate_rnn_params(m.params, m.input_dim, m.rnn);
    return m;
}

inline void save_model_file(const std::string& path, const SegmenterModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    save_model(os, m);
    if (!os) throw DataError("write failed: " + path);
}

inline SegmenterModel load_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    return load_model(is);
}

}  // namespace seg
