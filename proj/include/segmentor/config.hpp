#pragma once

#include <fstream>

#include "segmentor/trainer.hpp"

namespace seg {

// Training config files: UTF-8 text, one key = value per line, '#' comments.
// Every TrainConfig field is addressable; CLI flags override file values.
inline void apply_train_config(const std::map<std::string, std::string>& kv, TrainConfig& cfg) {
    for (const auto& [key, value] : kv) {
        if (key == "epochs_max")
            cfg.epochs_max = detail::parse_size(value, key);
        else if (key == "patience")
            cfg.patience = detail::parse_size(value, key);
        else if (key == "eta")
            cfg.eta = detail::parse_double(value, key);
        else if (key == "epsilon")
            cfg.epsilon = detail::parse_double(value, key);
        else if (key == "tau_train")
            cfg.tau_train = static_cast<long>(detail::parse_size(value, key));
        else if (key == "hidden")
            cfg.hidden = detail::parse_size(value, key);
        else if (key == "layers")
            cfg.layers = detail::parse_size(value, key);
        else if (key == "bidirectional")
            cfg.bidirectional = detail::parse_bool(value, key);
        else if (key == "dropout")
            cfg.dropout = detail::parse_double(value, key);
        else if (key == "mode") {
            if (value == "shared")
                cfg.mode = WeightMode::Shared;
            else if (value == "per-boundary")
                cfg.mode = WeightMode::PerBoundary;
            else
                throw DataError("mode must be shared or per-boundary, got: " + value);
        } else if (key == "seed")
            cfg.seed = detail::parse_size(value, key);
        else if (key == "grad_clip")
            cfg.grad_clip = detail::parse_double(value, key);
        else if (key == "smooth_window")
            cfg.smooth_window = detail::parse_size(value, key);
        else if (key == "baseline_binarize")
            cfg.baseline_binarize = detail::parse_bool(value, key);
        else if (key == "verbose")
            cfg.verbose = detail::parse_bool(value, key);
        else
            throw DataError("unknown config key: " + key);
    }
}

inline TrainConfig load_train_config(const std::string& path, TrainConfig base = {}) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open config: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    apply_train_config(detail::parse_kv_lines(os.str()), base);
    return base;
}

}  // namespace seg
