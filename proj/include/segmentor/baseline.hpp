#pragma once

#include "segmentor/types.hpp"

namespace seg {

// Frame-wise voice probabilities from the frame classifier.
struct FramePosterior {
    std::vector<double> p;  // each in [0, 1]

    std::size_t frames() const { return p.size(); }
};

// 2-class output head: logits[t] = W phi[t] + b, W is [2 x F] row-major.
inline Matrix linear_logits(const Matrix& phi, std::span<const double> W,
                            std::span<const double> b) {
    const std::size_t F = phi.cols();
    if (W.size() != 2 * F || b.size() != 2)
        throw DataError("linear_logits: weight/feature dimension mismatch");
    Matrix logits(phi.rows(), 2);
    for (std::size_t t = 0; t < phi.rows(); ++t) {
        const double* row = phi.row(t);
        for (std::size_t k = 0; k < 2; ++k) {
            double acc = b[k];
            const double* w = W.data() + k * F;
            for (std::size_t f = 0; f < F; ++f) acc += w[f] * row[f];
            logits(t, k) = acc;
        }
    }
    return logits;
}

inline void linear_backward(const Matrix& dlogits, const Matrix& phi, std::span<const double> W,
                            std::span<double> dW, std::span<double> db, Matrix& dPhi) {
    const std::size_t F = phi.cols();
    for (std::size_t t = 0; t < phi.rows(); ++t) {
        const double* row = phi.row(t);
        double* drow = dPhi.row(t);
        for (std::size_t k = 0; k < 2; ++k) {
            double d = dlogits(t, k);
            if (d == 0.0) continue;
            db[k] += d;
            const double* w = W.data() + k * F;
            double* dw = dW.data() + k * F;
            for (std::size_t f = 0; f < F; ++f) {
                dw[f] += d * row[f];
                drow[f] += d * w[f];
            }
        }
    }
}

inline FramePosterior posteriors_from_logits(const Matrix& logits) {
    if (logits.cols() != 2) throw DataError("posteriors_from_logits expects T x 2 logits");
    FramePosterior out;
    out.p.resize(logits.rows());
    for (std::size_t t = 0; t < logits.rows(); ++t) {
        double m = std::max(logits(t, 0), logits(t, 1));
        double e0 = std::exp(logits(t, 0) - m), e1 = std::exp(logits(t, 1) - m);
        out.p[t] = e1 / (e0 + e1);
    }
    return out;
}

// Centered moving average; the window shrinks at the edges, so row sums stay 1
// and the output range stays inside [0, 1].
inline FramePosterior smooth_posteriors(const FramePosterior& post, std::size_t window) {
    if (window < 1 || window % 2 == 0)
        throw DataError("smoothing window must be a positive odd integer");
    const std::size_t T = post.frames();
    const std::size_t r = window / 2;
    FramePosterior out;
    out.p.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::size_t lo = t >= r ? t - r : 0;
        std::size_t hi = std::min(T - 1, t + r);
        double acc = 0.0;
        for (std::size_t u = lo; u <= hi; ++u) acc += post.p[u];
        out.p[t] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

// Most probable inclusive interval [y1, y2], y1 < y2, under per-frame
// Bernoulli likelihood: argmax of sum_{in} log p + sum_{out} log(1-p).
// Equivalently argmax over intervals of the log-odds sum, solved in O(T)
// with prefix sums and a running prefix minimum; ties break to the smallest
// pair, probabilities clamped to [1e-6, 1 - 1e-6].
inline TimingPair extract_pair(const FramePosterior& post) {
    const std::size_t T = post.frames();
    if (T < 2) throw DataError("extract_pair needs at least 2 frames");
    std::vector<double> prefix(T + 1, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double p = std::clamp(post.p[t], 1e-6, 1.0 - 1e-6);
        prefix[t + 1] = prefix[t] + (std::log(p) - std::log(1.0 - p));
    }
    std::size_t min_arg = 0;
    double min_val = prefix[0];
    TimingPair best{0, 1};
    double best_val = prefix[2] - prefix[0];
    for (std::size_t y2 = 2; y2 < T; ++y2) {
        if (prefix[y2 - 1] < min_val) {
            min_val = prefix[y2 - 1];
            min_arg = y2 - 1;
        }
        double v = prefix[y2 + 1] - min_val;
        if (v > best_val) {
            best = {min_arg, y2};
            best_val = v;
        }
    }
    return best;
}

// Inclusive voice interval labeling used to train the frame classifier.
inline std::vector<int> frame_labels(const TimingPair& y, std::size_t T) {
    validate_pair(y, T);
    std::vector<int> labels(T, 0);
    for (std::size_t t = y.onset; t <= y.offset; ++t) labels[t] = 1;
    return labels;
}

}  // namespace seg
