#pragma once

#include <cstdlib>

#include "segmentor/types.hpp"

namespace seg {

// [|a - b| - tau]_+ in whole frames.
inline double boundary_cost(std::size_t a, std::size_t b, long tau) {
    long d = std::labs(static_cast<long>(a) - static_cast<long>(b)) - tau;
    return d > 0 ? static_cast<double>(d) : 0.0;
}

// Combined duration cost: tau-insensitive L1 distance between boundary pairs,
// kept in frame units. Millisecond reporting happens at the evaluation layer.
struct CdLoss {
    double onset = 0.0;
    double offset = 0.0;

    double total() const { return onset + offset; }
};

inline CdLoss cd_loss(const TimingPair& y, const TimingPair& y_pred, long tau) {
    return {boundary_cost(y.onset, y_pred.onset, tau),
            boundary_cost(y.offset, y_pred.offset, tau)};
}

// Mean per-frame 2-class negative log-likelihood and its logit gradient.
struct FrameNll {
    double loss = 0.0;
    Matrix dlogits;  // (softmax - onehot) / T per frame; rows sum to 0
};

inline FrameNll frame_nll(const Matrix& logits, const std::vector<int>& labels) {
    const std::size_t T = logits.rows();
    if (logits.cols() != 2) throw DataError("frame_nll expects T x 2 logits");
    if (labels.size() != T) throw DataError("frame_nll: label/logit length mismatch");
    if (!all_finite(logits)) throw NumericError("frame_nll: non-finite logits");

    FrameNll out;
    out.dlogits = Matrix(T, 2);
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        int y = labels[t];
        if (y != 0 && y != 1) throw DataError("frame_nll: labels must be 0 or 1");
        double l0 = logits(t, 0), l1 = logits(t, 1);
        double m = std::max(l0, l1);
        double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        double z = e0 + e1;
        sum += (m + std::log(z)) - logits(t, static_cast<std::size_t>(y));
        double p0 = e0 / z, p1 = e1 / z;
        out.dlogits(t, 0) = (p0 - (y == 0 ? 1.0 : 0.0)) / static_cast<double>(T);
        out.dlogits(t, 1) = (p1 - (y == 1 ? 1.0 : 0.0)) / static_cast<double>(T);
    }
    out.loss = sum / static_cast<double>(T);
    return out;
}

}  // namespace seg
