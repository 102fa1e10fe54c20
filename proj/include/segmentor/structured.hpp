#pragma once

#include <optional>
#include <span>

#include "segmentor/losses.hpp"
#include "segmentor/param_store.hpp"
#include "segmentor/types.hpp"

namespace seg {

// A single shared w scores onset and offset identically, which makes the
// scorer order-blind; distinct per-boundary weights are the default and the
// shared variant stays available behind the mode switch.
enum class WeightMode { PerBoundary, Shared };

inline const char* to_string(WeightMode m) {
    return m == WeightMode::Shared ? "shared" : "per-boundary";
}

// Non-owning view of the linear scoring weights, length F each.
struct StructuredWeights {
    WeightMode mode = WeightMode::PerBoundary;
    std::span<const double> w1, w2;  // Shared: w2 aliases w1

    static StructuredWeights shared(std::span<const double> w) {
        return {WeightMode::Shared, w, w};
    }
    static StructuredWeights per_boundary(std::span<const double> onset_w,
                                          std::span<const double> offset_w) {
        if (onset_w.size() != offset_w.size())
            throw DataError("per-boundary weight vectors must have equal length");
        return {WeightMode::PerBoundary, onset_w, offset_w};
    }
    static StructuredWeights from_store(const ParamStore& params, WeightMode mode) {
        if (mode == WeightMode::Shared) return shared(params.values("w"));
        return per_boundary(params.values("w1"), params.values("w2"));
    }

    std::size_t dim() const { return w1.size(); }
};

// Per-frame linear scores s_i[t] = w_i . phi[t].
struct BoundaryScores {
    std::vector<double> onset, offset;

    std::size_t frames() const { return onset.size(); }
};

inline BoundaryScores score_frames(const Matrix& phi, const StructuredWeights& w) {
    if (w.dim() != phi.cols()) throw DataError("score_frames: weight/feature dimension mismatch");
    const std::size_t T = phi.rows();
    BoundaryScores s;
    s.onset.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double* row = phi.row(t);
        double acc = 0.0;
        for (std::size_t f = 0; f < phi.cols(); ++f) acc += w.w1[f] * row[f];
        s.onset[t] = acc;
    }
    if (w.mode == WeightMode::Shared) {
        s.offset = s.onset;
    } else {
        s.offset.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            const double* row = phi.row(t);
            double acc = 0.0;
            for (std::size_t f = 0; f < phi.cols(); ++f) acc += w.w2[f] * row[f];
            s.offset[t] = acc;
        }
    }
    return s;
}

struct DecodeResult {
    TimingPair pair;
    double score = 0.0;
};

namespace detail {

// argmax over y1 < y2 of a1[y1] + a2[y2] via prefix maxima of a1, O(T).
// Strict-improvement updates plus earliest prefix argmax realize the
// lexicographic smallest-(y1, y2) tie rule.
inline DecodeResult best_pair(std::span<const double> a1, std::span<const double> a2) {
    const std::size_t T = a1.size();
    if (T < 2) throw DataError("decoding needs at least 2 frames");
    std::size_t prefix_arg = 0;
    double prefix_max = a1[0];
    DecodeResult best{{0, 1}, a1[0] + a2[1]};
    for (std::size_t y2 = 2; y2 < T; ++y2) {
        if (a1[y2 - 1] > prefix_max) {
            prefix_max = a1[y2 - 1];
            prefix_arg = y2 - 1;
        }
        double v = prefix_max + a2[y2];
        if (v > best.score) best = {{prefix_arg, y2}, v};
    }
    return best;
}

}  // namespace detail

inline DecodeResult decode(const BoundaryScores& s) {
    return detail::best_pair(s.onset, s.offset);
}

// Adds the separable cost [|y_i - ref_i| - tau]_+ to each per-frame score and
// runs the same search; the returned score includes the cost term.
inline DecodeResult decode_loss_augmented(const BoundaryScores& s, const TimingPair& y_ref,
                                          long tau) {
    const std::size_t T = s.frames();
    validate_pair(y_ref, T);
    std::vector<double> a1(T), a2(T);
    for (std::size_t t = 0; t < T; ++t) {
        a1[t] = s.onset[t] + boundary_cost(t, y_ref.onset, tau);
        a2[t] = s.offset[t] + boundary_cost(t, y_ref.offset, tau);
    }
    return detail::best_pair(a1, a2);
}

// Exhaustive O(T^2) reference search with the identical objective and tie
// rule; the test oracle for the prefix-max decoders.
inline DecodeResult brute_force_decode(const BoundaryScores& s,
                                       std::optional<std::pair<TimingPair, long>> aug = {}) {
    const std::size_t T = s.frames();
    if (T < 2) throw DataError("decoding needs at least 2 frames");
    if (aug) validate_pair(aug->first, T);
    bool have = false;
    DecodeResult best;
    for (std::size_t y1 = 0; y1 + 1 < T; ++y1) {
        double a1 = s.onset[y1] + (aug ? boundary_cost(y1, aug->first.onset, aug->second) : 0.0);
        for (std::size_t y2 = y1 + 1; y2 < T; ++y2) {
            double a2 =
                s.offset[y2] + (aug ? boundary_cost(y2, aug->first.offset, aug->second) : 0.0);
            double v = a1 + a2;
            if (!have || v > best.score) {
                best = {{y1, y2}, v};
                have = true;
            }
        }
    }
    return best;
}

// Structural hinge: max over y' of [cost(y_ref, y') + s(y') - s(y_ref)],
// evaluated through the loss-augmented argmax. Never negative: y_ref itself
// is a feasible candidate with augmented value s(y_ref).
struct HingeResult {
    double loss = 0.0;
    TimingPair y_hat;   // loss-augmented argmax
    double ref_score = 0.0;
};

inline HingeResult hinge_loss(const Matrix& phi, const StructuredWeights& w,
                              const TimingPair& y_ref, long tau) {
    BoundaryScores s = score_frames(phi, w);
    validate_pair(y_ref, s.frames());
    DecodeResult aug = decode_loss_augmented(s, y_ref, tau);
    double ref_score = s.onset[y_ref.onset] + s.offset[y_ref.offset];
    return {aug.score - ref_score, aug.pair, ref_score};
}

// d(loss)/dw and d(loss)/dphi with the argmax pair held fixed:
//   dw_i   = phi[y_hat_i] - phi[y_ref_i]
//   dphi   = +w_i at y_hat rows, -w_i at y_ref rows (accumulated on overlap)
// Shared mode folds both boundary contributions into the single dw1.
struct HingeGrads {
    std::vector<double> dw1, dw2;  // Shared: dw2 empty
    Matrix dphi;                   // T x F
};

inline HingeGrads hinge_gradients(const Matrix& phi, const StructuredWeights& w,
                                  const TimingPair& y_ref, const TimingPair& y_hat) {
    const std::size_t T = phi.rows(), F = phi.cols();
    validate_pair(y_ref, T);
    validate_pair(y_hat, T);
    if (w.dim() != F) throw DataError("hinge_gradients: weight/feature dimension mismatch");

    HingeGrads g;
    g.dphi = Matrix(T, F);
    g.dw1.assign(F, 0.0);
    const bool shared = w.mode == WeightMode::Shared;
    if (!shared) g.dw2.assign(F, 0.0);
    std::vector<double>& dw_off = shared ? g.dw1 : g.dw2;

    for (std::size_t f = 0; f < F; ++f) {
        g.dw1[f] += phi(y_hat.onset, f) - phi(y_ref.onset, f);
        dw_off[f] += phi(y_hat.offset, f) - phi(y_ref.offset, f);
    }
    for (std::size_t f = 0; f < F; ++f) {
        g.dphi(y_hat.onset, f) += w.w1[f];
        g.dphi(y_hat.offset, f) += w.w2[f];
        g.dphi(y_ref.onset, f) -= w.w1[f];
        g.dphi(y_ref.offset, f) -= w.w2[f];
    }
    return g;
}

}  // namespace seg
