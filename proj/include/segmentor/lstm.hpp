#pragma once

#include "segmentor/common.hpp"

namespace seg {

// Plain LSTM cell, no peepholes. Gates are packed [i, f, g, o] along the
// row axis, each block H wide:
//   pre = Wx x_t + Wh h_prev + b
//   i, f, o = sigmoid(pre_i, pre_f, pre_o);  g = tanh(pre_g)
//   c = f . c_prev + i . g
//   h = o . tanh(c)
// Wx is [4H x in], Wh is [4H x H], b is [4H], all row-major.

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// One step. gates_out holds post-activation i,f,g,o (4H); the cache needed
// for the exact backward pass.
inline void lstm_step(const double* x, const double* h_prev, const double* c_prev,
                      const double* Wx, const double* Wh, const double* b, std::size_t in_dim,
                      std::size_t H, double* gates_out, double* c_out, double* h_out) {
    for (std::size_t r = 0; r < 4 * H; ++r) {
        double acc = b[r];
        const double* wx = Wx + r * in_dim;
        for (std::size_t k = 0; k < in_dim; ++k) acc += wx[k] * x[k];
        const double* wh = Wh + r * H;
        for (std::size_t k = 0; k < H; ++k) acc += wh[k] * h_prev[k];
        gates_out[r] = acc;
    }
    double* gi = gates_out;
    double* gf = gates_out + H;
    double* gg = gates_out + 2 * H;
    double* go = gates_out + 3 * H;
    for (std::size_t k = 0; k < H; ++k) {
        gi[k] = sigmoid(gi[k]);
        gf[k] = sigmoid(gf[k]);
        gg[k] = std::tanh(gg[k]);
        go[k] = sigmoid(go[k]);
        c_out[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
        h_out[k] = go[k] * std::tanh(c_out[k]);
    }
}

}  // namespace detail

struct LstmCellResult {
    std::vector<double> h, c;
    std::vector<double> gates;  // post-activation i,f,g,o, the backward cache
};

inline LstmCellResult lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                                std::span<const double> c_prev, std::span<const double> Wx,
                                std::span<const double> Wh, std::span<const double> b) {
    const std::size_t H = h_prev.size();
    const std::size_t in_dim = x.size();
    if (c_prev.size() != H || b.size() != 4 * H || Wx.size() != 4 * H * in_dim ||
        Wh.size() != 4 * H * H)
        throw DataError("lstm_cell: inconsistent dimensions");
    if (!all_finite(x) || !all_finite(h_prev) || !all_finite(c_prev))
        throw NumericError("lstm_cell: non-finite input");
    LstmCellResult out;
    out.h.resize(H);
    out.c.resize(H);
    out.gates.resize(4 * H);
    detail::lstm_step(x.data(), h_prev.data(), c_prev.data(), Wx.data(), Wh.data(), b.data(),
                      in_dim, H, out.gates.data(), out.c.data(), out.h.data());
    return out;
}

// Whole-sequence pass for one direction. Zero initial state. The cache keeps
// post-activation gates and cell states per step; together with the layer
// input and h_seq that is everything the exact backward pass needs.
struct LstmSeqCache {
    Matrix gates;  // T x 4H
    Matrix c;      // T x H
    Matrix h;      // T x H, the outputs
};

inline void lstm_forward_seq(const Matrix& input, std::span<const double> Wx,
                             std::span<const double> Wh, std::span<const double> b, std::size_t H,
                             LstmSeqCache& cache) {
    const std::size_t T = input.rows(), in_dim = input.cols();
    cache.gates = Matrix(T, 4 * H);
    cache.c = Matrix(T, H);
    cache.h = Matrix(T, H);
    std::vector<double> zero(H, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double* h_prev = t == 0 ? zero.data() : cache.h.row(t - 1);
        const double* c_prev = t == 0 ? zero.data() : cache.c.row(t - 1);
        detail::lstm_step(input.row(t), h_prev, c_prev, Wx.data(), Wh.data(), b.data(), in_dim, H,
                          cache.gates.row(t), cache.c.row(t), cache.h.row(t));
    }
}

// Backpropagation through time. dH is dLoss/dh_t from the paths above this
// layer; parameter gradients accumulate into dWx/dWh/db and input gradients
// into d_input (all must be pre-sized and may carry prior contributions).
inline void lstm_backward_seq(const Matrix& dH, const Matrix& input, const LstmSeqCache& cache,
                              std::span<const double> Wx, std::span<const double> Wh,
                              std::span<double> dWx, std::span<double> dWh, std::span<double> db,
                              Matrix& d_input) {
    const std::size_t T = input.rows(), in_dim = input.cols(), H = cache.h.cols();
    if (dH.rows() != T || dH.cols() != H) throw DataError("lstm_backward_seq: dH shape mismatch");

    std::vector<double> dh(H), dc_next(H, 0.0), dh_next(H, 0.0), dpre(4 * H);
    std::vector<double> zero(H, 0.0);
    for (std::size_t ti = T; ti-- > 0;) {
        const double* gi = cache.gates.row(ti);
        const double* gf = gi + H;
        const double* gg = gi + 2 * H;
        const double* go = gi + 3 * H;
        const double* c = cache.c.row(ti);
        const double* c_prev = ti == 0 ? zero.data() : cache.c.row(ti - 1);
        const double* h_prev = ti == 0 ? zero.data() : cache.h.row(ti - 1);

        for (std::size_t k = 0; k < H; ++k) {
            dh[k] = dH(ti, k) + dh_next[k];
            double tc = std::tanh(c[k]);
            double do_ = dh[k] * tc;
            double dc = dh[k] * go[k] * (1.0 - tc * tc) + dc_next[k];
            double df = dc * c_prev[k];
            double di = dc * gg[k];
            double dg = dc * gi[k];
            dpre[k] = di * gi[k] * (1.0 - gi[k]);
            dpre[H + k] = df * gf[k] * (1.0 - gf[k]);
            dpre[2 * H + k] = dg * (1.0 - gg[k] * gg[k]);
            dpre[3 * H + k] = do_ * go[k] * (1.0 - go[k]);
            dc_next[k] = dc * gf[k];
        }

        const double* x = input.row(ti);
        double* dx = d_input.row(ti);
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double d = dpre[r];
            if (d == 0.0) continue;
            db[r] += d;
            double* dwx = dWx.data() + r * in_dim;
            const double* wx = Wx.data() + r * in_dim;
            for (std::size_t k = 0; k < in_dim; ++k) {
                dwx[k] += d * x[k];
                dx[k] += d * wx[k];
            }
            double* dwh = dWh.data() + r * H;
            const double* wh = Wh.data() + r * H;
            for (std::size_t k = 0; k < H; ++k) {
                dwh[k] += d * h_prev[k];
                dh_next[k] += d * wh[k];
            }
        }
    }
}

}  // namespace seg
