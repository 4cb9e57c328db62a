#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "ashe/gemm.hpp"
#include "ashe/rng.hpp"
#include "ashe/tensor.hpp"

namespace ashe {

// Shallow classifier over 3x96x96 inputs:
// conv(c1)-relu-conv(c1)-relu-pool2 / conv(c2)-relu-conv(c2)-relu-pool2 /
// conv(c3)-relu / fc(hidden)-relu-dropout / fc(classes).
// All convolutions are 3x3, stride 1, same padding. The reduced variant
// shrinks every dimension for finite-difference gradient checks.
template <typename T>
struct ModelT {
    int in_ch = 3;
    int in_hw = 96;
    int c1 = 32;
    int c2 = 64;
    int c3 = 128;
    int fc_hidden = 128;
    int classes = 2;

    TensorT<T> conv1a_w, conv1a_b, conv1b_w, conv1b_b;
    TensorT<T> conv2a_w, conv2a_b, conv2b_w, conv2b_b;
    TensorT<T> conv3_w, conv3_b;
    TensorT<T> fc1_w, fc1_b, fc2_w, fc2_b;

    int flat_features() const {
        const int q = in_hw / 4;
        return c3 * q * q;
    }

    void build() {
        require(in_hw >= 4 && in_hw % 4 == 0,
                "model: input side must be a positive multiple of 4");
        require(in_ch >= 1 && c1 >= 1 && c2 >= 1 && c3 >= 1 && fc_hidden >= 1 &&
                    classes >= 2,
                "model: bad dimensions");
        conv1a_w = TensorT<T>({c1, in_ch, 3, 3});
        conv1a_b = TensorT<T>({c1});
        conv1b_w = TensorT<T>({c1, c1, 3, 3});
        conv1b_b = TensorT<T>({c1});
        conv2a_w = TensorT<T>({c2, c1, 3, 3});
        conv2a_b = TensorT<T>({c2});
        conv2b_w = TensorT<T>({c2, c2, 3, 3});
        conv2b_b = TensorT<T>({c2});
        conv3_w = TensorT<T>({c3, c2, 3, 3});
        conv3_b = TensorT<T>({c3});
        fc1_w = TensorT<T>({fc_hidden, flat_features()});
        fc1_b = TensorT<T>({fc_hidden});
        fc2_w = TensorT<T>({classes, fc_hidden});
        fc2_b = TensorT<T>({classes});
    }

    static ModelT standard() {
        ModelT m;
        m.build();
        require(m.flat_features() == 73728, "model: standard shape chain broken");
        return m;
    }

    // Small enough that central differences over every parameter stay cheap.
    static ModelT reduced() {
        ModelT m;
        m.in_ch = 2;
        m.in_hw = 8;
        m.c1 = 2;
        m.c2 = 2;
        m.c3 = 3;
        m.fc_hidden = 4;
        m.classes = 2;
        m.build();
        return m;
    }

    std::vector<TensorT<T>*> params() {
        return {&conv1a_w, &conv1a_b, &conv1b_w, &conv1b_b, &conv2a_w, &conv2a_b,
                &conv2b_w, &conv2b_b, &conv3_w,  &conv3_b,  &fc1_w,    &fc1_b,
                &fc2_w,    &fc2_b};
    }
    std::vector<const TensorT<T>*> params() const {
        return {&conv1a_w, &conv1a_b, &conv1b_w, &conv1b_b, &conv2a_w, &conv2a_b,
                &conv2b_w, &conv2b_b, &conv3_w,  &conv3_b,  &fc1_w,    &fc1_b,
                &fc2_w,    &fc2_b};
    }

    int64_t param_count() const {
        int64_t n = 0;
        for (const auto* p : params()) n += p->numel();
        return n;
    }

    // He-normal weights, zero biases, one deterministic stream.
    void init_he(uint64_t seed) {
        Rng rng(rng_stream(seed, "model_init"));
        auto fill = [&](TensorT<T>& w, int fan_in) {
            const double s = std::sqrt(2.0 / fan_in);
            for (T& v : w.data) v = static_cast<T>(rng.normal() * s);
        };
        fill(conv1a_w, in_ch * 9);
        fill(conv1b_w, c1 * 9);
        fill(conv2a_w, c1 * 9);
        fill(conv2b_w, c2 * 9);
        fill(conv3_w, c2 * 9);
        fill(fc1_w, flat_features());
        fill(fc2_w, fc_hidden);
        conv1a_b.zero();
        conv1b_b.zero();
        conv2a_b.zero();
        conv2b_b.zero();
        conv3_b.zero();
        fc1_b.zero();
        fc2_b.zero();
    }
};

using CnnModel = ModelT<float>;

namespace detail {

// 3x3 same-padding im2col: col is (C*9) x (H*W), one output row per
// (channel, kernel offset), zero-filled outside the image.
template <typename T>
void im2col3(const T* x, int C, int H, int W, T* col) {
    const size_t plane = static_cast<size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        const T* src = x + c * plane;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* dst = col + ((static_cast<size_t>(c) * 3 + ky) * 3 + kx) * plane;
                for (int y = 0; y < H; ++y) {
                    T* drow = dst + static_cast<size_t>(y) * W;
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= H) {
                        std::fill(drow, drow + W, T(0));
                        continue;
                    }
                    const T* srow = src + static_cast<size_t>(sy) * W;
                    if (kx == 0) {
                        drow[0] = T(0);
                        std::copy(srow, srow + (W - 1), drow + 1);
                    } else if (kx == 1) {
                        std::copy(srow, srow + W, drow);
                    } else {
                        std::copy(srow + 1, srow + W, drow);
                        drow[W - 1] = T(0);
                    }
                }
            }
        }
    }
}

// Scatter-add inverse of im2col3.
template <typename T>
void col2im3_add(const T* col, int C, int H, int W, T* x) {
    const size_t plane = static_cast<size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        T* dst = x + c * plane;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* src =
                    col + ((static_cast<size_t>(c) * 3 + ky) * 3 + kx) * plane;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= H) continue;
                    const T* srow = src + static_cast<size_t>(y) * W;
                    T* drow = dst + static_cast<size_t>(sy) * W;
                    if (kx == 0) {
                        for (int i = 0; i < W - 1; ++i) drow[i] += srow[i + 1];
                    } else if (kx == 1) {
                        for (int i = 0; i < W; ++i) drow[i] += srow[i];
                    } else {
                        for (int i = 0; i < W - 1; ++i) drow[i + 1] += srow[i];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// out[B,O,H,W] = conv3x3(x[B,C,H,W], W[O,C,3,3]) + b. col is scratch.
template <typename T>
void conv3x3_forward(const TensorT<T>& x, const TensorT<T>& w,
                     const TensorT<T>& b, TensorT<T>& out, std::vector<T>& col) {
    const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int O = w.shape[0];
    require(w.shape[1] == C, "conv: channel mismatch");
    out = TensorT<T>({B, O, H, W});
    const size_t plane = static_cast<size_t>(H) * W;
    const size_t colsz = static_cast<size_t>(C) * 9 * plane;
    if (col.size() < colsz) col.resize(colsz);
    for (int bi = 0; bi < B; ++bi) {
        const T* xb = x.ptr() + static_cast<size_t>(bi) * C * plane;
        T* ob = out.ptr() + static_cast<size_t>(bi) * O * plane;
        detail::im2col3(xb, C, H, W, col.data());
        gemm(false, false, O, static_cast<int>(plane), C * 9, T(1), w.ptr(),
             C * 9, col.data(), static_cast<int>(plane), T(0), ob,
             static_cast<int>(plane));
        for (int o = 0; o < O; ++o) {
            T* row = ob + static_cast<size_t>(o) * plane;
            const T bias = b.data[o];
            for (size_t i = 0; i < plane; ++i) row[i] += bias;
        }
    }
}

// Gradients for conv3x3_forward. dW/db accumulate over the batch; dx is
// zero-initialized here. Pass dx = nullptr to skip input gradients.
template <typename T>
void conv3x3_backward(const TensorT<T>& x, const TensorT<T>& w,
                      const TensorT<T>& dout, TensorT<T>* dx, TensorT<T>& dw,
                      TensorT<T>& db, std::vector<T>& col,
                      std::vector<T>& dcol) {
    const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int O = w.shape[0];
    dw = TensorT<T>(w.shape);
    db = TensorT<T>({O});
    if (dx) *dx = TensorT<T>(x.shape);
    const size_t plane = static_cast<size_t>(H) * W;
    const size_t colsz = static_cast<size_t>(C) * 9 * plane;
    if (col.size() < colsz) col.resize(colsz);
    if (dcol.size() < colsz) dcol.resize(colsz);
    for (int bi = 0; bi < B; ++bi) {
        const T* xb = x.ptr() + static_cast<size_t>(bi) * C * plane;
        const T* dob = dout.ptr() + static_cast<size_t>(bi) * O * plane;
        detail::im2col3(xb, C, H, W, col.data());
        gemm(false, true, O, C * 9, static_cast<int>(plane), T(1), dob,
             static_cast<int>(plane), col.data(), static_cast<int>(plane), T(1),
             dw.ptr(), C * 9);
        for (int o = 0; o < O; ++o) {
            const T* row = dob + static_cast<size_t>(o) * plane;
            T s = T(0);
            for (size_t i = 0; i < plane; ++i) s += row[i];
            db.data[o] += s;
        }
        if (dx) {
            gemm(true, false, C * 9, static_cast<int>(plane), O, T(1), w.ptr(),
                 C * 9, dob, static_cast<int>(plane), T(0), dcol.data(),
                 static_cast<int>(plane));
            detail::col2im3_add(dcol.data(), C, H, W,
                                dx->ptr() + static_cast<size_t>(bi) * C * plane);
        }
    }
}

template <typename T>
void relu_inplace(TensorT<T>& t) {
    for (T& v : t.data)
        if (v < T(0)) v = T(0);
}

// grad *= indicator(activation > 0); uses the post-ReLU activation.
template <typename T>
void relu_backward(const TensorT<T>& act, TensorT<T>& grad) {
    require(act.same_shape(grad), "relu_backward: shape mismatch");
    for (size_t i = 0; i < grad.data.size(); ++i)
        if (act.data[i] <= T(0)) grad.data[i] = T(0);
}

// 2x2 stride-2 max pool; idx stores the flat source offset of each maximum
// (first-scan-order winner on ties).
template <typename T>
void maxpool2_forward(const TensorT<T>& x, TensorT<T>& out,
                      std::vector<int64_t>& idx) {
    const int B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    require(H % 2 == 0 && W % 2 == 0, "maxpool2: odd input");
    const int Ho = H / 2, Wo = W / 2;
    out = TensorT<T>({B, C, Ho, Wo});
    idx.assign(out.data.size(), 0);
    size_t oi = 0;
    for (int bc = 0; bc < B * C; ++bc) {
        const T* plane = x.ptr() + static_cast<size_t>(bc) * H * W;
        const size_t base = static_cast<size_t>(bc) * H * W;
        for (int y = 0; y < Ho; ++y) {
            for (int xo = 0; xo < Wo; ++xo, ++oi) {
                const size_t p00 = static_cast<size_t>(2 * y) * W + 2 * xo;
                size_t best = p00;
                T bv = plane[p00];
                const size_t cand[3] = {p00 + 1, p00 + W, p00 + W + 1};
                for (size_t c : cand) {
                    if (plane[c] > bv) {
                        bv = plane[c];
                        best = c;
                    }
                }
                out.data[oi] = bv;
                idx[oi] = static_cast<int64_t>(base + best);
            }
        }
    }
}

template <typename T>
void maxpool2_backward(const std::vector<int64_t>& idx, const TensorT<T>& dout,
                       const std::vector<int>& in_shape, TensorT<T>& dx) {
    dx = TensorT<T>(in_shape);
    require(idx.size() == dout.data.size(), "maxpool2_backward: stale cache");
    for (size_t i = 0; i < idx.size(); ++i)
        dx.data[static_cast<size_t>(idx[i])] += dout.data[i];
}

// out[B,U] = x[B,F] * W^T + b.
template <typename T>
void fc_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                TensorT<T>& out) {
    const int B = x.shape[0];
    const int F = static_cast<int>(x.numel() / B);
    const int U = w.shape[0];
    require(w.shape[1] == F, "fc: feature mismatch");
    out = TensorT<T>({B, U});
    gemm(false, true, B, U, F, T(1), x.ptr(), F, w.ptr(), F, T(0), out.ptr(), U);
    for (int bi = 0; bi < B; ++bi)
        for (int u = 0; u < U; ++u) out.data[static_cast<size_t>(bi) * U + u] += b.data[u];
}

template <typename T>
void fc_backward(const TensorT<T>& x, const TensorT<T>& w,
                 const TensorT<T>& dout, TensorT<T>& dx, TensorT<T>& dw,
                 TensorT<T>& db) {
    const int B = x.shape[0];
    const int F = static_cast<int>(x.numel() / B);
    const int U = w.shape[0];
    dw = TensorT<T>(w.shape);
    db = TensorT<T>({U});
    dx = TensorT<T>(x.shape);
    gemm(true, false, U, F, B, T(1), dout.ptr(), U, x.ptr(), F, T(0), dw.ptr(),
         F);
    for (int bi = 0; bi < B; ++bi)
        for (int u = 0; u < U; ++u)
            db.data[u] += dout.data[static_cast<size_t>(bi) * U + u];
    gemm(false, false, B, F, U, T(1), dout.ptr(), U, w.ptr(), F, T(0), dx.ptr(),
         F);
}

// Row-wise softmax with max-shift stabilization.
template <typename T>
void softmax_rows(const TensorT<T>& logits, TensorT<T>& probs) {
    const int B = logits.shape[0];
    const int K = logits.shape[1];
    probs = TensorT<T>(logits.shape);
    for (int bi = 0; bi < B; ++bi) {
        const T* in = logits.ptr() + static_cast<size_t>(bi) * K;
        T* out = probs.ptr() + static_cast<size_t>(bi) * K;
        T mx = in[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, in[k]);
        T sum = T(0);
        for (int k = 0; k < K; ++k) {
            out[k] = std::exp(in[k] - mx);
            sum += out[k];
        }
        for (int k = 0; k < K; ++k) out[k] /= sum;
    }
}

// Mean over the batch of w[y] * (-log softmax(logits)[y]). When dlogits is
// given it receives d loss / d logits.
template <typename T>
T weighted_cross_entropy(const TensorT<T>& logits, const std::vector<int>& labels,
                         const std::vector<T>& class_weights,
                         TensorT<T>* dlogits = nullptr) {
    const int B = logits.shape[0];
    const int K = logits.shape[1];
    require(static_cast<int>(labels.size()) == B, "loss: labels/batch mismatch");
    require(static_cast<int>(class_weights.size()) == K, "loss: weights size");
    for (T w : class_weights) require(w >= T(0), "loss: negative class weight");
    TensorT<T> probs;
    softmax_rows(logits, probs);
    T loss = T(0);
    if (dlogits) *dlogits = TensorT<T>(logits.shape);
    for (int bi = 0; bi < B; ++bi) {
        const int y = labels[static_cast<size_t>(bi)];
        require(y >= 0 && y < K, "loss: label out of range");
        const T w = class_weights[static_cast<size_t>(y)];
        const T* p = probs.ptr() + static_cast<size_t>(bi) * K;
        const T py = std::max(p[y], std::numeric_limits<T>::min());
        loss += w * (-std::log(py));
        if (dlogits) {
            T* d = dlogits->ptr() + static_cast<size_t>(bi) * K;
            for (int k = 0; k < K; ++k)
                d[k] = w * (p[k] - (k == y ? T(1) : T(0))) / static_cast<T>(B);
        }
    }
    return loss / static_cast<T>(B);
}

template <typename T>
struct CacheT {
    TensorT<T> x;
    TensorT<T> a1a, a1b, p1, a2a, a2b, p2, a3, f1, f1d, logits;
    std::vector<int64_t> p1_idx, p2_idx;
    TensorT<T> drop_mask;  // 0 or 1/(1-p), empty in eval mode
    bool train_mode = false;
};

// Forward pass over a batch. In train mode a dropout RNG must be supplied;
// cache is required for backward. Returns logits [B, classes].
template <typename T>
TensorT<T> forward(const ModelT<T>& m, const TensorT<T>& x, bool train = false,
                   double dropout_p = 0.0, Rng* dropout_rng = nullptr,
                   CacheT<T>* cache = nullptr) {
    require(x.shape.size() == 4 && x.shape[1] == m.in_ch &&
                x.shape[2] == m.in_hw && x.shape[3] == m.in_hw,
            "forward: input shape contract violated");
    require(!train || dropout_rng != nullptr, "forward: train mode needs rng");
    require(dropout_p >= 0.0 && dropout_p < 1.0, "forward: bad dropout rate");
    const int B = x.shape[0];
    CacheT<T> local;
    CacheT<T>& c = cache ? *cache : local;
    c.train_mode = train;
    std::vector<T> col;

    if (cache) c.x = x;
    conv3x3_forward(x, m.conv1a_w, m.conv1a_b, c.a1a, col);
    relu_inplace(c.a1a);
    conv3x3_forward(c.a1a, m.conv1b_w, m.conv1b_b, c.a1b, col);
    relu_inplace(c.a1b);
    maxpool2_forward(c.a1b, c.p1, c.p1_idx);
    conv3x3_forward(c.p1, m.conv2a_w, m.conv2a_b, c.a2a, col);
    relu_inplace(c.a2a);
    conv3x3_forward(c.a2a, m.conv2b_w, m.conv2b_b, c.a2b, col);
    relu_inplace(c.a2b);
    maxpool2_forward(c.a2b, c.p2, c.p2_idx);
    conv3x3_forward(c.p2, m.conv3_w, m.conv3_b, c.a3, col);
    relu_inplace(c.a3);

    // Flatten is a reshape: a3 memory is already [B, flat].
    TensorT<T> flat;
    flat.shape = {B, m.flat_features()};
    flat.data = c.a3.data;
    fc_forward(flat, m.fc1_w, m.fc1_b, c.f1);
    relu_inplace(c.f1);

    const TensorT<T>* fc2_in = &c.f1;
    if (train) {
        c.drop_mask = TensorT<T>(c.f1.shape);
        const T scale = static_cast<T>(1.0 / (1.0 - dropout_p));
        for (size_t i = 0; i < c.drop_mask.data.size(); ++i)
            c.drop_mask.data[i] = dropout_rng->uniform() < dropout_p ? T(0) : scale;
        c.f1d = TensorT<T>(c.f1.shape);
        for (size_t i = 0; i < c.f1d.data.size(); ++i)
            c.f1d.data[i] = c.f1.data[i] * c.drop_mask.data[i];
        fc2_in = &c.f1d;
    }
    fc_forward(*fc2_in, m.fc2_w, m.fc2_b, c.logits);
    debug_check_finite(c.logits);
    return c.logits;
}

template <typename T>
struct GradsT {
    TensorT<T> conv1a_w, conv1a_b, conv1b_w, conv1b_b;
    TensorT<T> conv2a_w, conv2a_b, conv2b_w, conv2b_b;
    TensorT<T> conv3_w, conv3_b;
    TensorT<T> fc1_w, fc1_b, fc2_w, fc2_b;

    std::vector<TensorT<T>*> params() {
        return {&conv1a_w, &conv1a_b, &conv1b_w, &conv1b_b, &conv2a_w, &conv2a_b,
                &conv2b_w, &conv2b_b, &conv3_w,  &conv3_b,  &fc1_w,    &fc1_b,
                &fc2_w,    &fc2_b};
    }
};

// Analytic gradients of the weighted cross-entropy through the whole net.
// Requires a cache produced by forward(train=true).
template <typename T>
GradsT<T> backward(const ModelT<T>& m, const CacheT<T>& c,
                   const std::vector<int>& labels,
                   const std::vector<T>& class_weights, T* loss_out = nullptr) {
    require(c.train_mode, "backward: cache must come from a train-mode forward");
    require(c.logits.shape.size() == 2 &&
                c.logits.shape[0] == static_cast<int>(labels.size()),
            "backward: stale cache");
    const int B = c.logits.shape[0];
    GradsT<T> g;
    std::vector<T> col, dcol;

    TensorT<T> dlogits;
    const T loss = weighted_cross_entropy(c.logits, labels, class_weights, &dlogits);
    if (loss_out) *loss_out = loss;

    TensorT<T> df1d;
    fc_backward(c.f1d, m.fc2_w, dlogits, df1d, g.fc2_w, g.fc2_b);
    // Dropout backward: same mask, same scale.
    TensorT<T> df1 = df1d;
    for (size_t i = 0; i < df1.data.size(); ++i)
        df1.data[i] *= c.drop_mask.data[i];
    relu_backward(c.f1, df1);

    TensorT<T> flat;
    flat.shape = {B, m.flat_features()};
    flat.data = c.a3.data;
    TensorT<T> dflat;
    fc_backward(flat, m.fc1_w, df1, dflat, g.fc1_w, g.fc1_b);

    TensorT<T> da3;
    da3.shape = c.a3.shape;
    da3.data = std::move(dflat.data);
    relu_backward(c.a3, da3);

    TensorT<T> dp2;
    conv3x3_backward(c.p2, m.conv3_w, da3, &dp2, g.conv3_w, g.conv3_b, col, dcol);

    TensorT<T> da2b;
    maxpool2_backward(c.p2_idx, dp2, c.a2b.shape, da2b);
    relu_backward(c.a2b, da2b);
    TensorT<T> da2a;
    conv3x3_backward(c.a2a, m.conv2b_w, da2b, &da2a, g.conv2b_w, g.conv2b_b, col,
                     dcol);
    relu_backward(c.a2a, da2a);
    TensorT<T> dp1;
    conv3x3_backward(c.p1, m.conv2a_w, da2a, &dp1, g.conv2a_w, g.conv2a_b, col,
                     dcol);

    TensorT<T> da1b;
    maxpool2_backward(c.p1_idx, dp1, c.a1b.shape, da1b);
    relu_backward(c.a1b, da1b);
    TensorT<T> da1a;
    conv3x3_backward(c.a1a, m.conv1b_w, da1b, &da1a, g.conv1b_w, g.conv1b_b, col,
                     dcol);
    relu_backward(c.a1a, da1a);
    conv3x3_backward(c.x, m.conv1a_w, da1a, static_cast<TensorT<T>*>(nullptr),
                     g.conv1a_w, g.conv1a_b, col, dcol);
    return g;
}

// Architecture fingerprint for the weight-file sidecar.
template <typename T>
std::string model_arch_string(const ModelT<T>& m) {
    return "in" + std::to_string(m.in_ch) + "x" + std::to_string(m.in_hw) + "x" +
           std::to_string(m.in_hw) + ";conv" + std::to_string(m.c1) + ",conv" +
           std::to_string(m.c1) + ",pool,conv" + std::to_string(m.c2) + ",conv" +
           std::to_string(m.c2) + ",pool,conv" + std::to_string(m.c3) + ";fc" +
           std::to_string(m.fc_hidden) + ";out" + std::to_string(m.classes);
}

template <typename T>
uint64_t model_arch_hash(const ModelT<T>& m) {
    return fnv1a64(model_arch_string(m));
}

// Weight-file metadata sidecar contents.
struct ModelMeta {
    uint64_t arch_hash = 0;
    std::string arch;
    int best_epoch = -1;
    double val_accuracy = 0.0;
    std::string train_config_json = "{}";
};

// Binary weight file: magic "ASHECNN1", then raw little-endian float32 in
// canonical parameter order. A JSON sidecar is written next to it.
void save_model(const std::string& path, const CnnModel& m, const ModelMeta& meta);
CnnModel load_model(const std::string& path, ModelMeta* meta = nullptr);

}  // namespace ashe
