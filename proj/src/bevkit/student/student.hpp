#pragma once

#include "bevkit/core/rng.hpp"
#include "bevkit/core/tensor.hpp"
#include "bevkit/loss/projection.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace bevkit::student {

// Camera-side view transform: a per-cell affine map from observation
// channels to feature channels, plus one residual 3x3 spatial mixing
// convolution. Small by design; capacity lives in the config.
template <class T>
struct ViewParamsT {
    int obs_channels = 0;
    int channels = 0;
    std::vector<T> affine_w; // [D * C]
    std::vector<T> affine_b; // [D]
    std::vector<T> mix_w;    // [D * D * 3 * 3]

    size_t param_count() const { return affine_w.size() + affine_b.size() + mix_w.size(); }
};

// Per-cell 1x1 linear head producing (objectness logit, dx, dy, log w,
// log l, sin yaw, cos yaw). Shared shape between teacher and student so
// parameters can be inherited.
inline constexpr int kHeadOutputs = 7;

template <class T>
struct HeadParamsT {
    int channels = 0;
    std::vector<T> w; // [7 * D]
    std::vector<T> b; // [7]

    size_t param_count() const { return w.size() + b.size(); }
};

template <class T>
ViewParamsT<T> make_view_params(int obs_channels, int channels, uint64_t seed) {
    ViewParamsT<T> p;
    p.obs_channels = obs_channels;
    p.channels = channels;
    p.affine_w.resize(static_cast<size_t>(channels) * obs_channels);
    p.affine_b.resize(channels);
    p.mix_w.resize(static_cast<size_t>(channels) * channels * 9);
    Rng rng(hash_combine(seed, 0x51E3Full));
    const double s_affine = 1.0 / std::sqrt(static_cast<double>(obs_channels));
    for (T& w : p.affine_w) w = static_cast<T>(rng.uniform(-s_affine, s_affine));
    for (T& w : p.affine_b) w = static_cast<T>(rng.uniform(-s_affine, s_affine));
    const double s_mix = 1.0 / std::sqrt(static_cast<double>(channels) * 9.0);
    for (T& w : p.mix_w) w = static_cast<T>(rng.uniform(-s_mix, s_mix));
    return p;
}

template <class T>
HeadParamsT<T> make_head_params(int channels, uint64_t seed) {
    HeadParamsT<T> p;
    p.channels = channels;
    p.w.resize(static_cast<size_t>(kHeadOutputs) * channels);
    p.b.resize(kHeadOutputs);
    Rng rng(hash_combine(seed, 0x6EADull));
    const double s = 1.0 / std::sqrt(static_cast<double>(channels));
    for (T& w : p.w) w = static_cast<T>(rng.uniform(-s, s));
    for (T& w : p.b) w = static_cast<T>(rng.uniform(-s, s));
    return p;
}

template <class To, class From>
ViewParamsT<To> convert_view(const ViewParamsT<From>& in) {
    ViewParamsT<To> out;
    out.obs_channels = in.obs_channels;
    out.channels = in.channels;
    out.affine_w.assign(in.affine_w.begin(), in.affine_w.end());
    out.affine_b.assign(in.affine_b.begin(), in.affine_b.end());
    out.mix_w.assign(in.mix_w.begin(), in.mix_w.end());
    return out;
}

template <class To, class From>
HeadParamsT<To> convert_head_params(const HeadParamsT<From>& in) {
    HeadParamsT<To> out;
    out.channels = in.channels;
    out.w.assign(in.w.begin(), in.w.end());
    out.b.assign(in.b.begin(), in.b.end());
    return out;
}

namespace detail {

// Plane helpers over X*Y buffers; the shifted variants cover the valid
// intersection so out-of-grid taps read zero.
template <class T>
void plane_axpy(T* dst, const T* src, size_t n, T scale) {
    for (size_t k = 0; k < n; ++k) dst[k] += scale * src[k];
}

// dst[i][j] += scale * src[i + di][j + dj]
template <class T>
void plane_axpy_shifted(T* dst, const T* src, int X, int Y, int di, int dj, T scale) {
    const int i_lo = std::max(0, -di);
    const int i_hi = std::min(X, X - di);
    const int j_lo = std::max(0, -dj);
    const int j_hi = std::min(Y, Y - dj);
    for (int i = i_lo; i < i_hi; ++i) {
        T* drow = dst + static_cast<size_t>(i) * Y;
        const T* srow = src + static_cast<size_t>(i + di) * Y + dj;
        for (int j = j_lo; j < j_hi; ++j) drow[j] += scale * srow[j];
    }
}

// sum over the valid region of a[i][j] * b[i + di][j + dj]
template <class T>
double plane_dot_shifted(const T* a, const T* b, int X, int Y, int di, int dj) {
    const int i_lo = std::max(0, -di);
    const int i_hi = std::min(X, X - di);
    const int j_lo = std::max(0, -dj);
    const int j_hi = std::min(Y, Y - dj);
    double acc = 0.0;
    for (int i = i_lo; i < i_hi; ++i) {
        const T* arow = a + static_cast<size_t>(i) * Y;
        const T* brow = b + static_cast<size_t>(i + di) * Y + dj;
        for (int j = j_lo; j < j_hi; ++j)
            acc += static_cast<double>(arow[j]) * brow[j];
    }
    return acc;
}

} // namespace detail

// Forward pass: S = pre + mix3x3(pre), pre = affine(obs) per cell. The
// trace keeps `pre` for the backward pass.
template <class T>
struct ViewTrace {
    FeatureMapT<T> pre;
    FeatureMapT<T> out;
};

template <class T>
ViewTrace<T> view_forward(const ViewParamsT<T>& params, const FeatureMapT<T>& obs) {
    if (obs.channels != params.obs_channels)
        throw std::invalid_argument("view_forward: observation channel mismatch");
    const int C = params.obs_channels;
    const int D = params.channels;
    const int X = obs.spec.cells_x;
    const int Y = obs.spec.cells_y;
    const size_t cells = obs.cell_count();

    ViewTrace<T> trace;
    trace.pre = FeatureMapT<T>(obs.spec, D);
    for (int d = 0; d < D; ++d) {
        T* dst = trace.pre.data.data() + static_cast<size_t>(d) * cells;
        const T bias = params.affine_b[d];
        for (size_t k = 0; k < cells; ++k) dst[k] = bias;
        for (int c = 0; c < C; ++c)
            detail::plane_axpy(dst, obs.data.data() + static_cast<size_t>(c) * cells, cells,
                               params.affine_w[static_cast<size_t>(d) * C + c]);
    }

    trace.out = trace.pre;
    for (int d = 0; d < D; ++d) {
        T* dst = trace.out.data.data() + static_cast<size_t>(d) * cells;
        for (int dp = 0; dp < D; ++dp) {
            const T* src = trace.pre.data.data() + static_cast<size_t>(dp) * cells;
            const T* k9 = params.mix_w.data() + (static_cast<size_t>(d) * D + dp) * 9;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    detail::plane_axpy_shifted(dst, src, X, Y, di, dj,
                                               k9[(di + 1) * 3 + (dj + 1)]);
        }
    }
    return trace;
}

template <class T>
struct ViewGrads {
    std::vector<T> affine_w, affine_b, mix_w;

    void resize_like(const ViewParamsT<T>& p) {
        affine_w.assign(p.affine_w.size(), T(0));
        affine_b.assign(p.affine_b.size(), T(0));
        mix_w.assign(p.mix_w.size(), T(0));
    }
};

template <class T>
void view_backward(const ViewParamsT<T>& params, const FeatureMapT<T>& obs,
                   const ViewTrace<T>& trace, const FeatureMapT<T>& grad_out,
                   ViewGrads<T>& grads) {
    const int C = params.obs_channels;
    const int D = params.channels;
    const int X = obs.spec.cells_x;
    const int Y = obs.spec.cells_y;
    const size_t cells = obs.cell_count();

    // Residual path: grad_pre starts as grad_out, then gathers the
    // convolution adjoint.
    FeatureMapT<T> grad_pre = grad_out;
    for (int d = 0; d < D; ++d) {
        const T* go = grad_out.data.data() + static_cast<size_t>(d) * cells;
        for (int dp = 0; dp < D; ++dp) {
            const T* pre = trace.pre.data.data() + static_cast<size_t>(dp) * cells;
            const T* k9 = params.mix_w.data() + (static_cast<size_t>(d) * D + dp) * 9;
            T* g9 = grads.mix_w.data() + (static_cast<size_t>(d) * D + dp) * 9;
            T* gpre = grad_pre.data.data() + static_cast<size_t>(dp) * cells;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const int tap = (di + 1) * 3 + (dj + 1);
                    g9[tap] += static_cast<T>(
                        detail::plane_dot_shifted(go, pre, X, Y, di, dj));
                    // Adjoint scatter is the opposite shift.
                    detail::plane_axpy_shifted(gpre, go, X, Y, -di, -dj, k9[tap]);
                }
            }
        }
    }

    for (int d = 0; d < D; ++d) {
        const T* gp = grad_pre.data.data() + static_cast<size_t>(d) * cells;
        double gb = 0.0;
        for (size_t k = 0; k < cells; ++k) gb += gp[k];
        grads.affine_b[d] += static_cast<T>(gb);
        for (int c = 0; c < C; ++c)
            grads.affine_w[static_cast<size_t>(d) * C + c] += static_cast<T>(
                detail::plane_dot_shifted(gp, obs.data.data() + static_cast<size_t>(c) * cells,
                                          X, Y, 0, 0));
    }
}

// Per-cell head predictions, kHeadOutputs x X x Y.
template <class T>
FeatureMapT<T> head_forward(const HeadParamsT<T>& head, const FeatureMapT<T>& features) {
    if (features.channels != head.channels)
        throw std::invalid_argument("head_forward: channel mismatch");
    const int D = head.channels;
    const size_t cells = features.cell_count();
    FeatureMapT<T> pred(features.spec, kHeadOutputs);
    for (int k = 0; k < kHeadOutputs; ++k) {
        const T* wrow = head.w.data() + static_cast<size_t>(k) * D;
        T* dst = pred.data.data() + static_cast<size_t>(k) * cells;
        for (size_t cell = 0; cell < cells; ++cell) {
            double acc = head.b[k];
            for (int d = 0; d < D; ++d)
                acc += static_cast<double>(wrow[d]) *
                       features.data[static_cast<size_t>(d) * cells + cell];
            dst[cell] = static_cast<T>(acc);
        }
    }
    return pred;
}

template <class T>
struct HeadGrads {
    std::vector<T> w, b;

    void resize_like(const HeadParamsT<T>& h) {
        w.assign(h.w.size(), T(0));
        b.assign(h.b.size(), T(0));
    }
};

template <class T>
void head_backward(const HeadParamsT<T>& head, const FeatureMapT<T>& features,
                   const FeatureMapT<T>& grad_pred, HeadGrads<T>* grad_head,
                   FeatureMapT<T>* grad_features) {
    const int D = head.channels;
    const size_t cells = features.cell_count();
    for (int k = 0; k < kHeadOutputs; ++k) {
        const T* gp = grad_pred.data.data() + static_cast<size_t>(k) * cells;
        const T* wrow = head.w.data() + static_cast<size_t>(k) * D;
        double gb = 0.0;
        for (size_t cell = 0; cell < cells; ++cell) {
            const double g = gp[cell];
            if (g == 0.0) continue;
            gb += g;
            for (int d = 0; d < D; ++d) {
                if (grad_head)
                    grad_head->w[static_cast<size_t>(k) * D + d] += static_cast<T>(
                        g * features.data[static_cast<size_t>(d) * cells + cell]);
                if (grad_features)
                    grad_features->data[static_cast<size_t>(d) * cells + cell] +=
                        static_cast<T>(g * wrow[d]);
            }
        }
        if (grad_head) grad_head->b[k] += static_cast<T>(gb);
    }
}

// Full student bundle used by the trainer: view transform, detection head
// and the two projection heads (the teacher-side one frozen).
struct StudentModel {
    ViewParamsT<float> view;
    HeadParamsT<float> head;
    loss::ProjectionHeadT<float> proj_student;
    loss::ProjectionHeadT<float> proj_teacher;
    uint64_t init_seed = 0;
};

StudentModel make_student(int obs_channels, int channels, int roi_size, int proj_hidden,
                          int embed_dim, uint64_t seed);

// Copies the teacher head parameters into the student (deep copy).
void inherit_head(StudentModel& model, const HeadParamsT<float>& teacher_head);

} // namespace bevkit::student
