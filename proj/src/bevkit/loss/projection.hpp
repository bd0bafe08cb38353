#pragma once

#include "bevkit/core/rng.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bevkit::loss {

// Two-layer embedding head: tanh(W1 x + b1) followed by an affine map to
// the embedding. The teacher-side copy stays frozen during pretraining.
template <class T>
struct ProjectionHeadT {
    int in_dim = 0;
    int hidden_dim = 0;
    int out_dim = 0;
    bool frozen = false;
    std::vector<T> w1, b1, w2, b2;

    size_t param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

template <class T>
ProjectionHeadT<T> make_projection_head(int in_dim, int hidden_dim, int out_dim,
                                        uint64_t seed) {
    ProjectionHeadT<T> head;
    head.in_dim = in_dim;
    head.hidden_dim = hidden_dim;
    head.out_dim = out_dim;
    head.w1.resize(static_cast<size_t>(hidden_dim) * in_dim);
    head.b1.resize(hidden_dim);
    head.w2.resize(static_cast<size_t>(out_dim) * hidden_dim);
    head.b2.resize(out_dim);
    Rng rng(hash_combine(seed, 0x9807EADull));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (T& w : head.w1) w = static_cast<T>(rng.uniform(-s1, s1));
    for (T& w : head.b1) w = static_cast<T>(rng.uniform(-s1, s1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (T& w : head.w2) w = static_cast<T>(rng.uniform(-s2, s2));
    for (T& w : head.b2) w = static_cast<T>(rng.uniform(-s2, s2));
    return head;
}

template <class To, class From>
ProjectionHeadT<To> convert_head(const ProjectionHeadT<From>& in) {
    ProjectionHeadT<To> out;
    out.in_dim = in.in_dim;
    out.hidden_dim = in.hidden_dim;
    out.out_dim = in.out_dim;
    out.frozen = in.frozen;
    auto conv = [](const std::vector<From>& src, std::vector<To>& dst) {
        dst.resize(src.size());
        for (size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<To>(src[k]);
    };
    conv(in.w1, out.w1);
    conv(in.b1, out.b1);
    conv(in.w2, out.w2);
    conv(in.b2, out.b2);
    return out;
}

// Forward pass keeping the hidden activation for the backward pass.
template <class T>
struct ProjectionTrace {
    std::vector<T> hidden;
    std::vector<T> out;
};

template <class T>
ProjectionTrace<T> projection_forward(const ProjectionHeadT<T>& head, const std::vector<T>& x) {
    if (static_cast<int>(x.size()) != head.in_dim)
        throw std::invalid_argument("projection_forward: input size mismatch");
    ProjectionTrace<T> trace;
    trace.hidden.resize(head.hidden_dim);
    trace.out.resize(head.out_dim);
    for (int h = 0; h < head.hidden_dim; ++h) {
        double acc = head.b1[h];
        const T* row = head.w1.data() + static_cast<size_t>(h) * head.in_dim;
        for (int k = 0; k < head.in_dim; ++k) acc += static_cast<double>(row[k]) * x[k];
        trace.hidden[h] = static_cast<T>(std::tanh(acc));
    }
    for (int e = 0; e < head.out_dim; ++e) {
        double acc = head.b2[e];
        const T* row = head.w2.data() + static_cast<size_t>(e) * head.hidden_dim;
        for (int h = 0; h < head.hidden_dim; ++h)
            acc += static_cast<double>(row[h]) * trace.hidden[h];
        trace.out[e] = static_cast<T>(acc);
    }
    return trace;
}

// Gradients of the head parameters and of the input, given d(loss)/d(out).
template <class T>
struct ProjectionGrads {
    std::vector<T> w1, b1, w2, b2;

    void resize_like(const ProjectionHeadT<T>& head) {
        w1.assign(head.w1.size(), T(0));
        b1.assign(head.b1.size(), T(0));
        w2.assign(head.w2.size(), T(0));
        b2.assign(head.b2.size(), T(0));
    }
};

template <class T>
void projection_backward(const ProjectionHeadT<T>& head, const std::vector<T>& x,
                         const ProjectionTrace<T>& trace, const std::vector<T>& grad_out,
                         ProjectionGrads<T>* grad_params, std::vector<T>* grad_x) {
    std::vector<double> grad_hidden(head.hidden_dim, 0.0);
    for (int e = 0; e < head.out_dim; ++e) {
        const double go = grad_out[e];
        if (grad_params) {
            grad_params->b2[e] += static_cast<T>(go);
            T* wrow = grad_params->w2.data() + static_cast<size_t>(e) * head.hidden_dim;
            for (int h = 0; h < head.hidden_dim; ++h)
                wrow[h] += static_cast<T>(go * trace.hidden[h]);
        }
        const T* row = head.w2.data() + static_cast<size_t>(e) * head.hidden_dim;
        for (int h = 0; h < head.hidden_dim; ++h) grad_hidden[h] += go * row[h];
    }
    if (grad_x) grad_x->assign(head.in_dim, T(0));
    for (int h = 0; h < head.hidden_dim; ++h) {
        const double th = trace.hidden[h];
        const double gp = grad_hidden[h] * (1.0 - th * th);
        if (grad_params) {
            grad_params->b1[h] += static_cast<T>(gp);
            T* wrow = grad_params->w1.data() + static_cast<size_t>(h) * head.in_dim;
            for (int k = 0; k < head.in_dim; ++k) wrow[k] += static_cast<T>(gp * x[k]);
        }
        if (grad_x) {
            const T* row = head.w1.data() + static_cast<size_t>(h) * head.in_dim;
            for (int k = 0; k < head.in_dim; ++k)
                (*grad_x)[k] += static_cast<T>(gp * row[k]);
        }
    }
}

} // namespace bevkit::loss
