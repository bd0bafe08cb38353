#pragma once

#include "bevkit/core/tensor.hpp"
#include "bevkit/loss/projection.hpp"
#include "bevkit/loss/roi_align.hpp"
#include "bevkit/synth/scene.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace bevkit::loss {

enum class RecVariant { L2, L1, KL };

RecVariant rec_variant_from_string(const std::string& name);
std::string rec_variant_to_string(RecVariant variant);

inline double smooth_l1(double d, double beta) {
    const double a = std::abs(d);
    return a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
}

inline double smooth_l1_grad(double d, double beta) {
    if (std::abs(d) < beta) return d / beta;
    return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
}

template <class T>
struct RecLossResult {
    double loss = 0.0;
    FeatureMapT<T> grad_student;
};

// Mask-weighted reconstruction loss, normalized by the cell count. The L2
// variant sums squared channel differences per cell; L1 uses absolute
// differences (subgradient zero at ties); KL applies a per-cell channel
// softmax to both maps and measures KL(teacher || student).
template <class T>
RecLossResult<T> reconstruction_loss(const FeatureMapT<T>& student,
                                     const FeatureMapT<T>& teacher, const MaskT<T>& weights,
                                     RecVariant variant) {
    require_same_shape(student, teacher, "reconstruction_loss");
    require_same_grid(student, weights, "reconstruction_loss");
    for (T w : weights.data)
        if (w < T(0)) throw std::invalid_argument("reconstruction_loss: negative mask weight");

    const int D = student.channels;
    const size_t cells = student.cell_count();
    const double inv_cells = 1.0 / static_cast<double>(cells);
    RecLossResult<T> result;
    result.grad_student = FeatureMapT<T>(student.spec, D);

    double loss = 0.0;
    if (variant == RecVariant::KL) {
        std::vector<double> p(D), q(D);
        for (size_t cell = 0; cell < cells; ++cell) {
            const double r = weights.data[cell];
            // Per-cell channel softmax of both maps, max-shifted.
            double max_t = -std::numeric_limits<double>::infinity();
            double max_s = -std::numeric_limits<double>::infinity();
            for (int d = 0; d < D; ++d) {
                max_t = std::max(max_t, static_cast<double>(teacher.data[d * cells + cell]));
                max_s = std::max(max_s, static_cast<double>(student.data[d * cells + cell]));
            }
            double zt = 0.0, zs = 0.0;
            for (int d = 0; d < D; ++d) {
                p[d] = std::exp(static_cast<double>(teacher.data[d * cells + cell]) - max_t);
                q[d] = std::exp(static_cast<double>(student.data[d * cells + cell]) - max_s);
                zt += p[d];
                zs += q[d];
            }
            double cell_loss = 0.0;
            for (int d = 0; d < D; ++d) {
                p[d] /= zt;
                q[d] /= zs;
                cell_loss += p[d] * (std::log(p[d]) - std::log(q[d]));
            }
            loss += r * cell_loss;
            if (r != 0.0) {
                for (int d = 0; d < D; ++d)
                    result.grad_student.data[d * cells + cell] =
                        static_cast<T>(r * (q[d] - p[d]) * inv_cells);
            }
        }
    } else {
        for (size_t cell = 0; cell < cells; ++cell) {
            const double r = weights.data[cell];
            double cell_loss = 0.0;
            for (int d = 0; d < D; ++d) {
                const double diff = static_cast<double>(teacher.data[d * cells + cell]) -
                                    static_cast<double>(student.data[d * cells + cell]);
                if (variant == RecVariant::L2) {
                    cell_loss += diff * diff;
                    result.grad_student.data[d * cells + cell] =
                        static_cast<T>(-2.0 * r * diff * inv_cells);
                } else {
                    cell_loss += std::abs(diff);
                    const double sign = diff > 0.0 ? -1.0 : (diff < 0.0 ? 1.0 : 0.0);
                    result.grad_student.data[d * cells + cell] =
                        static_cast<T>(r * sign * inv_cells);
                }
            }
            loss += r * cell_loss;
        }
    }
    result.loss = loss * inv_cells;
    return result;
}

template <class T>
struct CorrLossResult {
    double loss = 0.0;
    FeatureMapT<T> grad_student;
    ProjectionGrads<T> grad_proj1;
    int boxes_used = 0;
    int boxes_skipped = 0;
};

// Instance-level geometry correlation: both maps are resampled over each
// box footprint, embedded (trainable head for the student, frozen head for
// the teacher) and compared with SmoothL1, mean over embedding dimensions
// and boxes. Gradients flow into the student map and the trainable head
// only.
template <class T>
CorrLossResult<T> correlation_loss(const FeatureMapT<T>& student, const FeatureMapT<T>& teacher,
                                   const std::vector<synth::Box3D>& boxes,
                                   const ProjectionHeadT<T>& proj_student,
                                   const ProjectionHeadT<T>& proj_teacher, int roi_size,
                                   double beta) {
    require_same_shape(student, teacher, "correlation_loss");
    CorrLossResult<T> result;
    result.grad_student = FeatureMapT<T>(student.spec, student.channels);
    result.grad_proj1.resize_like(proj_student);

    struct BoxTrace {
        Footprint2D fp;
        std::vector<T> x_s;
        ProjectionTrace<T> trace_s;
        std::vector<T> e_t;
    };
    std::vector<BoxTrace> traces;
    traces.reserve(boxes.size());

    for (const synth::Box3D& box : boxes) {
        const auto fp = axis_aligned_footprint(box, student.spec);
        if (!fp) {
            ++result.boxes_skipped;
            continue;
        }
        BoxTrace bt;
        bt.fp = *fp;
        const RoiPatchT<T> patch_s = roi_align(student, *fp, roi_size);
        const RoiPatchT<T> patch_t = roi_align(teacher, *fp, roi_size);
        bt.x_s = patch_s.data;
        bt.trace_s = projection_forward(proj_student, bt.x_s);
        bt.e_t = projection_forward(proj_teacher, patch_t.data).out;
        traces.push_back(std::move(bt));
    }
    result.boxes_used = static_cast<int>(traces.size());
    if (traces.empty()) return result;

    const int E = proj_student.out_dim;
    const double inv = 1.0 / (static_cast<double>(traces.size()) * E);
    double loss = 0.0;
    for (BoxTrace& bt : traces) {
        std::vector<T> grad_e(E);
        for (int e = 0; e < E; ++e) {
            const double d = static_cast<double>(bt.trace_s.out[e]) - bt.e_t[e];
            loss += smooth_l1(d, beta);
            grad_e[e] = static_cast<T>(smooth_l1_grad(d, beta) * inv);
        }
        std::vector<T> grad_x;
        projection_backward(proj_student, bt.x_s, bt.trace_s, grad_e, &result.grad_proj1,
                            &grad_x);
        RoiPatchT<T> grad_patch;
        grad_patch.size = roi_size;
        grad_patch.channels = student.channels;
        grad_patch.data = std::move(grad_x);
        roi_align_backward(grad_patch, bt.fp, result.grad_student);
    }
    result.loss = loss * inv;
    return result;
}

struct PretrainLossConfig {
    double lambda_rec = 1.0;
    double lambda_corr = 1.0;
    RecVariant variant = RecVariant::L2;
    int roi_size = 7;
    double smooth_l1_beta = 1.0;
    bool standardize_student = false;
    double standardize_eps = 1e-5;
};

template <class T>
struct LossReport {
    double l_rec = 0.0;
    double l_corr = 0.0;
    double l_total = 0.0;
    double lambda_rec = 0.0;
    double lambda_corr = 0.0;
    FeatureMapT<T> grad_student;
    ProjectionGrads<T> grad_proj1;
    int boxes_used = 0;
    int boxes_skipped = 0;
};

// Frame-wise per-channel standardization of the student map (ablation
// path), with the usual normalization backward.
template <class T>
struct StandardizeTrace {
    FeatureMapT<T> out;
    std::vector<double> inv_sd;
};

template <class T>
StandardizeTrace<T> standardize_forward(const FeatureMapT<T>& map, double eps) {
    StandardizeTrace<T> trace;
    trace.out = FeatureMapT<T>(map.spec, map.channels);
    trace.inv_sd.resize(map.channels);
    const size_t cells = map.cell_count();
    for (int d = 0; d < map.channels; ++d) {
        const T* src = map.data.data() + static_cast<size_t>(d) * cells;
        double mean = 0.0;
        for (size_t k = 0; k < cells; ++k) mean += src[k];
        mean /= static_cast<double>(cells);
        double var = 0.0;
        for (size_t k = 0; k < cells; ++k) {
            const double c = src[k] - mean;
            var += c * c;
        }
        var /= static_cast<double>(cells);
        const double inv_sd = 1.0 / std::sqrt(var + eps);
        trace.inv_sd[d] = inv_sd;
        T* dst = trace.out.data.data() + static_cast<size_t>(d) * cells;
        for (size_t k = 0; k < cells; ++k)
            dst[k] = static_cast<T>((src[k] - mean) * inv_sd);
    }
    return trace;
}

template <class T>
FeatureMapT<T> standardize_backward(const StandardizeTrace<T>& trace,
                                    const FeatureMapT<T>& grad_out) {
    FeatureMapT<T> grad_in(grad_out.spec, grad_out.channels);
    const size_t cells = grad_out.cell_count();
    for (int d = 0; d < grad_out.channels; ++d) {
        const T* gz = grad_out.data.data() + static_cast<size_t>(d) * cells;
        const T* z = trace.out.data.data() + static_cast<size_t>(d) * cells;
        double mean_g = 0.0, mean_gz = 0.0;
        for (size_t k = 0; k < cells; ++k) {
            mean_g += gz[k];
            mean_gz += static_cast<double>(gz[k]) * z[k];
        }
        mean_g /= static_cast<double>(cells);
        mean_gz /= static_cast<double>(cells);
        T* gi = grad_in.data.data() + static_cast<size_t>(d) * cells;
        for (size_t k = 0; k < cells; ++k)
            gi[k] = static_cast<T>(trace.inv_sd[d] * (gz[k] - mean_g - z[k] * mean_gz));
    }
    return grad_in;
}

// Combined objective. l_total is computed as the exact weighted sum; the
// correlation term is skipped entirely when its weight is zero.
template <class T>
LossReport<T> pretrain_loss(const FeatureMapT<T>& student, const FeatureMapT<T>& teacher,
                            const std::vector<synth::Box3D>& boxes, const MaskT<T>& weights,
                            const ProjectionHeadT<T>& proj_student,
                            const ProjectionHeadT<T>& proj_teacher,
                            const PretrainLossConfig& cfg) {
    if (cfg.lambda_rec < 0.0 || cfg.lambda_corr < 0.0)
        throw std::invalid_argument("pretrain_loss: loss weights must be non-negative");
    LossReport<T> report;
    report.lambda_rec = cfg.lambda_rec;
    report.lambda_corr = cfg.lambda_corr;
    report.grad_student = FeatureMapT<T>(student.spec, student.channels);
    report.grad_proj1.resize_like(proj_student);

    const FeatureMapT<T>* eval_map = &student;
    StandardizeTrace<T> std_trace;
    if (cfg.standardize_student) {
        std_trace = standardize_forward(student, cfg.standardize_eps);
        eval_map = &std_trace.out;
    }

    FeatureMapT<T> grad_eval(student.spec, student.channels);
    if (cfg.lambda_rec != 0.0) {
        RecLossResult<T> rec = reconstruction_loss(*eval_map, teacher, weights, cfg.variant);
        report.l_rec = rec.loss;
        for (size_t k = 0; k < grad_eval.data.size(); ++k)
            grad_eval.data[k] += static_cast<T>(cfg.lambda_rec) * rec.grad_student.data[k];
    } else {
        RecLossResult<T> rec = reconstruction_loss(*eval_map, teacher, weights, cfg.variant);
        report.l_rec = rec.loss;
    }
    if (cfg.lambda_corr != 0.0) {
        CorrLossResult<T> corr = correlation_loss(*eval_map, teacher, boxes, proj_student,
                                                  proj_teacher, cfg.roi_size,
                                                  cfg.smooth_l1_beta);
        report.l_corr = corr.loss;
        report.boxes_used = corr.boxes_used;
        report.boxes_skipped = corr.boxes_skipped;
        for (size_t k = 0; k < grad_eval.data.size(); ++k)
            grad_eval.data[k] += static_cast<T>(cfg.lambda_corr) * corr.grad_student.data[k];
        auto axpy = [&](std::vector<T>& dst, const std::vector<T>& src) {
            for (size_t k = 0; k < dst.size(); ++k)
                dst[k] += static_cast<T>(cfg.lambda_corr) * src[k];
        };
        axpy(report.grad_proj1.w1, corr.grad_proj1.w1);
        axpy(report.grad_proj1.b1, corr.grad_proj1.b1);
        axpy(report.grad_proj1.w2, corr.grad_proj1.w2);
        axpy(report.grad_proj1.b2, corr.grad_proj1.b2);
    }
    report.l_total = cfg.lambda_rec * report.l_rec + cfg.lambda_corr * report.l_corr;

    if (cfg.standardize_student)
        report.grad_student = standardize_backward(std_trace, grad_eval);
    else
        report.grad_student = std::move(grad_eval);
    return report;
}

} // namespace bevkit::loss
