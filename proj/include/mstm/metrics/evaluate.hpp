#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mstm/field/frame.hpp"
#include "mstm/field/norm.hpp"
#include "mstm/metrics/metrics.hpp"

namespace mstm::metrics {

// Evaluation conventions: MSE, RMSE, SSIM, masked RMSE and R^2 are computed
// on normalized fields (SSIM dynamic range L = 1); the material masks, soft
// IoU, mass conservation, and the QoI series use raw physical values.

struct FieldRow {
    std::size_t sample, timestep, field;
    double mse, rmse, ssim;
    double masked_rmse = 0.0;
    std::optional<double> r2;
    bool has_mask = false;
};

struct FrameRow {
    std::size_t sample, timestep;
    double soft_iou, cm, hard_iou;
    std::size_t mask_truth_cells, mask_pred_cells;
};

struct QoiSeriesRow {
    std::size_t sample, timestep;
    std::size_t field;  // density, pressure, or temperature
    QoiRow qoi;
    std::optional<double> rel_rmse;  // masked RMSE / |masked truth mean|
};

struct EvaluationReport {
    std::size_t window = 5;
    std::vector<FieldRow> field_rows;
    std::vector<FrameRow> frame_rows;
    std::vector<QoiSeriesRow> qoi_rows;
    std::map<std::string, Aggregate> aggregates;
    // per-timestep curves (index 0 = first predicted frame)
    std::map<std::string, std::vector<Aggregate>> curves;
};

namespace evaluate_detail {

inline const std::size_t kQoiFields[3] = {static_cast<std::size_t>(Field::temperature),
                                          static_cast<std::size_t>(Field::density),
                                          static_cast<std::size_t>(Field::pressure)};

}  // namespace evaluate_detail

/// Checks that prediction containers line up with their ground truth.
/// Throws with the offending ids when sequence identity disagrees.
inline void check_alignment(std::span<const Sequence> truth, std::span<const Sequence> pred) {
    if (truth.size() != pred.size())
        throw std::invalid_argument("sequence count mismatch: " + std::to_string(truth.size()) +
                                    " truth vs " + std::to_string(pred.size()) + " predictions");
    std::string bad;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        const auto it = truth[s].params.find("seq_id");
        const auto ip = pred[s].params.find("seq_id");
        if (it != truth[s].params.end() && ip != pred[s].params.end() &&
            it->second != ip->second) {
            if (!bad.empty()) bad += ", ";
            bad += std::to_string(static_cast<long long>(it->second)) + "!=" +
                   std::to_string(static_cast<long long>(ip->second));
        }
        if (truth[s].length() != pred[s].length())
            throw std::invalid_argument("sequence " + std::to_string(s) +
                                        " length mismatch between truth and prediction");
        if (!truth[s].frames.front().same_shape(pred[s].frames.front()))
            throw std::invalid_argument("sequence " + std::to_string(s) + " shape mismatch");
    }
    if (!bad.empty()) throw std::invalid_argument("misaligned sequence ids: " + bad);
}

/// Full metric sweep over paired rollouts. Only predicted frames
/// (t >= window) enter the report; the first `window` frames are seeds.
inline EvaluationReport evaluate_pairs(std::span<const Sequence> truth,
                                       std::span<const Sequence> pred, const NormStats& stats,
                                       const MaterialBounds& bounds, std::size_t window = 5) {
    check_alignment(truth, pred);
    bounds.validate();
    EvaluationReport report;
    report.window = window;

    const std::size_t mat = static_cast<std::size_t>(Field::materials);
    const std::size_t den = static_cast<std::size_t>(Field::density);

    std::map<std::string, std::vector<double>> agg_values;
    std::map<std::string, std::vector<std::vector<double>>> curve_values;
    auto push = [&](const std::string& name, std::size_t t_rel, double v) {
        agg_values[name].push_back(v);
        auto& curve = curve_values[name];
        if (curve.size() <= t_rel) curve.resize(t_rel + 1);
        curve[t_rel].push_back(v);
    };

    for (std::size_t s = 0; s < truth.size(); ++s) {
        const Sequence& g_seq = truth[s];
        const Sequence& p_seq = pred[s];
        if (g_seq.length() <= window)
            throw std::invalid_argument("sequence shorter than the seed window");
        const auto id_it = g_seq.params.find("seq_id");
        const std::size_t sample_id =
            id_it != g_seq.params.end() ? static_cast<std::size_t>(id_it->second) : s;

        for (std::size_t t = window; t < g_seq.length(); ++t) {
            const std::size_t t_rel = t - window;
            const FieldFrame& g_raw = g_seq.frames[t];
            const FieldFrame& p_raw = p_seq.frames[t];
            const FieldFrame g_norm = normalize(g_raw, stats);
            const FieldFrame p_norm = normalize(p_raw, stats);

            const MaskPair masks = build_masks(g_raw.field(mat), p_raw.field(mat), bounds);
            const bool has_mask = masks.truth_count() > 0;

            for (std::size_t f = 0; f < g_raw.fields(); ++f) {
                FieldRow row{sample_id, t, f, 0.0, 0.0, 0.0};
                row.mse = mse_metric(p_norm.field(f), g_norm.field(f));
                row.rmse = std::sqrt(row.mse);
                row.ssim = ssim(p_norm.field(f), g_norm.field(f));
                push("mse", t_rel, row.mse);
                push("rmse", t_rel, row.rmse);
                push("ssim", t_rel, row.ssim);
                if (has_mask) {
                    const SampleStats stats_f =
                        samplewise_stats(p_norm.field(f), g_norm.field(f), masks);
                    row.masked_rmse = stats_f.rmse;
                    row.r2 = stats_f.r2;
                    row.has_mask = true;
                    push("masked_rmse", t_rel, stats_f.rmse);
                    if (stats_f.r2) push("r2", t_rel, *stats_f.r2);
                }
                report.field_rows.push_back(row);
            }

            FrameRow frame{sample_id, t, 0.0, 0.0, 0.0, masks.truth_count(), masks.pred_count()};
            frame.soft_iou = soft_iou(p_raw.field(mat), g_raw.field(mat), bounds);
            frame.cm = conservation_of_mass(p_raw.field(den), g_raw.field(den),
                                            p_raw.field(mat), g_raw.field(mat));
            {
                std::size_t inter = 0, uni = 0;
                for (std::size_t i = 0; i < masks.truth.size(); ++i) {
                    inter += (masks.truth[i] && masks.pred[i]) ? 1 : 0;
                    uni += (masks.truth[i] || masks.pred[i]) ? 1 : 0;
                }
                frame.hard_iou =
                    uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
            }
            push("soft_iou", t_rel, frame.soft_iou);
            push("cm", t_rel, frame.cm);
            push("hard_iou", t_rel, frame.hard_iou);
            report.frame_rows.push_back(frame);

            if (has_mask) {
                for (std::size_t f : evaluate_detail::kQoiFields) {
                    QoiSeriesRow qrow{sample_id, t, f, {}, std::nullopt};
                    qrow.qoi = masked_qoi(p_raw.field(f), g_raw.field(f), masks);
                    const SampleStats raw_stats =
                        samplewise_stats(p_raw.field(f), g_raw.field(f), masks);
                    if (std::abs(qrow.qoi.mean_truth) > 1e-300)
                        qrow.rel_rmse = raw_stats.rmse / std::abs(qrow.qoi.mean_truth);
                    report.qoi_rows.push_back(qrow);
                    if (qrow.rel_rmse)
                        push("qoi_rel_rmse_" + std::string(kFieldNames[f]), t_rel, *qrow.rel_rmse);
                    push("qoi_abs_diff_" + std::string(kFieldNames[f]), t_rel,
                         qrow.qoi.mean_abs_diff);
                }
            }
        }
    }

    for (const auto& [name, values] : agg_values)
        report.aggregates[name] = Aggregate::of(values);
    for (const auto& [name, per_t] : curve_values) {
        auto& curve = report.curves[name];
        curve.reserve(per_t.size());
        for (const auto& values : per_t) curve.push_back(Aggregate::of(values));
    }
    return report;
}

}  // namespace mstm::metrics
