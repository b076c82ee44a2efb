#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mstm/field/frame.hpp"
#include "mstm/metrics/evaluate.hpp"

namespace mstm::metrics {

namespace report_detail {

/// Shortest round-trippable decimal form; keeps re-runs byte-identical.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        std::sscanf(probe, "%lf", &parsed);
        if (parsed == v) return probe;
    }
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace report_detail

/// One row per sample x timestep x field.
inline void write_field_csv(const std::filesystem::path& path, const EvaluationReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "sample,timestep,field,mse,rmse,ssim,masked_rmse,r2\n";
    for (const auto& r : report.field_rows) {
        os << r.sample << ',' << r.timestep << ',' << kFieldNames[r.field] << ','
           << report_detail::fmt(r.mse) << ',' << report_detail::fmt(r.rmse) << ','
           << report_detail::fmt(r.ssim) << ',';
        if (r.has_mask) os << report_detail::fmt(r.masked_rmse);
        os << ',';
        if (r.r2) os << report_detail::fmt(*r.r2);
        os << '\n';
    }
}

inline void write_frame_csv(const std::filesystem::path& path, const EvaluationReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "sample,timestep,soft_iou,cm,hard_iou,mask_truth_cells,mask_pred_cells\n";
    for (const auto& r : report.frame_rows) {
        os << r.sample << ',' << r.timestep << ',' << report_detail::fmt(r.soft_iou) << ','
           << report_detail::fmt(r.cm) << ',' << report_detail::fmt(r.hard_iou) << ','
           << r.mask_truth_cells << ',' << r.mask_pred_cells << '\n';
    }
}

inline void write_qoi_csv(const std::filesystem::path& path, const EvaluationReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "sample,timestep,field,mean_truth,std_truth,mean_pred,std_pred,"
          "mean_abs_diff,std_abs_diff,rel_rmse\n";
    for (const auto& r : report.qoi_rows) {
        os << r.sample << ',' << r.timestep << ',' << kFieldNames[r.field] << ','
           << report_detail::fmt(r.qoi.mean_truth) << ',' << report_detail::fmt(r.qoi.std_truth)
           << ',' << report_detail::fmt(r.qoi.mean_pred) << ','
           << report_detail::fmt(r.qoi.std_pred) << ','
           << report_detail::fmt(r.qoi.mean_abs_diff) << ','
           << report_detail::fmt(r.qoi.std_abs_diff) << ',';
        if (r.rel_rmse) os << report_detail::fmt(*r.rel_rmse);
        os << '\n';
    }
}

/// Per-timestep mean +- std for each metric, ready for plotting.
inline void write_curves_csv(const std::filesystem::path& path, const EvaluationReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "metric,timestep,mean,std,count\n";
    for (const auto& [name, curve] : report.curves) {
        for (std::size_t t = 0; t < curve.size(); ++t) {
            os << name << ',' << (report.window + t) << ',' << report_detail::fmt(curve[t].mean)
               << ',' << report_detail::fmt(curve[t].stddev) << ',' << curve[t].count << '\n';
        }
    }
}

/// Aggregate summary as a small JSON document (sorted keys).
inline void write_summary_json(const std::filesystem::path& path,
                               const EvaluationReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "{\n";
    os << "  \"window\": " << report.window << ",\n";
    os << "  \"metrics\": {\n";
    bool first = true;
    for (const auto& [name, agg] : report.aggregates) {
        if (!first) os << ",\n";
        first = false;
        os << "    \"" << report_detail::json_escape(name) << "\": {\"mean\": "
           << report_detail::fmt(agg.mean) << ", \"std\": " << report_detail::fmt(agg.stddev)
           << ", \"count\": " << agg.count << "}";
    }
    os << "\n  }\n}\n";
}

inline void write_report(const std::filesystem::path& dir, const EvaluationReport& report) {
    std::filesystem::create_directories(dir);
    write_field_csv(dir / "metrics_fields.csv", report);
    write_frame_csv(dir / "metrics_frames.csv", report);
    write_qoi_csv(dir / "metrics_qoi.csv", report);
    write_curves_csv(dir / "metrics_curves.csv", report);
    write_summary_json(dir / "summary.json", report);
}

}  // namespace mstm::metrics
