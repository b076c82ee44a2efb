#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mstm::metrics {

/// Interval on the material-fraction field that counts as "material";
/// k smooths the soft membership near the bounds.
struct MaterialBounds {
    double lb;
    double ub;

    double k() const { return 0.05 * (ub - lb); }

    void validate() const {
        if (!(ub > lb)) throw std::invalid_argument("material bounds need ub > lb");
    }

    static MaterialBounds porous() { return {0.20, 0.30}; }
    static MaterialBounds lattice() { return {0.54, 0.99}; }
    /// Band matching the mini-hydro data, where solid cells carry m == 1.
    static MaterialBounds solid() { return {0.5, 1.0}; }

    static MaterialBounds preset(const std::string& name) {
        if (name == "porous") return porous();
        if (name == "lattice") return lattice();
        if (name == "solid") return solid();
        throw std::invalid_argument("unknown bounds preset: " + name);
    }
};

/// Binary masks thresholded independently from ground truth and prediction.
struct MaskPair {
    std::vector<std::uint8_t> truth;
    std::vector<std::uint8_t> pred;

    std::size_t truth_count() const {
        std::size_t n = 0;
        for (auto v : truth) n += v;
        return n;
    }
    std::size_t pred_count() const {
        std::size_t n = 0;
        for (auto v : pred) n += v;
        return n;
    }
};

namespace metrics_detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("metric input size mismatch");
}

}  // namespace metrics_detail

/// Mean squared difference over masked cells (empty mask span = all cells).
inline double mse_metric(std::span<const float> pred, std::span<const float> truth,
                         std::span<const std::uint8_t> mask = {}) {
    metrics_detail::check_sizes(pred.size(), truth.size());
    if (!mask.empty()) metrics_detail::check_sizes(mask.size(), truth.size());
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        acc += d * d;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mse_metric over an empty mask");
    return acc / static_cast<double>(n);
}

/// Soft intersection-over-union on the material field: each value gets a
/// sigmoid interval membership and IoU is sum(min)/sum(max). When both
/// memberships vanish identically the frames agree, so the result is 1.
inline double soft_iou(std::span<const float> pred_material,
                       std::span<const float> true_material, const MaterialBounds& bounds) {
    bounds.validate();
    metrics_detail::check_sizes(pred_material.size(), true_material.size());
    const double k = bounds.k();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred_material.size(); ++i) {
        const double p = pred_material[i];
        const double g = true_material[i];
        const double mp = metrics_detail::sigmoid((p - bounds.lb) / k) *
                          metrics_detail::sigmoid((bounds.ub - p) / k);
        const double mg = metrics_detail::sigmoid((g - bounds.lb) / k) *
                          metrics_detail::sigmoid((bounds.ub - g) / k);
        num += std::min(mp, mg);
        den += std::max(mp, mg);
    }
    if (den == 0.0) return 1.0;
    return num / den;
}

/// Whole-frame SSIM with population moments; L is the dynamic range
/// (1 on normalized data), C1 = (0.01 L)^2, C2 = (0.03 L)^2.
inline double ssim(std::span<const float> pred, std::span<const float> truth, double L = 1.0) {
    metrics_detail::check_sizes(pred.size(), truth.size());
    const double n = static_cast<double>(pred.size());
    if (pred.empty()) throw std::invalid_argument("ssim of empty field");
    double sum_p = 0.0, sum_g = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum_p += pred[i];
        sum_g += truth[i];
    }
    const double mu_p = sum_p / n;
    const double mu_g = sum_g / n;
    double var_p = 0.0, var_g = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dp = pred[i] - mu_p;
        const double dg = truth[i] - mu_g;
        var_p += dp * dp;
        var_g += dg * dg;
        cov += dp * dg;
    }
    var_p /= n;
    var_g /= n;
    cov /= n;
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    return ((2.0 * mu_p * mu_g + c1) * (2.0 * cov + c2)) /
           ((mu_p * mu_p + mu_g * mu_g + c1) * (var_p + var_g + c2));
}

/// Relative error of total mass, optionally weighted by material fraction
/// (pass empty spans to use f == 1).
inline double conservation_of_mass(std::span<const float> pred_density,
                                   std::span<const float> true_density,
                                   std::span<const float> pred_fraction = {},
                                   std::span<const float> true_fraction = {}) {
    metrics_detail::check_sizes(pred_density.size(), true_density.size());
    if (!pred_fraction.empty()) metrics_detail::check_sizes(pred_fraction.size(), pred_density.size());
    if (!true_fraction.empty()) metrics_detail::check_sizes(true_fraction.size(), true_density.size());
    double m_p = 0.0, m_g = 0.0;
    for (std::size_t i = 0; i < pred_density.size(); ++i) {
        m_p += static_cast<double>(pred_density[i]) *
               (pred_fraction.empty() ? 1.0 : static_cast<double>(pred_fraction[i]));
        m_g += static_cast<double>(true_density[i]) *
               (true_fraction.empty() ? 1.0 : static_cast<double>(true_fraction[i]));
    }
    if (!(m_g > 0.0)) throw std::invalid_argument("conservation_of_mass needs positive true mass");
    return std::abs(m_p - m_g) / m_g;
}

/// Hard interval threshold lb <= m <= ub applied independently per frame.
inline MaskPair build_masks(std::span<const float> true_material,
                            std::span<const float> pred_material, const MaterialBounds& bounds) {
    bounds.validate();
    metrics_detail::check_sizes(true_material.size(), pred_material.size());
    MaskPair pair;
    pair.truth.resize(true_material.size());
    pair.pred.resize(pred_material.size());
    for (std::size_t i = 0; i < true_material.size(); ++i) {
        pair.truth[i] = (true_material[i] >= bounds.lb && true_material[i] <= bounds.ub) ? 1 : 0;
        pair.pred[i] = (pred_material[i] >= bounds.lb && pred_material[i] <= bounds.ub) ? 1 : 0;
    }
    return pair;
}

/// Masked first/second moments per the ground-truth and prediction masks;
/// differences are |X_g - X_p * M_p| evaluated over ground-truth mask cells.
struct QoiRow {
    double mean_truth = 0.0, std_truth = 0.0;
    double mean_pred = 0.0, std_pred = 0.0;
    double mean_abs_diff = 0.0, std_abs_diff = 0.0;
    bool empty_truth = true;
    bool empty_pred = true;
};

inline QoiRow masked_qoi(std::span<const float> pred, std::span<const float> truth,
                         const MaskPair& masks) {
    metrics_detail::check_sizes(pred.size(), truth.size());
    metrics_detail::check_sizes(masks.truth.size(), truth.size());
    metrics_detail::check_sizes(masks.pred.size(), pred.size());

    auto moments = [](auto&& values) -> std::pair<double, double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (double v : values) {
            sum += v;
            ++n;
        }
        if (n == 0) return {0.0, 0.0};
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        return {mean, std::sqrt(var / static_cast<double>(n))};
    };

    QoiRow row;
    std::vector<double> g_vals, p_vals, d_vals;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (masks.truth[i]) {
            g_vals.push_back(truth[i]);
            const double p_masked = masks.pred[i] ? static_cast<double>(pred[i]) : 0.0;
            d_vals.push_back(std::abs(static_cast<double>(truth[i]) - p_masked));
        }
        if (masks.pred[i]) p_vals.push_back(pred[i]);
    }
    row.empty_truth = g_vals.empty();
    row.empty_pred = p_vals.empty();
    std::tie(row.mean_truth, row.std_truth) = moments(g_vals);
    std::tie(row.mean_pred, row.std_pred) = moments(p_vals);
    std::tie(row.mean_abs_diff, row.std_abs_diff) = moments(d_vals);
    return row;
}

/// Per-sample RMSE / R^2 over the ground-truth mask and hard mask IoU.
/// R^2 is missing when the masked ground truth is constant.
struct SampleStats {
    double rmse = 0.0;
    std::optional<double> r2;
    double iou = 1.0;
};

inline SampleStats samplewise_stats(std::span<const float> pred, std::span<const float> truth,
                                    const MaskPair& masks) {
    metrics_detail::check_sizes(pred.size(), truth.size());
    metrics_detail::check_sizes(masks.truth.size(), truth.size());

    SampleStats out;
    double ss_res = 0.0, sum_g = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!masks.truth[i]) continue;
        const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        ss_res += d * d;
        sum_g += truth[i];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("samplewise_stats needs a nonempty truth mask");
    out.rmse = std::sqrt(ss_res / static_cast<double>(n));

    const double mean_g = sum_g / static_cast<double>(n);
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!masks.truth[i]) continue;
        const double d = static_cast<double>(truth[i]) - mean_g;
        ss_tot += d * d;
    }
    if (ss_tot > 0.0) out.r2 = 1.0 - ss_res / ss_tot;

    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < masks.truth.size(); ++i) {
        const bool g = masks.truth[i], p = masks.pred[i];
        inter += (g && p) ? 1 : 0;
        uni += (g || p) ? 1 : 0;
    }
    out.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return out;
}

/// Population mean and standard deviation of a value list.
struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;

    static Aggregate of(std::span<const double> values) {
        Aggregate a;
        a.count = values.size();
        if (values.empty()) return a;
        double sum = 0.0;
        for (double v : values) sum += v;
        a.mean = sum / static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(var / static_cast<double>(values.size()));
        return a;
    }
};

}  // namespace mstm::metrics
