#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mstm/util/image.hpp"

namespace mstm {

/// x/mean/std triplets for one curve.
struct PlotSeries {
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Pixel mapping for a plot; exposed so tests can check the rendered band
/// against the data without decoding the image.
struct PlotLayout {
    std::size_t canvas_w = 640, canvas_h = 400;
    std::size_t left = 48, right = 12, top = 12, bottom = 28;
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

    std::size_t plot_x0() const { return left; }
    std::size_t plot_x1() const { return canvas_w - right - 1; }
    std::size_t plot_y0() const { return top; }
    std::size_t plot_y1() const { return canvas_h - bottom - 1; }

    long long map_x(double v) const {
        const double t = (v - x_min) / (x_max - x_min);
        return static_cast<long long>(std::llround(plot_x0() + t * (plot_x1() - plot_x0())));
    }
    long long map_y(double v) const {
        const double t = (v - y_min) / (y_max - y_min);
        return static_cast<long long>(std::llround(plot_y1() - t * (plot_y1() - plot_y0())));
    }

    static PlotLayout fit(const PlotSeries& series) {
        if (series.x.empty()) throw std::invalid_argument("empty plot series");
        PlotLayout l;
        l.x_min = *std::min_element(series.x.begin(), series.x.end());
        l.x_max = *std::max_element(series.x.begin(), series.x.end());
        if (l.x_max == l.x_min) {
            l.x_min -= 0.5;
            l.x_max += 0.5;
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < series.x.size(); ++i) {
            const double s = i < series.stddev.size() ? series.stddev[i] : 0.0;
            lo = std::min(lo, series.mean[i] - s);
            hi = std::max(hi, series.mean[i] + s);
        }
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        l.y_min = lo - pad;
        l.y_max = hi + pad;
        return l;
    }
};

inline constexpr Rgb kPlotBand{198, 219, 239};
inline constexpr Rgb kPlotLine{33, 102, 172};
inline constexpr Rgb kPlotAxis{80, 80, 80};
inline constexpr Rgb kPlotGrid{225, 225, 225};

/// Mean curve with a +-1 sigma band. The band at each sample x spans
/// exactly [map_y(mean+std), map_y(mean-std)].
inline void render_series(Canvas& canvas, const PlotLayout& layout, const PlotSeries& series) {
    // grid
    for (int g = 1; g < 4; ++g) {
        const std::size_t y =
            layout.plot_y0() + g * (layout.plot_y1() - layout.plot_y0()) / 4;
        canvas.fill_rect(layout.plot_x0(), y, layout.plot_x1(), y, kPlotGrid);
    }

    // band: vertical spans interpolated between sample points
    const std::size_t n = series.x.size();
    for (std::size_t px = layout.plot_x0(); px <= layout.plot_x1(); ++px) {
        const double fx = layout.x_min + (layout.x_max - layout.x_min) *
                                             (static_cast<double>(px) - layout.plot_x0()) /
                                             (layout.plot_x1() - layout.plot_x0());
        std::size_t hi_idx = 0;
        while (hi_idx + 1 < n && series.x[hi_idx + 1] < fx) ++hi_idx;
        double mean, sd;
        if (hi_idx + 1 >= n || fx <= series.x[0]) {
            const std::size_t i = fx <= series.x[0] ? 0 : n - 1;
            mean = series.mean[i];
            sd = i < series.stddev.size() ? series.stddev[i] : 0.0;
        } else {
            const double t =
                (fx - series.x[hi_idx]) / (series.x[hi_idx + 1] - series.x[hi_idx]);
            const double s0 = hi_idx < series.stddev.size() ? series.stddev[hi_idx] : 0.0;
            const double s1 =
                hi_idx + 1 < series.stddev.size() ? series.stddev[hi_idx + 1] : 0.0;
            mean = series.mean[hi_idx] + t * (series.mean[hi_idx + 1] - series.mean[hi_idx]);
            sd = s0 + t * (s1 - s0);
        }
        const long long y_top = layout.map_y(mean + sd);
        const long long y_bot = layout.map_y(mean - sd);
        for (long long y = y_top; y <= y_bot; ++y)
            if (y >= 0) canvas.set(px, static_cast<std::size_t>(y), kPlotBand);
    }

    // mean polyline
    for (std::size_t i = 0; i + 1 < n; ++i)
        canvas.line(layout.map_x(series.x[i]), layout.map_y(series.mean[i]),
                    layout.map_x(series.x[i + 1]), layout.map_y(series.mean[i + 1]), kPlotLine);
    if (n == 1)
        canvas.set(static_cast<std::size_t>(layout.map_x(series.x[0])),
                   static_cast<std::size_t>(layout.map_y(series.mean[0])), kPlotLine);

    // axes
    canvas.line(static_cast<long long>(layout.plot_x0()), static_cast<long long>(layout.plot_y0()),
                static_cast<long long>(layout.plot_x0()), static_cast<long long>(layout.plot_y1()),
                kPlotAxis);
    canvas.line(static_cast<long long>(layout.plot_x0()), static_cast<long long>(layout.plot_y1()),
                static_cast<long long>(layout.plot_x1()), static_cast<long long>(layout.plot_y1()),
                kPlotAxis);
}

/// Renders one metric curve into a fresh canvas.
inline Canvas plot_series(const PlotSeries& series, std::size_t width = 640,
                          std::size_t height = 400) {
    PlotLayout layout = PlotLayout::fit(series);
    layout.canvas_w = width;
    layout.canvas_h = height;
    Canvas canvas(width, height);
    render_series(canvas, layout, series);
    return canvas;
}

}  // namespace mstm
