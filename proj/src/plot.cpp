#include "rangenav/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rangenav {

namespace {

struct Frame {
    double left, top, width, height;
    double x_min, x_max, y_min, y_max;

    double px(double x) const { return left + (x - x_min) / (x_max - x_min) * width; }
    double py(double y) const { return top + height - (y - y_min) / (y_max - y_min) * height; }
};

std::string polyline_path(const Frame& f, const std::vector<double>& ys, const char* stroke,
                          double stroke_width) {
    std::string d;
    for (std::size_t i = 0; i < ys.size(); ++i)
        d += fmt::format("{}{:.2f},{:.2f}", i == 0 ? "M" : " L", f.px(static_cast<double>(i)),
                         f.py(ys[i]));
    return fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>\n", d,
                       stroke, stroke_width);
}

std::string axes(const Frame& f, const std::string& title, const std::string& x_label) {
    std::string s;
    s += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
        "stroke=\"#444\"/>\n",
        f.left, f.top, f.width, f.height);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                     f.left + f.width / 2, f.top - 8, title);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                     f.left + f.width / 2, f.top + f.height + 32, x_label);
    for (int k = 0; k <= 4; ++k) {
        const double yv = f.y_min + (f.y_max - f.y_min) * k / 4.0;
        const double xv = f.x_min + (f.x_max - f.x_min) * k / 4.0;
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#444\"/>\n",
                         f.left - 4, f.py(yv), f.left, f.py(yv));
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"end\">{:.4g}</text>\n",
                         f.left - 6, f.py(yv) + 3, yv);
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#444\"/>\n",
                         f.px(xv), f.top + f.height, f.px(xv), f.top + f.height + 4);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"middle\">{:.4g}</text>\n",
                         f.px(xv), f.top + f.height + 16, xv);
    }
    return s;
}

std::pair<double, double> padded_range(const std::vector<double>& a, const std::vector<double>& b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi - lo < 1e-9) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::string panel(double top, const std::string& title, const std::vector<double>& series) {
    const auto ma = moving_average(series);
    const auto [lo, hi] = padded_range(series, ma);
    const double n = static_cast<double>(std::max<std::size_t>(series.size(), 2) - 1);
    const Frame f{80, top, 640, 220, 0.0, n, lo, hi};
    std::string s = axes(f, title, "episode");
    if (!series.empty()) {
        s += polyline_path(f, series, "#9bb7d4", 1.0);
        s += polyline_path(f, ma, "#c0392b", 2.0);
    }
    return s;
}

}  // namespace

std::string render_log_svg(const std::vector<EpisodeLog>& episodes) {
    std::vector<double> returns, steps;
    for (const auto& e : episodes) {
        returns.push_back(e.episode_return);
        steps.push_back(static_cast<double>(e.steps));
    }
    std::string s =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"620\" "
        "viewBox=\"0 0 760 620\">\n<rect width=\"760\" height=\"620\" fill=\"white\"/>\n";
    s += panel(40, "Episode return (order-50 moving average in red)", returns);
    s += panel(350, "Episode steps (order-50 moving average in red)", steps);
    s += "</svg>\n";
    return s;
}

std::string render_trajectory_svg(const WorldMap& map, const std::vector<Trajectory>& trajectories,
                                  double annulus_width) {
    const double margin = 20.0;
    const double scale = 600.0 / std::max(map.width(), map.height());
    const double w = map.width() * scale + 2 * margin;
    const double h = map.height() * scale + 2 * margin;
    auto px = [&](double x) { return margin + x * scale; };
    auto py = [&](double y) { return margin + (map.height() - y) * scale; };

    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
        "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n<rect width=\"{0:.0f}\" height=\"{1:.0f}\" fill=\"white\"/>\n",
        w, h);
    s += fmt::format("<text x=\"{:.2f}\" y=\"14\" font-size=\"12\">{}</text>\n", margin, map.name());
    for (const Segment& seg : map.walls())
        s += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\" "
            "stroke-width=\"3\"/>\n",
            px(seg.a.x), py(seg.a.y), px(seg.b.x), py(seg.b.y));
    for (const Circle& c : map.obstacles())
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"#555\"/>\n",
                         px(c.center.x), py(c.center.y), c.radius * scale);

    if (!trajectories.empty()) {
        const Vec2 o = trajectories.front().origin;
        const double reach = std::hypot(std::max(o.x, map.width() - o.x), std::max(o.y, map.height() - o.y));
        const int rings = static_cast<int>(std::ceil(reach / annulus_width));
        for (int n = 1; n <= rings; ++n)
            s += fmt::format(
                "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"none\" stroke=\"#bbb\" "
                "stroke-dasharray=\"4 3\"/>\n",
                px(o.x), py(o.y), n * annulus_width * scale);
    }

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const Trajectory& t = trajectories[k];
        std::string d;
        for (std::size_t i = 0; i < t.samples.size(); ++i)
            d += fmt::format("{}{:.2f},{:.2f}", i == 0 ? "M" : " L", px(t.samples[i].x), py(t.samples[i].y));
        s += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", d,
                         palette[k % std::size(palette)]);
        s += fmt::format(
            "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"8\" height=\"8\" fill=\"{}\" stroke=\"black\"/>\n",
            px(t.origin.x) - 4, py(t.origin.y) - 4, palette[k % std::size(palette)]);
    }
    s += "</svg>\n";
    return s;
}

}  // namespace rangenav
