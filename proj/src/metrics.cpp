#include "rangenav/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace rangenav {

void Trajectory::validate() const {
    if (samples.empty()) throw std::invalid_argument("trajectory has no samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].t > samples[i - 1].t))
            throw std::invalid_argument("trajectory timestamps must be strictly increasing (sample " +
                                        std::to_string(i) + ")");
}

double path_length(const Trajectory& trajectory) {
    double d = 0.0;
    for (std::size_t i = 1; i < trajectory.samples.size(); ++i) {
        const auto& a = trajectory.samples[i - 1];
        const auto& b = trajectory.samples[i];
        d += std::hypot(b.x - a.x, b.y - a.y);
    }
    return d;
}

double cell_side_for_area(double area) {
    if (!(area > 0.0)) throw std::invalid_argument("cell area must be positive");
    return std::sqrt(area);
}

int annulus_index(double distance, double annulus_width) {
    const int n = static_cast<int>(std::ceil(distance / annulus_width));
    return n < 1 ? 1 : n;
}

SegmentationReport segment_trajectory(const Trajectory& trajectory, double cell_size,
                                      double annulus_width) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
    if (!(annulus_width > 0.0)) throw std::invalid_argument("annulus width must be positive");
    SegmentationReport report;
    report.cell_size = cell_size;
    report.annulus_width = annulus_width;
    for (const auto& s : trajectory.samples) {
        const auto i = static_cast<std::int64_t>(std::floor(s.x / cell_size));
        const auto j = static_cast<std::int64_t>(std::floor(s.y / cell_size));
        const double cx = (static_cast<double>(i) + 0.5) * cell_size;
        const double cy = (static_cast<double>(j) + 0.5) * cell_size;
        const double dist = std::hypot(cx - trajectory.origin.x, cy - trajectory.origin.y);
        report.visited.insert({i, j, annulus_index(dist, annulus_width)});
    }
    for (const auto& cell : report.visited) {
        ++report.per_annulus_counts[cell.annulus];
        report.n_max = std::max(report.n_max, cell.annulus);
    }
    return report;
}

EqsFormula eqs_formula_from_string(const std::string& s) {
    if (s == "cells") return EqsFormula::Cells;
    if (s == "literal") return EqsFormula::Literal;
    throw std::invalid_argument("formula must be \"cells\" or \"literal\"");
}

double eqs(const SegmentationReport& report, EqsFormula formula) {
    double score = 0.0;
    for (const auto& [n, k] : report.per_annulus_counts) {
        const double kd = static_cast<double>(k);
        const double inner = formula == EqsFormula::Cells ? kd : kd * (kd + 1.0) / 2.0;
        score += static_cast<double>(n) * inner;
    }
    return score;
}

double ees(double eqs_score, double distance) {
    if (!(distance > 0.0)) throw UndefinedScore("EES is undefined for a zero-length trajectory");
    return eqs_score / distance;
}

}  // namespace rangenav
