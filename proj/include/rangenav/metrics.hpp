#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rangenav/worldmap.hpp"

namespace rangenav {

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    Vec2 origin;

    /// Throws std::invalid_argument if empty or timestamps are not strictly increasing.
    void validate() const;
};

double path_length(const Trajectory& trajectory);

struct VisitedCell {
    std::int64_t i = 0;
    std::int64_t j = 0;
    int annulus = 1;

    friend auto operator<=>(const VisitedCell&, const VisitedCell&) = default;
};

struct SegmentationReport {
    double cell_size = 0.0;
    double annulus_width = 10.0;
    std::set<VisitedCell> visited;
    std::map<int, int> per_annulus_counts;  // k_n keyed by n
    int n_max = 0;
};

/// Side of a square cell with the given area (2 m^2 -> sqrt(2) m).
double cell_side_for_area(double area);

/// Annulus index of a point at `distance` from the origin: ceil(d / width),
/// at least 1, so a distance of exactly k * width belongs to annulus k.
int annulus_index(double distance, double annulus_width);

/// Maps samples to grid cells anchored at the map origin and tags each cell
/// with the annulus of its centre around the trajectory origin.
SegmentationReport segment_trajectory(const Trajectory& trajectory, double cell_size,
                                      double annulus_width = 10.0);

enum class EqsFormula { Cells, Literal };

EqsFormula eqs_formula_from_string(const std::string& s);

/// Cells: sum_n n * k_n. Literal: sum_n n * k_n (k_n + 1) / 2.
double eqs(const SegmentationReport& report, EqsFormula formula = EqsFormula::Cells);

class UndefinedScore : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

double ees(double eqs_score, double distance);

}  // namespace rangenav
