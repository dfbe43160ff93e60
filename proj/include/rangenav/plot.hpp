#pragma once

#include <string>
#include <vector>

#include "rangenav/harness.hpp"
#include "rangenav/metrics.hpp"
#include "rangenav/worldmap.hpp"

namespace rangenav {

/// Two stacked panels (return, steps) with raw series and order-50 moving
/// average. Every data series is a <path>; axes and ticks never are.
std::string render_log_svg(const std::vector<EpisodeLog>& episodes);

/// Map (walls, obstacles), annulus circles around the first trajectory's
/// origin, spawn markers, and exactly one <path> per trajectory.
std::string render_trajectory_svg(const WorldMap& map, const std::vector<Trajectory>& trajectories,
                                  double annulus_width = 10.0);

}  // namespace rangenav
