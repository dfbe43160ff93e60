#include "rangenav/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rangenav {

void VehicleParams::validate() const {
    if (!(l_f > 0.0)) throw std::invalid_argument("vehicle.l_f must be positive");
    if (!(l_r > 0.0)) throw std::invalid_argument("vehicle.l_r must be positive");
    if (!(max_speed > 0.0)) throw std::invalid_argument("vehicle.max_speed must be positive");
    if (!(max_steer > 0.0 && max_steer < std::numbers::pi / 2))
        throw std::invalid_argument("vehicle.max_steer must lie in (0, pi/2)");
    if (!(footprint_radius > 0.0))
        throw std::invalid_argument("vehicle.footprint_radius must be positive");
}

double slip_angle(double steer, const VehicleParams& params) {
    return std::atan(params.l_r / (params.l_f + params.l_r) * std::tan(steer));
}

VehicleState step_kinematics(const VehicleState& state, double speed, double steer, double dt,
                             const VehicleParams& params) {
    const double v = std::clamp(speed, -params.max_speed, params.max_speed);
    const double beta = slip_angle(std::clamp(steer, -params.max_steer, params.max_steer), params);
    VehicleState next = state;
    next.x = state.x + dt * v * std::cos(state.psi + beta);
    next.y = state.y + dt * v * std::sin(state.psi + beta);
    next.psi = wrap_angle(state.psi + dt * (v / params.l_r) * std::sin(beta));
    next.v = v;
    return next;
}

double omega_to_steer(double speed, double omega, const VehicleParams& params) {
    if (std::abs(speed) < 1e-6) return 0.0;
    const double s = std::clamp(omega * params.l_r / speed, -1.0, 1.0);
    const double beta = std::asin(s);
    const double steer = std::atan(std::tan(beta) * (params.l_f + params.l_r) / params.l_r);
    return std::clamp(steer, -params.max_steer, params.max_steer);
}

double max_yaw_rate(double speed, const VehicleParams& params) {
    return std::abs(speed) / params.l_r * std::sin(slip_angle(params.max_steer, params));
}

}  // namespace rangenav
