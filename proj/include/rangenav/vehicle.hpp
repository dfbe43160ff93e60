#pragma once

#include "rangenav/worldmap.hpp"

namespace rangenav {

/// Kinematic bicycle parameters. Defaults split a 0.32 m wheelbase evenly.
struct VehicleParams {
    double l_f = 0.16;
    double l_r = 0.16;
    double max_speed = 2.0;
    double max_steer = 0.4;
    double footprint_radius = 0.3;

    double wheelbase() const { return l_f + l_r; }
    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
    double v = 0.0;

    Pose2 pose() const { return {x, y, psi}; }
};

/// Angle between the centre-of-mass velocity and the body axis.
double slip_angle(double steer, const VehicleParams& params);

/// One explicit Euler step of the kinematic bicycle model. The commanded
/// speed is applied instantly; steering is clamped to +/- max_steer.
VehicleState step_kinematics(const VehicleState& state, double speed, double steer, double dt,
                             const VehicleParams& params);

/// Steering angle that yields yaw rate `omega` at speed `speed`. Saturates at
/// the steering limit; returns 0 when the vehicle is (nearly) stopped.
double omega_to_steer(double speed, double omega, const VehicleParams& params);

/// Largest yaw rate reachable at `speed`.
double max_yaw_rate(double speed, const VehicleParams& params);

}  // namespace rangenav
