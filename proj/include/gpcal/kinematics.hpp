#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpcal/pose2d.hpp"

namespace gpcal {

/// Encoder increments over one interval, one entry per wheel. Integral
/// values stored as doubles so they feed straight into regression.
using TickVector = Eigen::VectorXd;

enum class DriveKind { DiffDrive, Mecanum };

/// Parametric drive description. Wheel order is (left, right) for a
/// differential drive and (front-left, front-right, rear-left, rear-right)
/// for mecanum.
struct DriveModel
{
    DriveKind kind = DriveKind::DiffDrive;
    Eigen::VectorXd wheel_radii;       // meters, one per wheel
    double half_width = 0.0;           // axle half-width (diff) / lateral half-spacing (mecanum)
    double half_length = 0.0;          // mecanum only: longitudinal half-spacing
    std::vector<std::int64_t> ticks_per_rev;

    int wheel_count() const { return static_cast<int>(wheel_radii.size()); }

    static DriveModel diff_drive(double radius, double half_width, std::int64_t ticks_per_rev);
    static DriveModel mecanum(double radius, double half_length, double half_width,
                              std::int64_t ticks_per_rev);
};

/// Wheel imperfections applied on top of a nominal DriveModel.
struct Deformation
{
    Eigen::VectorXd per_wheel_scale;   // multiplier on effective radius
    Eigen::VectorXd tilt_deg;          // effective radius scaled by cos(tilt)
    Eigen::VectorXd ripple_amp;        // radius modulation (1 + a sin(wheel angle))

    static Deformation none(int wheels);
};

void validate(const DriveModel& model);
void validate(const Deformation& deform, int wheels);

/// Wheel rotation in radians for the given tick counts.
Eigen::VectorXd ticks_to_angles(const TickVector& ticks, const DriveModel& model);

/// Exact-arc relative pose of a differential drive for the given ticks.
Pose2D diff_drive_forward(const TickVector& ticks, const DriveModel& model);

/// Relative pose of a 45-degree-roller mecanum base for the given ticks,
/// integrating the least-squares body twist exactly over the interval.
Pose2D mecanum_forward(const TickVector& ticks, const DriveModel& model);

/// Dispatches on model.kind.
Pose2D forward(const TickVector& ticks, const DriveModel& model);

/// Same as forward() but from continuous wheel rotations (radians).
Pose2D forward_from_angles(const Eigen::VectorXd& wheel_angles, const DriveModel& model);

/// Exact pose after applying a constant body twist (vx, vy, omega) for unit time.
Pose2D integrate_twist(double vx, double vy, double omega);

/// Wheel angular rates realising the body twist under the model's nominal
/// radii. vy is ignored for a differential drive.
Eigen::VectorXd wheel_rates_for_twist(const DriveModel& model, double vx, double vy, double omega);

/// Model with per-wheel effective radii
/// radius * scale * cos(tilt) * (1 + ripple * sin(wheel_angle)).
DriveModel apply_deformation(const DriveModel& model, const Deformation& deform,
                             const Eigen::VectorXd& wheel_angle);

} // namespace gpcal
