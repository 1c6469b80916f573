#include "gpcal/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void expect_wheels(const TickVector& ticks, const DriveModel& model, int expected,
                   const char* what)
{
    if (model.wheel_count() != expected || ticks.size() != expected)
        throw DimensionError(std::string(what) + ": expected " + std::to_string(expected) +
                             " wheels, got model " + std::to_string(model.wheel_count()) +
                             " / ticks " + std::to_string(ticks.size()));
}

Eigen::Matrix<double, 4, 3> mecanum_jacobian(const DriveModel& model)
{
    const double l = model.half_length + model.half_width;
    Eigen::Matrix<double, 4, 3> j;
    j << 1.0, -1.0, -l,
         1.0,  1.0,  l,
         1.0,  1.0, -l,
         1.0, -1.0,  l;
    for (int i = 0; i < 4; ++i)
        j.row(i) /= model.wheel_radii(i);
    return j;
}

Pose2D diff_drive_from_angles(const Eigen::VectorXd& angles, const DriveModel& model)
{
    const double s_left = angles(0) * model.wheel_radii(0);
    const double s_right = angles(1) * model.wheel_radii(1);
    const double dtheta = (s_right - s_left) / (2.0 * model.half_width);
    if (std::abs(dtheta) < 1e-9)
        return { 0.5 * (s_left + s_right), 0.0, dtheta };
    const double radius = (s_left + s_right) / (2.0 * dtheta);
    return { radius * std::sin(dtheta), radius * (1.0 - std::cos(dtheta)), dtheta };
}

Pose2D mecanum_from_angles(const Eigen::VectorXd& angles, const DriveModel& model)
{
    const Eigen::Matrix<double, 4, 3> j = mecanum_jacobian(model);
    const Eigen::Vector3d twist = (j.transpose() * j).ldlt().solve(j.transpose() * angles);
    return integrate_twist(twist(0), twist(1), twist(2));
}

} // namespace

DriveModel DriveModel::diff_drive(double radius, double half_width, std::int64_t ticks_per_rev)
{
    DriveModel m;
    m.kind = DriveKind::DiffDrive;
    m.wheel_radii = Eigen::VectorXd::Constant(2, radius);
    m.half_width = half_width;
    m.ticks_per_rev.assign(2, ticks_per_rev);
    return m;
}

DriveModel DriveModel::mecanum(double radius, double half_length, double half_width,
                               std::int64_t ticks_per_rev)
{
    DriveModel m;
    m.kind = DriveKind::Mecanum;
    m.wheel_radii = Eigen::VectorXd::Constant(4, radius);
    m.half_length = half_length;
    m.half_width = half_width;
    m.ticks_per_rev.assign(4, ticks_per_rev);
    return m;
}

Deformation Deformation::none(int wheels)
{
    return { Eigen::VectorXd::Ones(wheels), Eigen::VectorXd::Zero(wheels),
             Eigen::VectorXd::Zero(wheels) };
}

void validate(const DriveModel& model)
{
    const int expected = model.kind == DriveKind::DiffDrive ? 2 : 4;
    if (model.wheel_count() != expected)
        throw ValidationError("drive model: expected " + std::to_string(expected) + " wheel radii");
    if (static_cast<int>(model.ticks_per_rev.size()) != expected)
        throw ValidationError("drive model: expected " + std::to_string(expected) +
                              " ticks_per_rev entries");
    if (!(model.wheel_radii.array() > 0.0).all() || !model.wheel_radii.allFinite())
        throw ValidationError("drive model: wheel radii must be positive");
    if (!(model.half_width > 0.0))
        throw ValidationError("drive model: half width must be positive");
    if (model.kind == DriveKind::Mecanum && !(model.half_length > 0.0))
        throw ValidationError("drive model: half length must be positive");
    for (auto tpr : model.ticks_per_rev)
        if (tpr < 1)
            throw ValidationError("drive model: ticks_per_rev must be >= 1");
}

void validate(const Deformation& deform, int wheels)
{
    if (deform.per_wheel_scale.size() != wheels || deform.tilt_deg.size() != wheels ||
        deform.ripple_amp.size() != wheels)
        throw ValidationError("deformation: expected " + std::to_string(wheels) + " entries per field");
    for (int i = 0; i < wheels; ++i) {
        if (!(deform.per_wheel_scale(i) > 0.0))
            throw ValidationError("deformation: scale must be positive");
        if (!(deform.tilt_deg(i) >= 0.0 && deform.tilt_deg(i) < 90.0))
            throw ValidationError("deformation: tilt must lie in [0, 90) degrees");
        if (!(deform.ripple_amp(i) >= 0.0 && deform.ripple_amp(i) < 1.0))
            throw ValidationError("deformation: ripple amplitude must lie in [0, 1)");
    }
}

Eigen::VectorXd ticks_to_angles(const TickVector& ticks, const DriveModel& model)
{
    if (ticks.size() != model.wheel_count())
        throw DimensionError("tick vector has " + std::to_string(ticks.size()) +
                             " entries, model has " + std::to_string(model.wheel_count()) + " wheels");
    Eigen::VectorXd angles(ticks.size());
    for (Eigen::Index i = 0; i < ticks.size(); ++i)
        angles(i) = kTwoPi * ticks(i) / static_cast<double>(model.ticks_per_rev[i]);
    return angles;
}

Pose2D diff_drive_forward(const TickVector& ticks, const DriveModel& model)
{
    expect_wheels(ticks, model, 2, "diff_drive_forward");
    return diff_drive_from_angles(ticks_to_angles(ticks, model), model);
}

Pose2D mecanum_forward(const TickVector& ticks, const DriveModel& model)
{
    expect_wheels(ticks, model, 4, "mecanum_forward");
    return mecanum_from_angles(ticks_to_angles(ticks, model), model);
}

Pose2D forward(const TickVector& ticks, const DriveModel& model)
{
    return model.kind == DriveKind::DiffDrive ? diff_drive_forward(ticks, model)
                                              : mecanum_forward(ticks, model);
}

Pose2D forward_from_angles(const Eigen::VectorXd& wheel_angles, const DriveModel& model)
{
    const int expected = model.kind == DriveKind::DiffDrive ? 2 : 4;
    if (wheel_angles.size() != expected || model.wheel_count() != expected)
        throw DimensionError("forward_from_angles: wheel count mismatch");
    return model.kind == DriveKind::DiffDrive ? diff_drive_from_angles(wheel_angles, model)
                                              : mecanum_from_angles(wheel_angles, model);
}

Pose2D integrate_twist(double vx, double vy, double omega)
{
    if (std::abs(omega) < 1e-9) {
        // second-order expansion keeps the small-angle branch continuous
        return { vx - 0.5 * vy * omega, vy + 0.5 * vx * omega, omega };
    }
    const double s = std::sin(omega);
    const double h = std::sin(0.5 * omega);
    const double one_minus_c = 2.0 * h * h;   // 1 - cos without cancellation
    return { (vx * s - vy * one_minus_c) / omega,
             (vx * one_minus_c + vy * s) / omega,
             omega };
}

Eigen::VectorXd wheel_rates_for_twist(const DriveModel& model, double vx, double vy, double omega)
{
    if (model.kind == DriveKind::DiffDrive) {
        Eigen::VectorXd rates(2);
        rates(0) = (vx - model.half_width * omega) / model.wheel_radii(0);
        rates(1) = (vx + model.half_width * omega) / model.wheel_radii(1);
        return rates;
    }
    return mecanum_jacobian(model) * Eigen::Vector3d(vx, vy, omega);
}

DriveModel apply_deformation(const DriveModel& model, const Deformation& deform,
                             const Eigen::VectorXd& wheel_angle)
{
    const int wheels = model.wheel_count();
    if (deform.per_wheel_scale.size() != wheels || wheel_angle.size() != wheels)
        throw DimensionError("apply_deformation: wheel count mismatch");
    DriveModel out = model;
    for (int i = 0; i < wheels; ++i) {
        const double tilt = deform.tilt_deg(i) * std::numbers::pi / 180.0;
        out.wheel_radii(i) = model.wheel_radii(i) * deform.per_wheel_scale(i) * std::cos(tilt) *
                             (1.0 + deform.ripple_amp(i) * std::sin(wheel_angle(i)));
    }
    return out;
}

} // namespace gpcal
