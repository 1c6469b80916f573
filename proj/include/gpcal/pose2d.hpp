#pragma once

#include <cmath>
#include <numbers>
#include <ostream>

namespace gpcal {

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/// Planar pose (x, y, theta). Theta is kept in (-pi, pi].
class Pose2D
{
public:
    constexpr Pose2D() = default;
    Pose2D(double x, double y, double theta)
        : x_(x), y_(y), theta_(normalize_angle(theta))
    {
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta))
            throw_non_finite();
    }

    double x() const { return x_; }
    double y() const { return y_; }
    double theta() const { return theta_; }

    bool operator==(const Pose2D&) const = default;

private:
    [[noreturn]] static void throw_non_finite();

    double x_ = 0.0;
    double y_ = 0.0;
    double theta_ = 0.0;
};

/// Roto-translation composition a (+) b.
Pose2D oplus(const Pose2D& a, const Pose2D& b);

/// Inverse of oplus: (-)a (+) a = identity.
Pose2D ominus(const Pose2D& a);

/// Pose of q_k expressed in the frame of q_j, i.e. (-)q_j (+) q_k.
Pose2D relative_pose(const Pose2D& q_j, const Pose2D& q_k);

/// Sensor displacement for robot displacement q when the sensor sits at
/// mount in the robot frame: (-)mount (+) q (+) mount.
Pose2D conjugate(const Pose2D& q, const Pose2D& mount);

inline Pose2D operator*(const Pose2D& a, const Pose2D& b) { return oplus(a, b); }

std::ostream& operator<<(std::ostream& os, const Pose2D& p);

} // namespace gpcal
