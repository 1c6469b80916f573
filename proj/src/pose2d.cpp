#include "gpcal/pose2d.hpp"

#include "gpcal/errors.hpp"

namespace gpcal {

double normalize_angle(double theta)
{
    constexpr double pi = std::numbers::pi;
    if (theta > -pi && theta <= pi)
        return theta;
    double wrapped = std::remainder(theta, 2.0 * pi);  // in [-pi, pi]
    if (wrapped <= -pi)
        wrapped += 2.0 * pi;
    return wrapped;
}

void Pose2D::throw_non_finite()
{
    throw ValidationError("Pose2D: non-finite component");
}

Pose2D oplus(const Pose2D& a, const Pose2D& b)
{
    const double c = std::cos(a.theta());
    const double s = std::sin(a.theta());
    return { a.x() + b.x() * c - b.y() * s,
             a.y() + b.x() * s + b.y() * c,
             a.theta() + b.theta() };
}

Pose2D ominus(const Pose2D& a)
{
    const double c = std::cos(a.theta());
    const double s = std::sin(a.theta());
    return { -a.x() * c - a.y() * s,
              a.x() * s - a.y() * c,
             -a.theta() };
}

Pose2D relative_pose(const Pose2D& q_j, const Pose2D& q_k)
{
    return oplus(ominus(q_j), q_k);
}

Pose2D conjugate(const Pose2D& q, const Pose2D& mount)
{
    return oplus(oplus(ominus(mount), q), mount);
}

std::ostream& operator<<(std::ostream& os, const Pose2D& p)
{
    return os << "(" << p.x() << ", " << p.y() << ", " << p.theta() << ")";
}

} // namespace gpcal
