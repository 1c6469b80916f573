#pragma once

#include <cstddef>
#include <vector>

#include "gpcal/pose2d.hpp"

namespace gpcal {

struct TimedPose
{
    double t = 0.0;
    Pose2D pose;
};

using Trajectory = std::vector<TimedPose>;

/// Estimated and reference poses paired index by index.
struct TrajectoryPair
{
    std::vector<Pose2D> estimated;
    std::vector<Pose2D> reference;
};

/// Pairs each estimated pose with the reference pose nearest in time,
/// dropping poses with no reference within `tolerance` seconds. The
/// reference must be sorted by time.
TrajectoryPair align(const Trajectory& estimated, const Trajectory& reference, double tolerance);

/// Relative pose error: RMS translation of (-)(x^_k (-) x^_k+1) (+) (x_k (-) x_k+1).
double rpe(const TrajectoryPair& pair);

/// Absolute trajectory error: RMS translation of (-)x^_k (+) x_k. No
/// pre-alignment; both trajectories are assumed to share their origin.
double ate(const TrajectoryPair& pair);

struct MetricsReport
{
    std::size_t poses = 0;
    double ate_m = 0.0;
    double rpe_m = 0.0;
    double ate_rot_rad = 0.0;   // diagnostic, RMS of the rotational parts
    double rpe_rot_rad = 0.0;
};

MetricsReport compute_metrics(const TrajectoryPair& pair);

} // namespace gpcal
