#pragma once

#include <vector>

#include <Eigen/Core>

#include "gpcal/kinematics.hpp"
#include "gpcal/pose2d.hpp"

namespace gpcal {

/// One calibration edge: ticks accumulated over [t_j, t_k), the measured
/// sensor displacement over the same interval and its noise covariance.
struct DisplacementSample
{
    double t_j = 0.0;
    double t_k = 0.0;
    TickVector ticks;
    Pose2D s_hat;
    Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
};

using Dataset = std::vector<DisplacementSample>;

/// Throws ValidationError naming the offending row (0-based) when a sample
/// breaks t_k > t_j, has a non-symmetric or non-PSD covariance, or the
/// tick dimension differs across rows.
void validate(const Dataset& dataset);

/// Tick dimension shared by all samples; throws on an empty dataset.
int tick_dimension(const Dataset& dataset);

/// n x m matrix of stacked tick vectors.
Eigen::MatrixXd stack_ticks(const Dataset& dataset);

/// n x 3 matrix of stacked displacement targets (x, y, theta).
Eigen::MatrixXd stack_targets(const Dataset& dataset);

/// n x 3 matrix of per-axis noise variances (diagonal of each sigma).
Eigen::MatrixXd stack_variances(const Dataset& dataset);

} // namespace gpcal
