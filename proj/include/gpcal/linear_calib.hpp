#pragma once

#include <vector>

#include <Eigen/Core>

#include "gpcal/dataset.hpp"
#include "gpcal/gp.hpp"

namespace gpcal {

inline constexpr double kDefaultHuberThreshold = 1.345;

struct LinearFitReport
{
    int iterations = 0;                 // max over output rows
    double objective = 0.0;             // summed Huber objective at the solution
    int outliers = 0;                   // standardized residuals beyond c
    /// Objective after each IRLS iteration, per output row (index 0 is the
    /// starting point).
    std::array<std::vector<double>, kOutputs> objective_trace;
};

/// Approximate linear sensor motion model f(d) = W d.
struct LinearModel
{
    Matrix3X W;
    double huber_c = kDefaultHuberThreshold;
    LinearFitReport report;
};

/// Huber loss: r^2 / 2 inside [-c, c], c (|r| - c / 2) outside.
double huber_loss(double r, double c);

/// Robust per-row regression of the displacement components on the ticks,
/// residuals standardized by sqrt of the covariance diagonal. Solved by IRLS
/// to a relative gradient norm of 1e-10 or 100 iterations.
LinearModel fit_linear(const Dataset& dataset, double c = kDefaultHuberThreshold);

/// Objective sum_j rho_c((s_j - w.d_j) / sigma_j) of one output row.
double huber_objective(const Eigen::MatrixXd& ticks, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& sigmas, const Eigen::VectorXd& w, double c);

Eigen::Vector3d predict_linear(const LinearModel& model, const TickVector& d_e);

} // namespace gpcal
