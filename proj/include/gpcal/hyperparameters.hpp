#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "gpcal/dataset.hpp"
#include "gpcal/gp.hpp"

namespace gpcal {

/// Log marginal likelihood and its gradient.
///
/// kernel[i] holds d/d(log sigma_i, log B_i[0], ..., log B_i[m-1]) and is
/// empty when the kernel has no RBF part. mean[i] holds d/dC(i, :) and is
/// empty for a zero mean.
struct LmlGradient
{
    double value = 0.0;
    std::array<Eigen::VectorXd, kOutputs> kernel;
    std::array<Eigen::VectorXd, kOutputs> mean;
};

LmlGradient log_marginal_likelihood_gradient(const Dataset& dataset, const MeanSpec& mean,
                                             const KernelSpec& kernel);

/// C maximizing the marginal likelihood for a fixed kernel (generalized
/// least squares against K + Sigma, per output).
Matrix3X profile_linear_mean(const Dataset& dataset, const KernelSpec& kernel);

struct FitOptions
{
    std::uint64_t seed = 0;
    int restarts = 8;
    int max_iterations = 150;
    /// Hyperparameters are selected on at most this many evenly spaced samples.
    int max_points = 400;
    double gradient_tolerance = 1e-6;
};

struct FitResult
{
    MeanSpec mean;
    KernelSpec kernel;
    double log_likelihood = 0.0;
    /// False when no start improved on the initial guess; mean/kernel are
    /// then the initial guess.
    bool improved = true;
    int evaluations = 0;
};

/// Maximizes the log marginal likelihood over log sigma_i and log diag B_i
/// by projected gradient ascent with backtracking from several starts. A
/// linear mean is profiled out in closed form at every step, which gives
/// the joint optimum over C.
FitResult fit_hyperparameters(const Dataset& dataset, MeanKind mean_kind, KernelKind kernel_kind,
                              const FitOptions& options = {});

} // namespace gpcal
