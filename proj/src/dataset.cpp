#include "gpcal/dataset.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpcal/errors.hpp"

namespace gpcal {

void validate(const Dataset& dataset)
{
    if (dataset.empty())
        return;
    const auto m = dataset.front().ticks.size();
    for (std::size_t row = 0; row < dataset.size(); ++row) {
        const auto& s = dataset[row];
        const auto where = [row] { return "dataset row " + std::to_string(row) + ": "; };
        if (s.ticks.size() != m)
            throw DimensionError(where() + "tick dimension " + std::to_string(s.ticks.size()) +
                                 " differs from " + std::to_string(m));
        if (!(s.t_k > s.t_j))
            throw ValidationError(where() + "t_k must exceed t_j");
        if (!s.ticks.allFinite() || !s.sigma.allFinite())
            throw ValidationError(where() + "non-finite value");
        for (int i = 0; i < 3; ++i)
            if (s.sigma(i, i) < 0.0)
                throw ValidationError(where() + "negative variance on axis " + std::to_string(i));
        const double scale = s.sigma.cwiseAbs().maxCoeff();
        if ((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ValidationError(where() + "covariance is not symmetric");
        const Eigen::Vector3d eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(
                                        s.sigma, Eigen::EigenvaluesOnly).eigenvalues();
        if (eig.minCoeff() < -1e-12 * scale)
            throw ValidationError(where() + "covariance is not positive semidefinite");
    }
}

int tick_dimension(const Dataset& dataset)
{
    if (dataset.empty())
        throw InsufficientDataError("dataset is empty");
    return static_cast<int>(dataset.front().ticks.size());
}

Eigen::MatrixXd stack_ticks(const Dataset& dataset)
{
    const int m = tick_dimension(dataset);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(dataset.size()), m);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].ticks.size() != m)
            throw DimensionError("dataset row " + std::to_string(i) + ": tick dimension mismatch");
        x.row(static_cast<Eigen::Index>(i)) = dataset[i].ticks.transpose();
    }
    return x;
}

Eigen::MatrixXd stack_targets(const Dataset& dataset)
{
    Eigen::MatrixXd y(static_cast<Eigen::Index>(dataset.size()), 3);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& p = dataset[i].s_hat;
        y.row(static_cast<Eigen::Index>(i)) << p.x(), p.y(), p.theta();
    }
    return y;
}

Eigen::MatrixXd stack_variances(const Dataset& dataset)
{
    Eigen::MatrixXd v(static_cast<Eigen::Index>(dataset.size()), 3);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        v.row(static_cast<Eigen::Index>(i)) = dataset[i].sigma.diagonal().transpose();
    return v;
}

} // namespace gpcal
