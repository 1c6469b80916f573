#include "gpcal/linear_calib.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kGradientTolerance = 1e-10;

void check_rank(const Eigen::MatrixXd& design)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = 1e-10 * std::max<double>(1.0, static_cast<double>(design.rows())) *
                       (sv.size() > 0 ? sv(0) : 0.0);
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) <= tol) {
            const Eigen::VectorXd null = svd.matrixV().col(k);
            std::ostringstream msg;
            msg << "rank-deficient tick design: ticks do not span R^" << design.cols()
                << "; null direction [" << null.transpose() << "]";
            throw RankError(msg.str());
        }
    }
}

struct RowFit
{
    Eigen::VectorXd w;
    int iterations = 0;
    double objective = 0.0;
    int outliers = 0;
    std::vector<double> trace;
};

RowFit fit_row(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& sigma,
               double c)
{
    // Standardized design: rows divided by sigma.
    const Eigen::MatrixXd xs = sigma.cwiseInverse().asDiagonal() * x;
    const Eigen::VectorXd ys = y.cwiseQuotient(sigma);

    RowFit fit;
    fit.w = xs.colPivHouseholderQr().solve(ys);
    fit.trace.push_back(huber_objective(x, y, sigma, fit.w, c));

    Eigen::VectorXd u = ys - xs * fit.w;
    for (int it = 0; it < kMaxIterations; ++it) {
        // psi(u) and the gradient of the objective in w
        const Eigen::VectorXd psi = u.array().max(-c).min(c).matrix();
        const Eigen::VectorXd grad = -xs.transpose() * psi;
        // relative to the magnitude of the summed terms
        const double grad_scale = (xs.cwiseAbs().transpose() * psi.cwiseAbs()).norm();
        if (grad.norm() <= kGradientTolerance * grad_scale)
            break;

        Eigen::VectorXd weights(u.size());
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            const double a = std::abs(u(j));
            weights(j) = a <= c ? 1.0 : c / a;
        }
        const Eigen::VectorXd sw = weights.cwiseSqrt();
        const Eigen::VectorXd w_new =
            (sw.asDiagonal() * xs).colPivHouseholderQr().solve(sw.cwiseProduct(ys));
        ++fit.iterations;
        const bool stalled = (w_new - fit.w).norm() <= 1e-15 * std::max(1.0, fit.w.norm());
        fit.w = w_new;
        u = ys - xs * fit.w;
        fit.trace.push_back(huber_objective(x, y, sigma, fit.w, c));
        if (stalled)
            break;
    }
    fit.objective = fit.trace.back();
    fit.outliers = static_cast<int>((u.array().abs() > c).count());
    return fit;
}

} // namespace

double huber_loss(double r, double c)
{
    const double a = std::abs(r);
    return a <= c ? 0.5 * r * r : c * (a - 0.5 * c);
}

double huber_objective(const Eigen::MatrixXd& ticks, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& sigmas, const Eigen::VectorXd& w, double c)
{
    const Eigen::VectorXd u = (targets - ticks * w).cwiseQuotient(sigmas);
    double total = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j)
        total += huber_loss(u(j), c);
    return total;
}

LinearModel fit_linear(const Dataset& dataset, double c)
{
    if (!(c > 0.0))
        throw ValidationError("huber threshold must be positive");
    if (dataset.empty())
        throw InsufficientDataError("fit_linear: dataset is empty");
    validate(dataset);
    const int m = tick_dimension(dataset);
    if (static_cast<int>(dataset.size()) < m)
        throw InsufficientDataError("fit_linear: need at least " + std::to_string(m) +
                                    " samples, got " + std::to_string(dataset.size()));

    const Eigen::MatrixXd x = stack_ticks(dataset);
    const Eigen::MatrixXd y = stack_targets(dataset);
    const Eigen::MatrixXd sig = stack_variances(dataset).cwiseSqrt();
    if (!(sig.array() > 0.0).all())
        throw ValidationError("fit_linear: every per-axis standard deviation must be positive");
    check_rank(x);

    LinearModel model;
    model.huber_c = c;
    model.W.resize(3, m);
    for (int i = 0; i < kOutputs; ++i) {
        RowFit row = fit_row(x, y.col(i), sig.col(i), c);
        model.W.row(i) = row.w.transpose();
        model.report.iterations = std::max(model.report.iterations, row.iterations);
        model.report.objective += row.objective;
        model.report.outliers += row.outliers;
        model.report.objective_trace[static_cast<std::size_t>(i)] = std::move(row.trace);
    }
    return model;
}

Eigen::Vector3d predict_linear(const LinearModel& model, const TickVector& d_e)
{
    if (d_e.size() != model.W.cols())
        throw DimensionError("predict_linear: tick dimension " + std::to_string(d_e.size()) +
                             ", expected " + std::to_string(model.W.cols()));
    return model.W * d_e;
}

} // namespace gpcal
