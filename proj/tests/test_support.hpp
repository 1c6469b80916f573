#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gpcal/dataset.hpp"
#include "gpcal/gp.hpp"
#include "gpcal/pose2d.hpp"

namespace gpcal::testing {

inline constexpr double kPi = 3.14159265358979323846;

inline double wrap(double a)
{
    while (a > kPi)
        a -= 2 * kPi;
    while (a <= -kPi)
        a += 2 * kPi;
    return a;
}

inline Pose2D random_pose(std::mt19937_64& rng, double span = 5.0)
{
    std::uniform_real_distribution<double> xy(-span, span);
    std::uniform_real_distribution<double> th(-kPi, kPi);
    return { xy(rng), xy(rng), th(rng) };
}

/// Small random dataset with diagonal covariances; ticks are O(1) so RBF
/// kernels with unit lengths see non-trivial correlations.
inline Dataset random_dataset(std::mt19937_64& rng, int n, int m, double tick_scale = 1.0)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> var(0.05, 0.5);
    Dataset d;
    for (int j = 0; j < n; ++j) {
        DisplacementSample s;
        s.t_j = 0.3 * j;
        s.t_k = 0.3 * (j + 1);
        s.ticks = TickVector(m);
        for (int k = 0; k < m; ++k)
            s.ticks(k) = tick_scale * g(rng);
        s.s_hat = Pose2D(g(rng), g(rng), 0.5 * g(rng));
        s.sigma = Eigen::Vector3d(var(rng), var(rng), var(rng)).asDiagonal();
        d.push_back(s);
    }
    return d;
}

/// Dense-inverse GP written straight from the textbook formulas. Shares no
/// code with the library beyond the MeanSpec/KernelSpec structs.
struct DenseGp
{
    struct Output
    {
        Eigen::MatrixXd A_inv;
        Eigen::VectorXd resid;
        double log_det = 0.0;
    };

    const Dataset& data;
    const MeanSpec& mean;
    const KernelSpec& kernel;
    std::vector<Output> outputs;

    static double target(const DisplacementSample& s, int i)
    {
        return i == 0 ? s.s_hat.x() : i == 1 ? s.s_hat.y() : s.s_hat.theta();
    }

    double k(int i, const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        double v = 0.0;
        if (kernel.kind != KernelKind::Rbf)
            v += a.dot(b);
        if (kernel.kind != KernelKind::Linear) {
            const auto& p = kernel.rbf[static_cast<std::size_t>(i)];
            double q = 0.0;
            for (int d = 0; d < a.size(); ++d)
                q += (a(d) - b(d)) * (a(d) - b(d)) / p.length_diag(d);
            v += p.sigma * p.sigma * std::exp(-0.5 * q);
        }
        return v;
    }

    double mu(int i, const Eigen::VectorXd& x) const
    {
        return mean.kind == MeanKind::Zero ? 0.0 : mean.C.row(i).dot(x);
    }

    DenseGp(const Dataset& d, const MeanSpec& m, const KernelSpec& kern) : data(d), mean(m), kernel(kern)
    {
        const int n = static_cast<int>(d.size());
        for (int i = 0; i < 3; ++i) {
            Eigen::MatrixXd A(n, n);
            Eigen::VectorXd r(n);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b)
                    A(a, b) = k(i, d[a].ticks, d[b].ticks);
                A(a, a) += d[a].sigma(i, i);
                r(a) = target(d[a], i) - mu(i, d[a].ticks);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            outputs.push_back({ lu.inverse(), r, std::log(std::abs(lu.determinant())) });
        }
    }

    double lml() const
    {
        const double n = static_cast<double>(data.size());
        double total = 0.0;
        for (const auto& o : outputs)
            total += -0.5 * o.resid.dot(o.A_inv * o.resid) - 0.5 * o.log_det -
                     0.5 * n * std::log(2 * kPi);
        return total;
    }

    void predict(const Eigen::VectorXd& x, Eigen::Vector3d& m, Eigen::Vector3d& var) const
    {
        const int n = static_cast<int>(data.size());
        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd ks(n);
            for (int a = 0; a < n; ++a)
                ks(a) = k(i, x, data[a].ticks);
            const auto& o = outputs[static_cast<std::size_t>(i)];
            m(i) = mu(i, x) + ks.dot(o.A_inv * o.resid);
            var(i) = k(i, x, x) - ks.dot(o.A_inv * ks);
        }
    }
};

/// Explicit Euler integration of the unicycle ODE driven by constant body
/// velocities (v, w) for unit time.
inline Pose2D euler_unicycle(double v, double w, int steps)
{
    double x = 0, y = 0, th = 0;
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        x += h * v * std::cos(th);
        y += h * v * std::sin(th);
        th += h * w;
    }
    return { x, y, th };
}

/// Same for a holonomic base with body twist (vx, vy, w).
inline Pose2D euler_holonomic(double vx, double vy, double w, int steps)
{
    double x = 0, y = 0, th = 0;
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        // midpoint heading keeps the oracle second-order accurate
        const double tm = th + 0.5 * h * w;
        x += h * (vx * std::cos(tm) - vy * std::sin(tm));
        y += h * (vx * std::sin(tm) + vy * std::cos(tm));
        th += h * w;
    }
    return { x, y, th };
}

} // namespace gpcal::testing
