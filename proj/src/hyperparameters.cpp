#include "gpcal/hyperparameters.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

/// One scalar-output marginal likelihood problem.
struct OutputProblem
{
    const Eigen::MatrixXd* inputs = nullptr;
    Eigen::VectorXd targets;
    Eigen::VectorXd variances;
    KernelKind kind = KernelKind::Rbf;
    bool linear_mean = false;
};

struct OutputEval
{
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad_kernel;   // log sigma, log B diag
    Eigen::VectorXd grad_mean;     // C row
    Eigen::VectorXd c_row;         // profiled or supplied mean row
};

KernelSpec single_output_kernel(KernelKind kind, const RbfParams& p)
{
    KernelSpec k;
    k.kind = kind;
    k.rbf[0] = p;
    return k;
}

/// Evaluates the output likelihood. When `c_row` is empty and the problem
/// has a linear mean, the mean row is profiled out by GLS.
OutputEval evaluate_output(const OutputProblem& prob, const RbfParams& params,
                           std::optional<Eigen::VectorXd> c_row, bool with_grad,
                           bool allow_jitter)
{
    const Eigen::MatrixXd& x = *prob.inputs;
    const Eigen::Index n = x.rows();
    const Eigen::Index m = x.cols();
    const KernelSpec kspec = single_output_kernel(prob.kind, params);

    if (prob.kind == KernelKind::Linear && (c_row || !prob.linear_mean)) {
        // nothing to profile and no kernel gradient: use the shared factorization
        OutputEval out;
        out.c_row = c_row ? *c_row : Eigen::VectorXd::Zero(m);
        const Eigen::VectorXd r = prob.targets - x * out.c_row;
        const OutputFactor f = factorize_output(kspec, 0, x, prob.variances, r, allow_jitter);
        out.value = -0.5 * r.dot(f.alpha) - 0.5 * f.log_det -
                    0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
        if (with_grad && prob.linear_mean)
            out.grad_mean = f.weight_space ? f.weights : Eigen::VectorXd(x.transpose() * f.alpha);
        return out;
    }

    Eigen::MatrixXd k_rbf;
    Eigen::MatrixXd a = gram_matrix(kspec, 0, x);
    if (with_grad && kspec.has_rbf())
        k_rbf = kspec.has_linear() ? Eigen::MatrixXd(a - x * x.transpose()) : a;
    const double scale = a.diagonal().mean();
    a.diagonal() += prob.variances;

    Eigen::LLT<Eigen::MatrixXd> llt;
    factorize_with_jitter(a, scale, allow_jitter, llt);

    OutputEval out;
    if (prob.linear_mean) {
        if (c_row) {
            out.c_row = *c_row;
        } else {
            const Eigen::MatrixXd z = llt.matrixL().solve(x);
            const Eigen::VectorXd w = llt.matrixL().solve(prob.targets);
            out.c_row = z.colPivHouseholderQr().solve(w);
        }
    } else {
        out.c_row = Eigen::VectorXd::Zero(m);
    }

    const Eigen::VectorXd r = prob.targets - x * out.c_row;
    const Eigen::VectorXd alpha = llt.solve(r);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.value = -0.5 * r.dot(alpha) - 0.5 * log_det -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    if (!with_grad)
        return out;

    if (prob.linear_mean)
        out.grad_mean = x.transpose() * alpha;
    if (kspec.has_rbf()) {
        // dL/dp = 1/2 tr((alpha alpha^T - A^-1) dK/dp)
        Eigen::MatrixXd w = -llt.solve(Eigen::MatrixXd::Identity(n, n));
        w.noalias() += alpha * alpha.transpose();
        const Eigen::MatrixXd wk = w.cwiseProduct(k_rbf);
        out.grad_kernel.resize(1 + m);
        out.grad_kernel(0) = wk.sum();   // dK/dlog sigma = 2 K
        for (Eigen::Index d = 0; d < m; ++d) {
            const Eigen::VectorXd col = x.col(d);
            double acc = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double diff = col(i) - col(j);
                    acc += wk(i, j) * diff * diff;
                }
            out.grad_kernel(1 + d) = 0.25 * acc / params.length_diag(d);
        }
    }
    return out;
}

OutputProblem make_problem(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           const Eigen::MatrixXd& variances, int output, KernelKind kind,
                           bool linear_mean)
{
    OutputProblem p;
    p.inputs = &inputs;
    p.targets = targets.col(output);
    p.variances = variances.col(output);
    p.kind = kind;
    p.linear_mean = linear_mean;
    return p;
}

double stddev(const Eigen::VectorXd& v)
{
    if (v.size() < 2)
        return 0.0;
    return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

struct Box
{
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    Eigen::VectorXd clamp(const Eigen::VectorXd& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
};

RbfParams params_from_log(const Eigen::VectorXd& u)
{
    RbfParams p;
    p.sigma = std::exp(u(0));
    p.length_diag = u.tail(u.size() - 1).array().exp();
    return p;
}

struct AscentResult
{
    Eigen::VectorXd u;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

AscentResult gradient_ascent(const OutputProblem& prob, Eigen::VectorXd u, const Box& box,
                             const FitOptions& options)
{
    AscentResult res;
    auto eval = [&](const Eigen::VectorXd& v, bool grad) -> std::optional<OutputEval> {
        ++res.evaluations;
        try {
            auto e = evaluate_output(prob, params_from_log(v), std::nullopt, grad, true);
            if (!std::isfinite(e.value))
                return std::nullopt;
            return e;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };

    u = box.clamp(u);
    auto current = eval(u, true);
    if (!current)
        return res;
    double step = 1.0;
    for (int it = 0; it < options.max_iterations; ++it) {
        const Eigen::VectorXd& g = current->grad_kernel;
        const double gnorm = g.norm();
        if (!std::isfinite(gnorm) || gnorm <= options.gradient_tolerance * (1.0 + std::abs(current->value)))
            break;
        const Eigen::VectorXd dir = g / gnorm;
        bool accepted = false;
        while (step > 1e-10) {
            const Eigen::VectorXd trial = box.clamp(u + step * dir);
            const double gain = (trial - u).dot(g);
            if (gain <= 0.0) {
                step *= 0.5;
                continue;
            }
            auto cand = eval(trial, false);
            if (cand && cand->value >= current->value + 1e-4 * gain) {
                u = trial;
                current = eval(u, true);
                accepted = current.has_value();
                step = std::min(2.0 * step, 4.0);
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
    }
    if (current) {
        res.u = u;
        res.value = current->value;
    }
    return res;
}

Dataset subsample(const Dataset& dataset, int max_points)
{
    if (max_points <= 0 || static_cast<int>(dataset.size()) <= max_points)
        return dataset;
    Dataset out;
    out.reserve(static_cast<std::size_t>(max_points));
    const double stride = static_cast<double>(dataset.size()) / max_points;
    for (int i = 0; i < max_points; ++i)
        out.push_back(dataset[static_cast<std::size_t>(std::floor(i * stride))]);
    return out;
}

} // namespace

LmlGradient log_marginal_likelihood_gradient(const Dataset& dataset, const MeanSpec& mean,
                                             const KernelSpec& kernel)
{
    if (dataset.empty())
        throw InsufficientDataError("dataset is empty");
    validate(dataset);
    const int m = tick_dimension(dataset);
    validate(mean, m);
    validate(kernel, m);
    const Eigen::MatrixXd x = stack_ticks(dataset);
    const Eigen::MatrixXd y = stack_targets(dataset);
    const Eigen::MatrixXd v = stack_variances(dataset);
    const bool linear_mean = mean.kind == MeanKind::Linear;

    LmlGradient out;
    for (int i = 0; i < kOutputs; ++i) {
        const auto prob = make_problem(x, y, v, i, kernel.kind, linear_mean);
        const RbfParams p = kernel.has_rbf() ? kernel.rbf[static_cast<std::size_t>(i)] : RbfParams{};
        std::optional<Eigen::VectorXd> c;
        if (linear_mean)
            c = mean.C.row(i).transpose();
        const auto e = evaluate_output(prob, p, c, true, false);
        out.value += e.value;
        out.kernel[static_cast<std::size_t>(i)] = e.grad_kernel;
        out.mean[static_cast<std::size_t>(i)] = e.grad_mean;
    }
    return out;
}

Matrix3X profile_linear_mean(const Dataset& dataset, const KernelSpec& kernel)
{
    validate(dataset);
    const int m = tick_dimension(dataset);
    validate(kernel, m);
    const Eigen::MatrixXd x = stack_ticks(dataset);
    const Eigen::MatrixXd y = stack_targets(dataset);
    const Eigen::MatrixXd v = stack_variances(dataset);
    Matrix3X c(3, m);
    for (int i = 0; i < kOutputs; ++i) {
        const auto prob = make_problem(x, y, v, i, kernel.kind, true);
        const RbfParams p = kernel.has_rbf() ? kernel.rbf[static_cast<std::size_t>(i)] : RbfParams{};
        c.row(i) = evaluate_output(prob, p, std::nullopt, false, true).c_row.transpose();
    }
    return c;
}

FitResult fit_hyperparameters(const Dataset& dataset, MeanKind mean_kind, KernelKind kernel_kind,
                              const FitOptions& options)
{
    if (dataset.size() < 2)
        throw InsufficientDataError("fit_hyperparameters: need at least 2 samples");
    validate(dataset);
    const int m = tick_dimension(dataset);
    const bool linear_mean = mean_kind == MeanKind::Linear;

    FitResult result;
    result.kernel.kind = kernel_kind;
    result.mean.kind = mean_kind;

    if (kernel_kind == KernelKind::Linear) {
        if (linear_mean)
            result.mean.C = profile_linear_mean(dataset, result.kernel);
        try {
            result.log_likelihood = log_marginal_likelihood(dataset, result.mean, result.kernel);
        } catch (const NumericalError&) {
            result.log_likelihood = -std::numeric_limits<double>::infinity();
        }
        result.improved = true;
        return result;
    }

    const Dataset fit_set = subsample(dataset, options.max_points);
    const Eigen::MatrixXd x = stack_ticks(fit_set);
    const Eigen::MatrixXd y = stack_targets(fit_set);
    const Eigen::MatrixXd v = stack_variances(fit_set);

    Eigen::VectorXd spread(m);
    for (int d = 0; d < m; ++d) {
        spread(d) = stddev(x.col(d));
        if (!(spread(d) > 0.0))
            spread(d) = 1.0;
    }

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> log_factor(std::log(0.1), std::log(10.0));

    bool any_improved = false;
    Matrix3X c(3, m);
    for (int i = 0; i < kOutputs; ++i) {
        const auto prob = make_problem(x, y, v, i, kernel_kind, linear_mean);
        double scale_y = stddev(prob.targets);
        if (!(scale_y > 0.0))
            scale_y = 1e-3;

        Box box;
        box.lo.resize(1 + m);
        box.hi.resize(1 + m);
        box.lo(0) = std::log(1e-6 * scale_y);
        box.hi(0) = std::log(1e3 * scale_y);
        for (int d = 0; d < m; ++d) {
            box.lo(1 + d) = 2.0 * std::log(1e-2 * spread(d));
            box.hi(1 + d) = 2.0 * std::log(1e3 * spread(d));
        }

        Eigen::VectorXd init(1 + m);
        init(0) = std::log(scale_y);
        for (int d = 0; d < m; ++d)
            init(1 + d) = 2.0 * std::log(spread(d));

        double init_value = -std::numeric_limits<double>::infinity();
        try {
            init_value = evaluate_output(prob, params_from_log(init), std::nullopt, false, true).value;
        } catch (const NumericalError&) {
        }

        AscentResult best;
        best.u = init;
        best.value = init_value;
        for (int r = 0; r < std::max(1, options.restarts); ++r) {
            Eigen::VectorXd start = init;
            if (r > 0) {
                start(0) += log_factor(rng);
                for (int d = 0; d < m; ++d)
                    start(1 + d) += 2.0 * log_factor(rng);
            }
            auto res = gradient_ascent(prob, start, box, options);
            result.evaluations += res.evaluations;
            if (res.value > best.value) {
                best = res;
            }
        }
        if (best.value > init_value)
            any_improved = true;

        result.kernel.rbf[static_cast<std::size_t>(i)] = params_from_log(best.u);
        if (linear_mean)
            c.row(i) = evaluate_output(prob, params_from_log(best.u), std::nullopt, false, true)
                           .c_row.transpose();
    }
    if (linear_mean)
        result.mean.C = c;
    result.improved = any_improved;
    try {
        result.log_likelihood = log_marginal_likelihood(fit_set, result.mean, result.kernel);
    } catch (const NumericalError&) {
        result.log_likelihood = -std::numeric_limits<double>::infinity();
    }
    return result;
}

} // namespace gpcal
