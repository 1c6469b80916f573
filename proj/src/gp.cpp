#include "gpcal/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

void expect_dim(const TickVector& x, Eigen::Index m, const char* what)
{
    if (x.size() != m)
        throw DimensionError(std::string(what) + ": tick dimension " + std::to_string(x.size()) +
                             ", expected " + std::to_string(m));
}

double rbf_value(const RbfParams& p, const TickVector& x, const TickVector& x2)
{
    const double q = ((x - x2).array().square() / p.length_diag.array()).sum();
    return p.sigma * p.sigma * std::exp(-0.5 * q);
}

Eigen::VectorXd mean_column(const MeanSpec& mean, int output, const Eigen::MatrixXd& inputs)
{
    if (mean.kind == MeanKind::Zero)
        return Eigen::VectorXd::Zero(inputs.rows());
    return inputs * mean.C.row(output).transpose();
}

double mean_diagonal(const Eigen::MatrixXd& k)
{
    return k.rows() > 0 ? k.diagonal().mean() : 0.0;
}

} // namespace

KernelSpec KernelSpec::rbf_shared(KernelKind kind, double sigma, const Eigen::VectorXd& length_diag)
{
    KernelSpec k;
    k.kind = kind;
    for (auto& p : k.rbf)
        p = { sigma, length_diag };
    return k;
}

void validate(const MeanSpec& mean, int tick_dim)
{
    if (mean.kind == MeanKind::Zero)
        return;
    if (mean.C.cols() != tick_dim)
        throw DimensionError("mean: C has " + std::to_string(mean.C.cols()) + " columns, expected " +
                             std::to_string(tick_dim));
    if (!mean.C.allFinite())
        throw ValidationError("mean: C must be finite");
}

void validate(const KernelSpec& kernel, int tick_dim)
{
    if (!kernel.has_rbf())
        return;
    for (const auto& p : kernel.rbf) {
        if (p.length_diag.size() != tick_dim)
            throw DimensionError("kernel: length-scale diagonal has " +
                                 std::to_string(p.length_diag.size()) + " entries, expected " +
                                 std::to_string(tick_dim));
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma))
            throw ValidationError("kernel: sigma must be positive");
        if (!(p.length_diag.array() > 0.0).all() || !p.length_diag.allFinite())
            throw ValidationError("kernel: length-scale entries must be positive");
    }
}

Eigen::Vector3d mean_eval(const MeanSpec& spec, const TickVector& x)
{
    if (spec.kind == MeanKind::Zero)
        return Eigen::Vector3d::Zero();
    expect_dim(x, spec.C.cols(), "mean_eval");
    return spec.C * x;
}

double kernel_value(const KernelSpec& spec, int output, const TickVector& x, const TickVector& x2)
{
    double k = 0.0;
    if (spec.has_rbf())
        k += rbf_value(spec.rbf[static_cast<std::size_t>(output)], x, x2);
    if (spec.has_linear())
        k += x.dot(x2);
    return k;
}

Eigen::Matrix3d kernel_eval(const KernelSpec& spec, const TickVector& x, const TickVector& x2)
{
    if (x.size() != x2.size())
        throw DimensionError("kernel_eval: input dimensions differ");
    validate(spec, static_cast<int>(x.size()));
    Eigen::Matrix3d k = Eigen::Matrix3d::Zero();
    for (int i = 0; i < kOutputs; ++i)
        k(i, i) = kernel_value(spec, i, x, x2);
    return k;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, int output, const Eigen::MatrixXd& inputs)
{
    const Eigen::Index n = inputs.rows();
    Eigen::MatrixXd k(n, n);
    if (spec.has_linear())
        k.noalias() = inputs * inputs.transpose();
    else
        k.setZero();
    if (spec.has_rbf()) {
        const auto& p = spec.rbf[static_cast<std::size_t>(output)];
        const Eigen::MatrixXd scaled = inputs * p.length_diag.cwiseSqrt().cwiseInverse().asDiagonal();
        const Eigen::VectorXd sq = scaled.rowwise().squaredNorm();
        const double s2 = p.sigma * p.sigma;
        Eigen::MatrixXd cross = scaled * scaled.transpose();
        for (Eigen::Index j = 0; j < n; ++j) {
            k(j, j) += s2;
            for (Eigen::Index i = j + 1; i < n; ++i) {
                const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * cross(i, j));
                const double v = s2 * std::exp(-0.5 * d2);
                k(i, j) += v;
                k(j, i) += v;
            }
        }
    }
    return k;
}

double factorize_with_jitter(const Eigen::MatrixXd& a, double kernel_scale, bool allow_jitter,
                             Eigen::LLT<Eigen::MatrixXd>& llt)
{
    llt.compute(a);
    if (llt.info() == Eigen::Success)
        return 0.0;
    if (allow_jitter) {
        double scale = kernel_scale > 0.0 ? kernel_scale : mean_diagonal(a);
        if (!(scale > 0.0))
            scale = 1.0;
        for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
            const double jitter = rel * scale;
            Eigen::MatrixXd b = a;
            b.diagonal().array() += jitter;
            llt.compute(b);
            if (llt.info() == Eigen::Success)
                return jitter;
        }
    }
    throw SingularityError(
        "K + Sigma is not positive definite; add noise or enable jitter (duplicate inputs "
        "with zero noise make K singular)");
}

GpModel::GpModel(MeanSpec mean, KernelSpec kernel, Eigen::MatrixXd inputs,
                 std::array<OutputFactor, kOutputs> outputs)
    : mean_(std::move(mean)), kernel_(std::move(kernel)), inputs_(std::move(inputs)),
      outputs_(std::move(outputs))
{
}

OutputFactor factorize_output(const KernelSpec& kernel, int output, const Eigen::MatrixXd& inputs,
                              const Eigen::VectorXd& noise_var, const Eigen::VectorXd& resid,
                              bool allow_jitter)
{
    OutputFactor out;
    out.noise_var = noise_var;
    if (kernel.kind == KernelKind::Linear && (noise_var.array() > 0.0).all()) {
        // Woodbury: (X X^T + S)^-1 = S^-1 - S^-1 X P^-1 X^T S^-1, P = I + X^T S^-1 X
        const Eigen::VectorXd inv_v = noise_var.cwiseInverse();
        const Eigen::Index m = inputs.cols();
        Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m);
        p.noalias() += inputs.transpose() * inv_v.asDiagonal() * inputs;
        out.llt.compute(p);
        if (out.llt.info() != Eigen::Success)
            throw SingularityError("linear kernel: weight-space system is not positive definite");
        out.weight_space = true;
        out.weights = out.llt.solve(inputs.transpose() * resid.cwiseProduct(inv_v));
        out.alpha = (resid - inputs * out.weights).cwiseProduct(inv_v);
        out.log_det = noise_var.array().log().sum() +
                      2.0 * out.llt.matrixLLT().diagonal().array().log().sum();
        return out;
    }
    Eigen::MatrixXd a = gram_matrix(kernel, output, inputs);
    const double scale = mean_diagonal(a);
    a.diagonal() += noise_var;
    out.jitter = factorize_with_jitter(a, scale, allow_jitter, out.llt);
    out.alpha = out.llt.solve(resid);
    out.log_det = 2.0 * out.llt.matrixLLT().diagonal().array().log().sum();
    return out;
}

GpModel gp_train(const Dataset& dataset, const MeanSpec& mean, const KernelSpec& kernel,
                 const GpOptions& options)
{
    if (dataset.empty())
        throw InsufficientDataError("gp_train: dataset is empty");
    validate(dataset);
    const int m = tick_dimension(dataset);
    validate(mean, m);
    validate(kernel, m);

    const Eigen::MatrixXd inputs = stack_ticks(dataset);
    const Eigen::MatrixXd targets = stack_targets(dataset);
    const Eigen::MatrixXd variances = stack_variances(dataset);
    std::array<OutputFactor, kOutputs> outputs;
    for (int i = 0; i < kOutputs; ++i) {
        auto& out = outputs[static_cast<std::size_t>(i)];
        out = factorize_output(kernel, i, inputs, variances.col(i),
                               targets.col(i) - mean_column(mean, i, inputs), options.allow_jitter);
        if (!out.alpha.allFinite())
            throw SingularityError("gp_train: non-finite alpha");
    }
    return GpModel(mean, kernel, inputs, std::move(outputs));
}

GpModel gp_restore(const MeanSpec& mean, const KernelSpec& kernel, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& noise_var, const Eigen::MatrixXd& alpha,
                   const Eigen::Vector3d& jitter, const Eigen::MatrixXd* weights)
{
    const Eigen::Index n = inputs.rows();
    if (noise_var.rows() != n || noise_var.cols() != kOutputs || alpha.rows() != n ||
        alpha.cols() != kOutputs)
        throw DimensionError("gp_restore: inconsistent array shapes");
    if (weights && (weights->rows() != inputs.cols() || weights->cols() != kOutputs))
        throw DimensionError("gp_restore: weights must be m x 3");
    validate(mean, static_cast<int>(inputs.cols()));
    validate(kernel, static_cast<int>(inputs.cols()));
    std::array<OutputFactor, kOutputs> outputs;
    for (int i = 0; i < kOutputs; ++i) {
        auto& out = outputs[static_cast<std::size_t>(i)];
        // the residual only feeds alpha, which is replaced by the stored one
        out = factorize_output(kernel, i, inputs, noise_var.col(i) + Eigen::VectorXd::Constant(n, jitter(i)),
                               Eigen::VectorXd::Zero(n), false);
        out.noise_var = noise_var.col(i);
        out.jitter = jitter(i);
        out.alpha = alpha.col(i);
        if (out.weight_space)
            out.weights = weights ? Eigen::VectorXd(weights->col(i))
                                  : Eigen::VectorXd(inputs.transpose() * out.alpha);
    }
    return GpModel(mean, kernel, inputs, std::move(outputs));
}

GpPrediction gp_predict(const GpModel& model, const TickVector& d_e, bool want_variance)
{
    expect_dim(d_e, model.tick_dim(), "gp_predict");
    const Eigen::Index n = model.size();
    GpPrediction pred;
    pred.mean = mean_eval(model.mean(), d_e);
    Eigen::VectorXd k_e(n);
    for (int i = 0; i < kOutputs; ++i) {
        const auto& out = model.output(i);
        if (out.weight_space) {
            pred.mean(i) += d_e.dot(out.weights);
            if (want_variance)
                pred.cov(i, i) = out.llt.matrixL().solve(d_e).squaredNorm();
            continue;
        }
        for (Eigen::Index j = 0; j < n; ++j)
            k_e(j) = kernel_value(model.kernel(), i, d_e, model.inputs().row(j).transpose());
        pred.mean(i) += k_e.dot(out.alpha);
        if (want_variance) {
            const Eigen::VectorXd v = out.llt.matrixL().solve(k_e);
            const double var = kernel_value(model.kernel(), i, d_e, d_e) - v.squaredNorm();
            pred.cov(i, i) = std::max(0.0, var);
        }
    }
    return pred;
}

double log_marginal_likelihood(const Dataset& dataset, const MeanSpec& mean,
                               const KernelSpec& kernel)
{
    const GpModel model = gp_train(dataset, mean, kernel, GpOptions{ false });
    const Eigen::MatrixXd targets = stack_targets(dataset);
    const double n = static_cast<double>(model.size());
    double lml = 0.0;
    for (int i = 0; i < kOutputs; ++i) {
        const auto& out = model.output(i);
        const Eigen::VectorXd r = targets.col(i) - mean_column(mean, i, model.inputs());
        lml += -0.5 * r.dot(out.alpha) - 0.5 * out.log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }
    return lml;
}

} // namespace gpcal
