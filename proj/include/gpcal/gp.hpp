#pragma once

#include <array>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpcal/dataset.hpp"
#include "gpcal/kinematics.hpp"

namespace gpcal {

/// Number of regression outputs (x, y, theta).
inline constexpr int kOutputs = 3;

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

enum class MeanKind { Zero, Linear };

/// Prior mean mu(x): zero, or C x with C a 3 x m matrix.
struct MeanSpec
{
    MeanKind kind = MeanKind::Zero;
    Matrix3X C;

    static MeanSpec zero() { return {}; }
    static MeanSpec linear(Matrix3X c) { return { MeanKind::Linear, std::move(c) }; }
};

enum class KernelKind { Rbf, Linear, Sum };

/// Squared-exponential hyperparameters for one output: signal std sigma and
/// the diagonal of the length-scale matrix B (squared lengths).
struct RbfParams
{
    double sigma = 1.0;
    Eigen::VectorXd length_diag;
};

/// Diagonal multi-output kernel. Output i uses rbf[i] for the RBF part;
/// the Linear part is the plain inner product and has no parameters.
struct KernelSpec
{
    KernelKind kind = KernelKind::Rbf;
    std::array<RbfParams, kOutputs> rbf;

    bool has_rbf() const { return kind != KernelKind::Linear; }
    bool has_linear() const { return kind != KernelKind::Rbf; }

    static KernelSpec linear() { return { KernelKind::Linear, {} }; }
    /// Same sigma and B for all outputs.
    static KernelSpec rbf_shared(KernelKind kind, double sigma, const Eigen::VectorXd& length_diag);
};

void validate(const MeanSpec& mean, int tick_dim);
void validate(const KernelSpec& kernel, int tick_dim);

Eigen::Vector3d mean_eval(const MeanSpec& spec, const TickVector& x);

/// Scalar kernel value for one output.
double kernel_value(const KernelSpec& spec, int output, const TickVector& x, const TickVector& x2);

/// Diagonal 3x3 kernel matrix kappa(x, x2).
Eigen::Matrix3d kernel_eval(const KernelSpec& spec, const TickVector& x, const TickVector& x2);

/// n x n Gram matrix of one output over the rows of inputs.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, int output, const Eigen::MatrixXd& inputs);

struct GpOptions
{
    /// On factorization failure add growing diagonal jitter before giving up.
    bool allow_jitter = true;
};

/// Factorized training state of one scalar output GP.
///
/// A pure linear kernel with positive noise is solved in weight space:
/// llt then factors P = I + X^T Sigma^-1 X (m x m) and `weights` holds the
/// posterior weight mean X^T alpha. K = X X^T on raw tick counts is far too
/// ill-conditioned for an n x n Cholesky at realistic noise levels.
struct OutputFactor
{
    Eigen::LLT<Eigen::MatrixXd> llt;   // of K_i + Sigma_i (+ jitter I), or P in weight space
    Eigen::VectorXd alpha;             // (K_i + Sigma_i)^-1 (s_i - mu_i)
    Eigen::VectorXd noise_var;         // per-sample variance of this output
    double jitter = 0.0;
    double log_det = 0.0;              // log det(K_i + Sigma_i + jitter I)
    bool weight_space = false;
    Eigen::VectorXd weights;           // weight space only
};

/// Factorizes one output for residuals r = s_i - mu_i, choosing the weight
/// space form for a linear kernel when every noise variance is positive.
OutputFactor factorize_output(const KernelSpec& kernel, int output, const Eigen::MatrixXd& inputs,
                              const Eigen::VectorXd& noise_var, const Eigen::VectorXd& resid,
                              bool allow_jitter);

/// Trained CGP state. Three independent scalar GPs share the training inputs.
class GpModel
{
public:
    GpModel(MeanSpec mean, KernelSpec kernel, Eigen::MatrixXd inputs,
            std::array<OutputFactor, kOutputs> outputs);

    const MeanSpec& mean() const { return mean_; }
    const KernelSpec& kernel() const { return kernel_; }
    const Eigen::MatrixXd& inputs() const { return inputs_; }
    const OutputFactor& output(int i) const { return outputs_[static_cast<std::size_t>(i)]; }
    int tick_dim() const { return static_cast<int>(inputs_.cols()); }
    int size() const { return static_cast<int>(inputs_.rows()); }

private:
    MeanSpec mean_;
    KernelSpec kernel_;
    Eigen::MatrixXd inputs_;
    std::array<OutputFactor, kOutputs> outputs_;
};

/// Stacks the dataset, factorizes K + Sigma per output and precomputes alpha.
/// Off-diagonal entries of each sample covariance are not used.
GpModel gp_train(const Dataset& dataset, const MeanSpec& mean, const KernelSpec& kernel,
                 const GpOptions& options = {});

/// Rebuilds a model from stored training inputs, noise variances and alpha
/// (n x 3), refactorizing with the recorded jitter. `weights` (m x 3) restores
/// the weight-space mean of linear-kernel outputs; when absent it is
/// recomputed as X^T alpha.
GpModel gp_restore(const MeanSpec& mean, const KernelSpec& kernel, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& noise_var, const Eigen::MatrixXd& alpha,
                   const Eigen::Vector3d& jitter, const Eigen::MatrixXd* weights = nullptr);

struct GpPrediction
{
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

GpPrediction gp_predict(const GpModel& model, const TickVector& d_e, bool want_variance);

/// Log marginal likelihood summed over the three outputs.
double log_marginal_likelihood(const Dataset& dataset, const MeanSpec& mean,
                               const KernelSpec& kernel);

/// Cholesky of a symmetric matrix. On failure, and when allowed, retries with
/// diagonal jitter 1e-10 * kernel_scale escalating x10 up to 1e-6 *
/// kernel_scale. Returns the jitter used; throws SingularityError otherwise.
double factorize_with_jitter(const Eigen::MatrixXd& a, double kernel_scale, bool allow_jitter,
                             Eigen::LLT<Eigen::MatrixXd>& llt);

} // namespace gpcal
