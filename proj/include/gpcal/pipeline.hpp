#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "gpcal/dataset.hpp"
#include "gpcal/gp.hpp"
#include "gpcal/hyperparameters.hpp"
#include "gpcal/linear_calib.hpp"
#include "gpcal/metrics.hpp"
#include "gpcal/simulator.hpp"

namespace gpcal {

enum class ModelKind { CgpZeroRbf, CgpLinRbf, CgpZeroLin, CgpZeroSum, CgpLinSum, LinearHuber };

std::string_view to_string(ModelKind kind);
/// Accepts the tags produced by to_string(); throws ValidationError otherwise.
ModelKind parse_model_kind(std::string_view tag);
bool is_gp(ModelKind kind);
MeanKind mean_kind_of(ModelKind kind);
KernelKind kernel_kind_of(ModelKind kind);

// ---------------------------------------------------------------------------
// Edge selection

struct Edge
{
    double t_j = 0.0;
    double t_k = 0.0;
    TickVector ticks;
};

struct EdgeSelection
{
    std::vector<Edge> edges;
    std::size_t rejected_spacing = 0;      // event pairs outside [0.9T, 1.1T]
    std::size_t dropped_no_odometry = 0;   // no encoder reading within T/2 of an endpoint
};

/// Incremental edge selector. Odometry readings and sensor event times may
/// be pushed in arbitrary chunks (each stream time-sorted); the result is
/// identical to a single batch call.
class EdgeSelector
{
public:
    explicit EdgeSelector(double interval, int stride = 1);

    void push_odometry(const OdometryReading& reading);
    void push_event(double t);
    /// Resolves all pending events and returns the selection.
    EdgeSelection finish();

private:
    struct Resolved
    {
        double t = 0.0;
        std::optional<Eigen::VectorXd> counters;
    };

    void resolve_ready(bool final);
    void emit(const Resolved& event);

    double interval_;
    int stride_;
    std::vector<OdometryReading> odometry_;
    std::vector<double> pending_;
    std::optional<Resolved> previous_;
    std::size_t accepted_ = 0;
    EdgeSelection out_;
    double last_event_ = -std::numeric_limits<double>::infinity();
};

/// Consecutive sensor-event pairs spaced within +-10% of T, with ticks taken
/// from the temporally closest encoder readings. Every stride-th accepted
/// edge is kept. Throws on empty or non-monotone logs.
EdgeSelection select_edges(const std::vector<OdometryReading>& odometry,
                           const std::vector<double>& sensor_times, double interval,
                           int stride = 1);

/// Keeps every stride-th sample.
Dataset apply_stride(const Dataset& dataset, int stride);

// ---------------------------------------------------------------------------
// Training and prediction

struct RunSpec
{
    ModelKind kind = ModelKind::LinearHuber;
    double huber_c = kDefaultHuberThreshold;
    int edge_stride = 1;
    FitOptions fit;
};

using TrainedModel = std::variant<GpModel, LinearModel>;

/// A trained model together with the settings that produced it.
class CalibrationRun
{
public:
    CalibrationRun(RunSpec spec, TrainedModel model, std::size_t training_size,
                   double train_seconds, std::optional<FitResult> fit = std::nullopt);

    ModelKind kind() const { return spec_.kind; }
    const RunSpec& spec() const { return spec_; }
    const TrainedModel& model() const { return model_; }
    std::size_t training_size() const { return training_size_; }
    double train_seconds() const { return train_seconds_; }
    const std::optional<FitResult>& fit() const { return fit_; }
    int tick_dim() const;

private:
    RunSpec spec_;
    TrainedModel model_;
    std::size_t training_size_ = 0;
    double train_seconds_ = 0.0;
    std::optional<FitResult> fit_;
};

CalibrationRun train(const Dataset& training, const RunSpec& spec);

struct DisplacementPrediction
{
    Pose2D mean;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();   // zero for the linear model
};

DisplacementPrediction predict_displacement(const CalibrationRun& run, const TickVector& ticks,
                                            bool want_variance = true);

std::vector<DisplacementPrediction> predict_displacements(const CalibrationRun& run,
                                                          std::span<const TickVector> ticks,
                                                          bool want_variance = true);

/// Sensor displacement predicted by a parametric drive model for a known
/// sensor mount.
Pose2D nominal_sensor_displacement(const DriveModel& model, const Pose2D& mount,
                                   const TickVector& ticks);

/// Left fold of oplus: [start, start+d0, start+d0+d1, ...].
std::vector<Pose2D> integrate_trajectory(const Pose2D& start, std::span<const Pose2D> displacements);

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluationResult
{
    Trajectory predicted;
    Trajectory reference;                 // empty without truth
    std::optional<MetricsReport> metrics;
};

/// Chains predicted displacements over the test edges. With a reference,
/// the chain starts at the reference pose nearest the first edge and the
/// pair is aligned within T/2 before computing metrics; otherwise it starts
/// at the origin and metrics are skipped.
EvaluationResult evaluate_run(const CalibrationRun& run, const Dataset& test,
                              const Trajectory* reference);

} // namespace gpcal
