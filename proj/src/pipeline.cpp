#include "gpcal/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

struct KindInfo
{
    ModelKind kind;
    std::string_view tag;
    MeanKind mean;
    KernelKind kernel;
};

constexpr std::array<KindInfo, 6> kKinds{ {
    { ModelKind::CgpZeroRbf, "cgp_zero_rbf", MeanKind::Zero, KernelKind::Rbf },
    { ModelKind::CgpLinRbf, "cgp_lin_rbf", MeanKind::Linear, KernelKind::Rbf },
    { ModelKind::CgpZeroLin, "cgp_zero_lin", MeanKind::Zero, KernelKind::Linear },
    { ModelKind::CgpZeroSum, "cgp_zero_sum", MeanKind::Zero, KernelKind::Sum },
    { ModelKind::CgpLinSum, "cgp_lin_sum", MeanKind::Linear, KernelKind::Sum },
    { ModelKind::LinearHuber, "linear_huber", MeanKind::Zero, KernelKind::Linear },
} };

const KindInfo& info(ModelKind kind)
{
    for (const auto& k : kKinds)
        if (k.kind == kind)
            return k;
    throw ValidationError("unknown model kind");
}

double median_interval(const Dataset& dataset)
{
    std::vector<double> d;
    d.reserve(dataset.size());
    for (const auto& s : dataset)
        d.push_back(s.t_k - s.t_j);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
}

} // namespace

std::string_view to_string(ModelKind kind) { return info(kind).tag; }

ModelKind parse_model_kind(std::string_view tag)
{
    for (const auto& k : kKinds)
        if (k.tag == tag)
            return k.kind;
    throw ValidationError("unknown model kind '" + std::string(tag) + "'");
}

bool is_gp(ModelKind kind) { return kind != ModelKind::LinearHuber; }
MeanKind mean_kind_of(ModelKind kind) { return info(kind).mean; }
KernelKind kernel_kind_of(ModelKind kind) { return info(kind).kernel; }

// ---------------------------------------------------------------------------

EdgeSelector::EdgeSelector(double interval, int stride)
    : interval_(interval), stride_(stride)
{
    if (!(interval > 0.0))
        throw ValidationError("edge selection: interval must be positive");
    if (stride < 1)
        throw ValidationError("edge selection: stride must be >= 1");
}

void EdgeSelector::push_odometry(const OdometryReading& reading)
{
    if (!odometry_.empty()) {
        if (!(reading.t > odometry_.back().t))
            throw ValidationError("odometry timestamps are not strictly increasing at t=" +
                                  std::to_string(reading.t));
        if (reading.counters.size() != odometry_.back().counters.size())
            throw DimensionError("odometry counter dimension changed at t=" +
                                 std::to_string(reading.t));
    }
    odometry_.push_back(reading);
    resolve_ready(false);
}

void EdgeSelector::push_event(double t)
{
    if (!(t > last_event_))
        throw ValidationError("sensor event timestamps are not strictly increasing at t=" +
                              std::to_string(t));
    last_event_ = t;
    pending_.push_back(t);
    resolve_ready(false);
}

EdgeSelection EdgeSelector::finish()
{
    resolve_ready(true);
    return out_;
}

void EdgeSelector::resolve_ready(bool final)
{
    const double tol = 0.5 * interval_;
    std::size_t done = 0;
    for (; done < pending_.size(); ++done) {
        const double t = pending_[done];
        // A later reading can only matter while it could still fall within tolerance.
        if (!final && (odometry_.empty() || odometry_.back().t <= t + tol))
            break;
        Resolved ev{ t, std::nullopt };
        auto it = std::lower_bound(odometry_.begin(), odometry_.end(), t,
                                   [](const OdometryReading& r, double x) { return r.t < x; });
        const OdometryReading* best = nullptr;
        if (it != odometry_.end())
            best = &*it;
        if (it != odometry_.begin()) {
            const OdometryReading* prev = &*std::prev(it);
            if (!best || std::abs(prev->t - t) <= std::abs(best->t - t))
                best = prev;
        }
        if (best && std::abs(best->t - t) <= tol)
            ev.counters = best->counters;
        emit(ev);
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(done));
}

void EdgeSelector::emit(const Resolved& event)
{
    if (previous_) {
        const double spacing = event.t - previous_->t;
        if (spacing < 0.9 * interval_ || spacing > 1.1 * interval_) {
            ++out_.rejected_spacing;
        } else if (!previous_->counters || !event.counters) {
            ++out_.dropped_no_odometry;
        } else {
            if (accepted_ % static_cast<std::size_t>(stride_) == 0)
                out_.edges.push_back({ previous_->t, event.t, *event.counters - *previous_->counters });
            ++accepted_;
        }
    }
    previous_ = event;
}

EdgeSelection select_edges(const std::vector<OdometryReading>& odometry,
                           const std::vector<double>& sensor_times, double interval, int stride)
{
    if (odometry.empty())
        throw ValidationError("edge selection: odometry log is empty");
    if (sensor_times.empty())
        throw ValidationError("edge selection: sensor event log is empty");
    EdgeSelector selector(interval, stride);
    for (const auto& r : odometry)
        selector.push_odometry(r);
    for (double t : sensor_times)
        selector.push_event(t);
    return selector.finish();
}

Dataset apply_stride(const Dataset& dataset, int stride)
{
    if (stride < 1)
        throw ValidationError("edge stride must be >= 1");
    if (stride == 1)
        return dataset;
    Dataset out;
    for (std::size_t i = 0; i < dataset.size(); i += static_cast<std::size_t>(stride))
        out.push_back(dataset[i]);
    return out;
}

// ---------------------------------------------------------------------------

CalibrationRun::CalibrationRun(RunSpec spec, TrainedModel model, std::size_t training_size,
                               double train_seconds, std::optional<FitResult> fit)
    : spec_(std::move(spec)), model_(std::move(model)), training_size_(training_size),
      train_seconds_(train_seconds), fit_(std::move(fit))
{
    if (is_gp(spec_.kind) != std::holds_alternative<GpModel>(model_))
        throw ValidationError("model kind does not match the trained model type");
}

int CalibrationRun::tick_dim() const
{
    if (const auto* gp = std::get_if<GpModel>(&model_))
        return gp->tick_dim();
    return static_cast<int>(std::get<LinearModel>(model_).W.cols());
}

CalibrationRun train(const Dataset& training_in, const RunSpec& spec)
{
    if (training_in.empty())
        throw InsufficientDataError("training dataset is empty");
    const Dataset training = apply_stride(training_in, spec.edge_stride);
    validate(training);

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    if (spec.kind == ModelKind::LinearHuber) {
        LinearModel model = fit_linear(training, spec.huber_c);
        return CalibrationRun(spec, std::move(model), training.size(), elapsed());
    }

    FitResult fit = fit_hyperparameters(training, mean_kind_of(spec.kind),
                                        kernel_kind_of(spec.kind), spec.fit);
    MeanSpec mean = fit.mean;
    if (mean.kind == MeanKind::Linear)
        mean.C = profile_linear_mean(training, fit.kernel);
    GpModel model = gp_train(training, mean, fit.kernel);
    return CalibrationRun(spec, std::move(model), training.size(), elapsed(), std::move(fit));
}

DisplacementPrediction predict_displacement(const CalibrationRun& run, const TickVector& ticks,
                                            bool want_variance)
{
    DisplacementPrediction p;
    if (const auto* gp = std::get_if<GpModel>(&run.model())) {
        const GpPrediction g = gp_predict(*gp, ticks, want_variance);
        p.mean = Pose2D(g.mean(0), g.mean(1), g.mean(2));
        p.cov = g.cov;
    } else {
        const Eigen::Vector3d v = predict_linear(std::get<LinearModel>(run.model()), ticks);
        p.mean = Pose2D(v(0), v(1), v(2));
    }
    return p;
}

std::vector<DisplacementPrediction> predict_displacements(const CalibrationRun& run,
                                                          std::span<const TickVector> ticks,
                                                          bool want_variance)
{
    std::vector<DisplacementPrediction> out;
    out.reserve(ticks.size());
    for (const auto& t : ticks)
        out.push_back(predict_displacement(run, t, want_variance));
    return out;
}

Pose2D nominal_sensor_displacement(const DriveModel& model, const Pose2D& mount,
                                   const TickVector& ticks)
{
    return conjugate(forward(ticks, model), mount);
}

std::vector<Pose2D> integrate_trajectory(const Pose2D& start, std::span<const Pose2D> displacements)
{
    std::vector<Pose2D> poses;
    poses.reserve(displacements.size() + 1);
    poses.push_back(start);
    for (const auto& d : displacements)
        poses.push_back(oplus(poses.back(), d));
    return poses;
}

// ---------------------------------------------------------------------------

EvaluationResult evaluate_run(const CalibrationRun& run, const Dataset& test,
                              const Trajectory* reference)
{
    if (test.empty())
        throw InsufficientDataError("test dataset is empty");
    validate(test);
    if (tick_dimension(test) != run.tick_dim())
        throw DimensionError("model expects " + std::to_string(run.tick_dim()) +
                             " ticks per edge, test dataset has " +
                             std::to_string(tick_dimension(test)));

    std::vector<Pose2D> steps;
    steps.reserve(test.size());
    for (const auto& s : test)
        steps.push_back(predict_displacement(run, s.ticks, false).mean);

    const double tol = 0.5 * median_interval(test);
    EvaluationResult result;

    Pose2D start;
    if (reference && !reference->empty()) {
        Trajectory first{ { test.front().t_j, Pose2D() } };
        const TrajectoryPair p = align(first, *reference, tol);
        if (!p.reference.empty())
            start = p.reference.front();
    }

    const auto poses = integrate_trajectory(start, steps);
    result.predicted.push_back({ test.front().t_j, poses.front() });
    for (std::size_t k = 0; k < test.size(); ++k)
        result.predicted.push_back({ test[k].t_k, poses[k + 1] });

    if (reference && !reference->empty()) {
        result.reference = *reference;
        const TrajectoryPair pair = align(result.predicted, *reference, tol);
        if (pair.estimated.size() >= 2)
            result.metrics = compute_metrics(pair);
    }
    return result;
}

} // namespace gpcal
