#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpcal/errors.hpp"
#include "gpcal/pipeline.hpp"
#include "gpcal/simulator.hpp"
#include "test_support.hpp"

using namespace gpcal;
using gpcal::testing::kPi;

namespace {

std::vector<OdometryReading> odometry_log(double t0, double dt, int count)
{
    std::vector<OdometryReading> log;
    for (int i = 0; i < count; ++i) {
        const double t = t0 + dt * i;
        log.push_back({ t, Eigen::Vector2d(std::floor(100 * t), 3 * i) });
    }
    return log;
}

/// Exhaustive nearest-reading search, ties to the earlier reading.
const OdometryReading* brute_nearest(const std::vector<OdometryReading>& log, double t, double tol)
{
    const OdometryReading* best = nullptr;
    for (const auto& r : log)
        if (!best || std::abs(r.t - t) < std::abs(best->t - t))
            best = &r;
    return best && std::abs(best->t - t) <= tol ? best : nullptr;
}

} // namespace

TEST(ModelKind, Tags)
{
    for (auto k : { ModelKind::CgpZeroRbf, ModelKind::CgpLinRbf, ModelKind::CgpZeroLin,
                    ModelKind::CgpZeroSum, ModelKind::CgpLinSum, ModelKind::LinearHuber })
        EXPECT_EQ(parse_model_kind(to_string(k)), k);
    EXPECT_EQ(to_string(ModelKind::LinearHuber), "linear_huber");
    EXPECT_THROW(parse_model_kind("cgp"), ValidationError);
    EXPECT_EQ(mean_kind_of(ModelKind::CgpLinSum), MeanKind::Linear);
    EXPECT_EQ(kernel_kind_of(ModelKind::CgpZeroLin), KernelKind::Linear);
    EXPECT_FALSE(is_gp(ModelKind::LinearHuber));
}

TEST(SelectEdges, NominalStream)
{
    const auto odo = odometry_log(0.0, 0.03, 301);
    std::vector<double> events;
    for (int k = 0; k <= 30; ++k)
        events.push_back(0.3 * k);
    const auto sel = select_edges(odo, events, 0.3);
    EXPECT_EQ(sel.edges.size(), events.size() - 1);
    EXPECT_EQ(sel.rejected_spacing, 0u);
    EXPECT_EQ(sel.dropped_no_odometry, 0u);
    EXPECT_EQ(sel.edges[4].ticks, odo[50].counters - odo[40].counters);
}

TEST(SelectEdges, GapRejected)
{
    const auto odo = odometry_log(0.0, 0.03, 400);
    const std::vector<double> events = { 0.0, 0.3, 0.6, 1.5, 1.8 };
    const auto sel = select_edges(odo, events, 0.3);
    EXPECT_EQ(sel.edges.size(), 3u);
    EXPECT_EQ(sel.rejected_spacing, 1u);
    EXPECT_DOUBLE_EQ(sel.edges[2].t_j, 1.5);
}

TEST(SelectEdges, MissingOdometryDropped)
{
    auto odo = odometry_log(0.0, 0.03, 11);   // covers [0, 0.3]
    const std::vector<double> events = { 0.0, 0.3, 0.6 };
    const auto sel = select_edges(odo, events, 0.3);
    EXPECT_EQ(sel.edges.size(), 1u);
    EXPECT_EQ(sel.dropped_no_odometry, 1u);
}

TEST(SelectEdges, OffsetOdometryMatchesBruteForce)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    const double T = 0.3;
    const auto odo = odometry_log(T / 4, 0.1, 120);
    std::vector<double> events;
    for (int k = 0; k < 35; ++k)
        events.push_back(T * k + jitter(rng));
    const auto sel = select_edges(odo, events, T);
    std::size_t idx = 0;
    for (std::size_t k = 1; k < events.size(); ++k) {
        const double spacing = events[k] - events[k - 1];
        const auto* a = brute_nearest(odo, events[k - 1], T / 2);
        const auto* b = brute_nearest(odo, events[k], T / 2);
        if (spacing < 0.9 * T || spacing > 1.1 * T || !a || !b)
            continue;
        ASSERT_LT(idx, sel.edges.size());
        EXPECT_EQ(sel.edges[idx].ticks, b->counters - a->counters);
        EXPECT_EQ(sel.edges[idx].t_j, events[k - 1]);
        ++idx;
    }
    EXPECT_EQ(idx, sel.edges.size());
}

TEST(SelectEdges, ChunkedStreamingEqualsBatch)
{
    const auto odo = odometry_log(0.01, 0.03, 500);
    std::vector<double> events;
    for (int k = 0; k < 48; ++k)
        events.push_back(0.3 * k + (k == 20 ? 0.1 : 0.0));
    const auto batch = select_edges(odo, events, 0.3, 2);

    for (std::size_t chunk : { 1u, 7u, 64u }) {
        EdgeSelector sel(0.3, 2);
        std::size_t oi = 0, ei = 0;
        while (oi < odo.size() || ei < events.size()) {
            for (std::size_t c = 0; c < chunk && oi < odo.size(); ++c)
                sel.push_odometry(odo[oi++]);
            for (std::size_t c = 0; c < chunk / 3 + 1 && ei < events.size(); ++c)
                sel.push_event(events[ei++]);
        }
        const auto s = sel.finish();
        ASSERT_EQ(s.edges.size(), batch.edges.size()) << chunk;
        for (std::size_t i = 0; i < s.edges.size(); ++i) {
            EXPECT_EQ(s.edges[i].t_j, batch.edges[i].t_j);
            EXPECT_EQ(s.edges[i].ticks, batch.edges[i].ticks);
        }
        EXPECT_EQ(s.rejected_spacing, batch.rejected_spacing);
    }
}

TEST(SelectEdges, MatchesSimulatorDataset)
{
    const auto sim = simulate(default_sim_config(DriveKind::DiffDrive));
    const auto sel = select_edges(sim.odometry, sim.event_times, 0.3);
    ASSERT_EQ(sel.edges.size(), sim.dataset.size());
    for (std::size_t i = 0; i < sel.edges.size(); ++i)
        EXPECT_EQ(sel.edges[i].ticks, sim.dataset[i].ticks);
}

TEST(SelectEdges, Errors)
{
    EXPECT_THROW(select_edges({}, { 0.0 }, 0.3), ValidationError);
    EXPECT_THROW(select_edges(odometry_log(0, 0.03, 5), {}, 0.3), ValidationError);
    EXPECT_THROW(select_edges(odometry_log(0, 0.03, 5), { 0.3, 0.0 }, 0.3), ValidationError);
    EXPECT_THROW(EdgeSelector(0.0), ValidationError);
}

TEST(Integrate, Examples)
{
    EXPECT_EQ(integrate_trajectory(Pose2D(1, 2, 0.3), {}), std::vector<Pose2D>{ Pose2D(1, 2, 0.3) });
    const std::vector<Pose2D> line(3, Pose2D(1, 0, 0));
    const auto poses = integrate_trajectory(Pose2D(), line);
    ASSERT_EQ(poses.size(), 4u);
    for (int k = 0; k < 4; ++k)
        EXPECT_EQ(poses[static_cast<std::size_t>(k)], Pose2D(k, 0, 0));
    const std::vector<Pose2D> square(4, Pose2D(1, 0, kPi / 2));
    const Pose2D end = integrate_trajectory(Pose2D(), square).back();
    EXPECT_NEAR(end.x(), 0.0, 1e-12);
    EXPECT_NEAR(end.y(), 0.0, 1e-12);
    EXPECT_NEAR(gpcal::testing::wrap(end.theta()), 0.0, 1e-12);
}

class TrainedPipeline : public ::testing::Test
{
protected:
    static void SetUpTestSuite()
    {
        SimConfig c = default_sim_config(DriveKind::DiffDrive);
        c.duration = 120.0;
        c.noise_sigma = Eigen::Vector3d(1e-4, 1e-4, 1e-4);
        c.sensor_pose = Pose2D(0.1, 0.02, 0.2);
        sim_ = new SimulationResult(simulate(c));
        config_ = new SimConfig(c);
    }
    static void TearDownTestSuite()
    {
        delete sim_;
        delete config_;
    }
    static SimulationResult* sim_;
    static SimConfig* config_;
};
SimulationResult* TrainedPipeline::sim_ = nullptr;
SimConfig* TrainedPipeline::config_ = nullptr;

TEST_F(TrainedPipeline, LinearHuberStraightLineAndDuality)
{
    RunSpec spec;
    spec.kind = ModelKind::LinearHuber;
    const auto huber = train(sim_->dataset, spec);
    EXPECT_EQ(huber.training_size(), sim_->dataset.size());
    // straight line: 0.3 s at 0.3 m/s
    const double n = std::round(0.09 / (2 * kPi * 0.05) * 3840);
    const TickVector straight = Eigen::Vector2d(n, n);
    const Pose2D truth = nominal_sensor_displacement(config_->drive, config_->sensor_pose, straight);
    const Pose2D pred = predict_displacement(huber, straight).mean;
    EXPECT_LT(std::hypot(pred.x() - truth.x(), pred.y() - truth.y()), 1e-3);

    spec.kind = ModelKind::CgpZeroLin;
    const auto gp = train(sim_->dataset, spec);
    for (std::size_t i = 0; i < sim_->dataset.size(); i += 13) {
        const auto& t = sim_->dataset[i].ticks;
        const Pose2D a = predict_displacement(huber, t).mean;
        const Pose2D b = predict_displacement(gp, t).mean;
        EXPECT_LT(std::hypot(a.x() - b.x(), a.y() - b.y()), 1e-3);
    }
}

TEST_F(TrainedPipeline, ZeroTicksAndPriorReversion)
{
    RunSpec spec;
    spec.kind = ModelKind::LinearHuber;
    const auto huber = train(sim_->dataset, spec);
    const auto z = predict_displacement(huber, Eigen::Vector2d::Zero());
    EXPECT_EQ(z.mean, Pose2D());
    EXPECT_EQ(z.cov, Eigen::Matrix3d::Zero());

    // hand-built RBF model trained only on far-away ticks
    Dataset far(sim_->dataset.begin(), sim_->dataset.begin() + 20);
    for (auto& s : far)
        s.ticks.array() += 5000.0;
    const KernelSpec k = KernelSpec::rbf_shared(KernelKind::Rbf, 0.05, Eigen::Vector2d(1e4, 1e4));
    RunSpec gspec;
    gspec.kind = ModelKind::CgpZeroRbf;
    const CalibrationRun run(gspec, gp_train(far, MeanSpec::zero(), k), far.size(), 0.0);
    const auto p = predict_displacement(run, Eigen::Vector2d::Zero());
    EXPECT_NEAR(p.mean.x(), 0.0, 1e-12);
    EXPECT_NEAR(p.mean.y(), 0.0, 1e-12);
    EXPECT_TRUE(p.cov.isApprox(0.0025 * Eigen::Matrix3d::Identity(), 1e-9));
}

TEST_F(TrainedPipeline, BatchEqualsSingle)
{
    RunSpec spec;
    spec.kind = ModelKind::CgpZeroSum;
    spec.fit.restarts = 1;
    spec.fit.max_iterations = 20;
    spec.fit.max_points = 100;
    spec.edge_stride = 2;
    const auto run = train(sim_->dataset, spec);
    EXPECT_EQ(run.training_size(), (sim_->dataset.size() + 1) / 2);
    std::vector<TickVector> ticks;
    for (std::size_t i = 0; i < 12; ++i)
        ticks.push_back(sim_->dataset[i].ticks);
    const auto batch = predict_displacements(run, ticks);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const auto single = predict_displacement(run, ticks[i]);
        EXPECT_EQ(batch[i].mean, single.mean);
        EXPECT_EQ(batch[i].cov, single.cov);
    }
}

TEST_F(TrainedPipeline, EvaluateOnOwnTrainingSim)
{
    SimConfig c = *config_;
    // Huber needs positive variances; keep the noise negligible
    c.noise_sigma.setConstant(1e-6);
    const auto clean = simulate(c);
    RunSpec spec;
    spec.kind = ModelKind::LinearHuber;
    const auto run = train(clean.dataset, spec);
    Trajectory truth;
    for (std::size_t k = 0; k < clean.event_times.size(); ++k)
        truth.push_back({ clean.event_times[k], clean.sensor_poses[k] });
    const auto ev = evaluate_run(run, clean.dataset, &truth);
    ASSERT_TRUE(ev.metrics.has_value());
    EXPECT_EQ(ev.metrics->poses, clean.event_times.size());
    EXPECT_LT(ev.metrics->ate_m, 0.15);
    EXPECT_EQ(ev.predicted.front().pose, truth.front().pose);

    const auto blind = evaluate_run(run, clean.dataset, nullptr);
    EXPECT_FALSE(blind.metrics.has_value());
    EXPECT_EQ(blind.predicted.front().pose, Pose2D());
    EXPECT_EQ(blind.predicted.size(), clean.dataset.size() + 1);
}

TEST_F(TrainedPipeline, Errors)
{
    RunSpec spec;
    EXPECT_THROW(train({}, spec), InsufficientDataError);
    const auto run = train(sim_->dataset, spec);
    Dataset wrong = { sim_->dataset.front() };
    wrong[0].ticks = Eigen::Vector3d(1, 2, 3);
    EXPECT_THROW(evaluate_run(run, wrong, nullptr), DimensionError);
    EXPECT_THROW(apply_stride(sim_->dataset, 0), ValidationError);
}
