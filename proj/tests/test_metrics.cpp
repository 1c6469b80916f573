#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gpcal/errors.hpp"
#include "gpcal/metrics.hpp"
#include "test_support.hpp"

using namespace gpcal;
using gpcal::testing::kPi;

namespace {

/// Direct transcription of the metric definitions with explicit trig.
double naive_ate(const TrajectoryPair& p)
{
    double s = 0;
    for (std::size_t k = 0; k < p.estimated.size(); ++k) {
        const auto& a = p.estimated[k];
        const auto& b = p.reference[k];
        const double dx = b.x() - a.x(), dy = b.y() - a.y();
        const double ex = std::cos(a.theta()) * dx + std::sin(a.theta()) * dy;
        const double ey = -std::sin(a.theta()) * dx + std::cos(a.theta()) * dy;
        s += ex * ex + ey * ey;
    }
    return std::sqrt(s / static_cast<double>(p.estimated.size()));
}

TrajectoryPair random_pair(std::mt19937_64& rng, int n)
{
    TrajectoryPair p;
    for (int k = 0; k < n; ++k) {
        p.reference.push_back(gpcal::testing::random_pose(rng));
        p.estimated.push_back(gpcal::testing::random_pose(rng));
    }
    return p;
}

} // namespace

TEST(Rpe, Identical)
{
    std::mt19937_64 rng(1);
    auto p = random_pair(rng, 3);
    p.estimated = p.reference;
    EXPECT_NEAR(rpe(p), 0.0, 1e-15);
}

TEST(Rpe, SingleStep)
{
    TrajectoryPair p;
    p.estimated = { { 0, 0, 0 }, { 1, 0, 0 } };
    p.reference = { { 0, 0, 0 }, { 1.1, 0, 0 } };
    EXPECT_NEAR(rpe(p), 0.1, 1e-12);
}

TEST(Rpe, InvariantToGlobalRigidTransform)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_pair(rng, 3);
        const Pose2D g = gpcal::testing::random_pose(rng);
        TrajectoryPair shifted = p;
        for (auto& e : shifted.estimated)
            e = oplus(g, e);
        EXPECT_NEAR(rpe(shifted), rpe(p), 1e-12);
        shifted.estimated = p.reference;
        for (auto& e : shifted.estimated)
            e = oplus(g, e);
        shifted.reference = p.reference;
        EXPECT_NEAR(rpe(shifted), 0.0, 1e-12);
    }
}

TEST(Ate, Examples)
{
    TrajectoryPair p;
    p.reference = { { 0, 0, 0.3 }, { 1, 2, -1 }, { 3, 1, 2 } };
    p.estimated = p.reference;
    EXPECT_NEAR(ate(p), 0.0, 1e-15);

    p.estimated.clear();
    for (const auto& r : p.reference)
        p.estimated.emplace_back(r.x() + 0.3, r.y() + 0.4, 0.0);
    EXPECT_NEAR(ate(p), 0.5, 1e-12);

    TrajectoryPair one;
    one.estimated = { { 0, 0, kPi / 2 } };
    one.reference = { { 1, 0, kPi / 2 } };
    const Pose2D e = relative_pose(one.estimated[0], one.reference[0]);
    EXPECT_NEAR(e.x(), 0.0, 1e-15);
    EXPECT_NEAR(e.y(), -1.0, 1e-15);
    EXPECT_NEAR(ate(one), 1.0, 1e-12);
}

TEST(Ate, MatchesNaiveFormulaAndCommonLeftTransform)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_pair(rng, 4);
        EXPECT_NEAR(ate(p), naive_ate(p), 1e-12);
        const Pose2D g = gpcal::testing::random_pose(rng);
        TrajectoryPair moved = p;
        for (std::size_t k = 0; k < p.reference.size(); ++k) {
            moved.estimated[k] = oplus(g, p.estimated[k]);
            moved.reference[k] = oplus(g, p.reference[k]);
        }
        EXPECT_NEAR(ate(moved), ate(p), 1e-12);
        EXPECT_NEAR(rpe(moved), rpe(p), 1e-12);
    }
}

TEST(Metrics, Errors)
{
    TrajectoryPair p;
    EXPECT_THROW(ate(p), InsufficientDataError);
    p.estimated = { Pose2D() };
    p.reference = { Pose2D() };
    EXPECT_NO_THROW(ate(p));
    EXPECT_THROW(rpe(p), InsufficientDataError);
    p.reference.push_back(Pose2D());
    EXPECT_THROW(ate(p), DimensionError);
}

TEST(Metrics, Report)
{
    TrajectoryPair p;
    p.estimated = { { 0, 0, 0 }, { 1, 0, 0 }, { 2, 0, 0.1 } };
    p.reference = { { 0, 0, 0 }, { 1.1, 0, 0 }, { 2.2, 0, 0 } };
    const MetricsReport r = compute_metrics(p);
    EXPECT_EQ(r.poses, 3u);
    EXPECT_EQ(r.ate_m, ate(p));
    EXPECT_EQ(r.rpe_m, rpe(p));
    EXPECT_NEAR(r.ate_rot_rad, std::sqrt(0.01 / 3), 1e-12);
    EXPECT_NEAR(r.rpe_rot_rad, std::sqrt(0.01 / 2), 1e-12);
}

TEST(Align, NearestWithinTolerance)
{
    Trajectory ref = { { 0.0, { 0, 0, 0 } }, { 1.0, { 1, 0, 0 } }, { 2.0, { 2, 0, 0 } } };
    Trajectory est = { { 0.1, { 0, 1, 0 } }, { 0.5, { 5, 0, 0 } }, { 1.45, { 1, 1, 0 } }, { 3.0, { 9, 9, 0 } } };
    const auto p = align(est, ref, 0.5);
    ASSERT_EQ(p.estimated.size(), 3u);
    EXPECT_EQ(p.reference[0], ref[0].pose);
    EXPECT_EQ(p.reference[1], ref[0].pose);   // tie between 0 and 1 goes to the earlier
    EXPECT_EQ(p.reference[2], ref[1].pose);
    EXPECT_TRUE(align(est, {}, 0.5).estimated.empty());
}
