#include "gpcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

void expect_lengths(const TrajectoryPair& pair, std::size_t min_len, const char* what)
{
    if (pair.estimated.size() != pair.reference.size())
        throw DimensionError(std::string(what) + ": trajectory lengths differ (" +
                             std::to_string(pair.estimated.size()) + " vs " +
                             std::to_string(pair.reference.size()) + ")");
    if (pair.estimated.size() < min_len)
        throw InsufficientDataError(std::string(what) + ": need at least " +
                                    std::to_string(min_len) + " poses");
}

Pose2D relative_error(const TrajectoryPair& pair, std::size_t k)
{
    const Pose2D est_step = relative_pose(pair.estimated[k], pair.estimated[k + 1]);
    const Pose2D ref_step = relative_pose(pair.reference[k], pair.reference[k + 1]);
    return relative_pose(est_step, ref_step);
}

Pose2D absolute_error(const TrajectoryPair& pair, std::size_t k)
{
    return relative_pose(pair.estimated[k], pair.reference[k]);
}

} // namespace

TrajectoryPair align(const Trajectory& estimated, const Trajectory& reference, double tolerance)
{
    TrajectoryPair pair;
    if (reference.empty())
        return pair;
    for (const auto& e : estimated) {
        auto it = std::lower_bound(reference.begin(), reference.end(), e.t,
                                   [](const TimedPose& p, double t) { return p.t < t; });
        const TimedPose* best = nullptr;
        if (it != reference.end())
            best = &*it;
        if (it != reference.begin()) {
            const TimedPose* prev = &*std::prev(it);
            if (!best || std::abs(prev->t - e.t) <= std::abs(best->t - e.t))
                best = prev;
        }
        if (best && std::abs(best->t - e.t) <= tolerance) {
            pair.estimated.push_back(e.pose);
            pair.reference.push_back(best->pose);
        }
    }
    return pair;
}

double rpe(const TrajectoryPair& pair)
{
    expect_lengths(pair, 2, "rpe");
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pair.estimated.size(); ++k) {
        const Pose2D e = relative_error(pair, k);
        sum += e.x() * e.x() + e.y() * e.y();
    }
    return std::sqrt(sum / static_cast<double>(pair.estimated.size() - 1));
}

double ate(const TrajectoryPair& pair)
{
    expect_lengths(pair, 1, "ate");
    double sum = 0.0;
    for (std::size_t k = 0; k < pair.estimated.size(); ++k) {
        const Pose2D e = absolute_error(pair, k);
        sum += e.x() * e.x() + e.y() * e.y();
    }
    return std::sqrt(sum / static_cast<double>(pair.estimated.size()));
}

MetricsReport compute_metrics(const TrajectoryPair& pair)
{
    expect_lengths(pair, 2, "metrics");
    MetricsReport r;
    r.poses = pair.estimated.size();
    r.ate_m = ate(pair);
    r.rpe_m = rpe(pair);
    double rot_a = 0.0;
    for (std::size_t k = 0; k < r.poses; ++k)
        rot_a += std::pow(absolute_error(pair, k).theta(), 2);
    double rot_r = 0.0;
    for (std::size_t k = 0; k + 1 < r.poses; ++k)
        rot_r += std::pow(relative_error(pair, k).theta(), 2);
    r.ate_rot_rad = std::sqrt(rot_a / static_cast<double>(r.poses));
    r.rpe_rot_rad = std::sqrt(rot_r / static_cast<double>(r.poses - 1));
    return r;
}

} // namespace gpcal
