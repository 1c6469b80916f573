#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gpcal/dataset.hpp"
#include "gpcal/kinematics.hpp"
#include "gpcal/pose2d.hpp"

namespace gpcal {

enum class CommandProfile { RandomWalk, FigureEight, Scripted };

/// Constant body twist held for `duration` seconds. Scripts repeat cyclically.
struct ScriptSegment
{
    double duration = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double omega = 0.0;
};

struct SimConfig
{
    DriveModel drive = DriveModel::diff_drive(0.05, 0.14, 3840);
    Deformation deform = Deformation::none(2);
    Pose2D sensor_pose;                 // sensor mount in the robot frame
    double interval = 0.3;              // T, seconds between sensor events
    double duration = 60.0;             // seconds
    CommandProfile profile = CommandProfile::RandomWalk;
    std::vector<ScriptSegment> script;
    Eigen::Vector3d noise_sigma = Eigen::Vector3d::Zero();   // m, m, rad
    std::uint64_t seed = 1;

    int substeps = 20;                  // integration substeps per interval
    int odometry_per_interval = 10;     // encoder readings per interval
    double max_speed = 0.45;            // m/s
    double max_lateral_speed = 0.2;     // m/s, mecanum only
    double max_turn_rate = 0.45;        // rad/s
};

/// Defaults for a differential drive (T = 0.3 s) or mecanum base (T = 0.6 s).
SimConfig default_sim_config(DriveKind kind);

struct OdometryReading
{
    double t = 0.0;
    Eigen::VectorXd counters;           // cumulative integral tick counts
};

struct SimulationResult
{
    std::vector<double> event_times;    // sensor event timestamps
    std::vector<Pose2D> robot_poses;    // true robot pose at each event
    std::vector<Pose2D> sensor_poses;   // true sensor pose at each event
    std::vector<OdometryReading> odometry;
    Dataset dataset;                    // consecutive-event edges
};

void validate(const SimConfig& config);

/// Number of sensor events for a duration, robust to floating-point
/// ratios such as 60 / 0.3.
std::size_t event_count(double duration, double interval);

/// Runs the deformed drive through the configured command profile.
/// Deterministic: equal configs produce identical results.
SimulationResult simulate(const SimConfig& config);

} // namespace gpcal
