#include "gpcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

struct Twist
{
    double vx = 0.0;
    double vy = 0.0;
    double omega = 0.0;
};

/// Produces body-twist commands over time for one profile.
class CommandGenerator
{
public:
    CommandGenerator(const SimConfig& config, std::uint64_t seed)
        : config_(config), rng_(seed)
    {
        state_.vx = 0.6 * config.max_speed;
    }

    Twist at(double t, double dt)
    {
        switch (config_.profile) {
        case CommandProfile::RandomWalk: return random_walk(dt);
        case CommandProfile::FigureEight: return figure_eight(t);
        case CommandProfile::Scripted: return scripted(t);
        }
        return {};
    }

private:
    bool mecanum() const { return config_.drive.kind == DriveKind::Mecanum; }

    // Ornstein-Uhlenbeck on each component, clamped to the command limits.
    Twist random_walk(double dt)
    {
        constexpr double rate = 0.5;  // 1/s mean reversion
        const double sq = std::sqrt(dt);
        auto step = [&](double& x, double mean, double stddev, double limit) {
            const double diffusion = stddev * std::sqrt(2.0 * rate);
            x += rate * (mean - x) * dt + diffusion * sq * normal_(rng_);
            x = std::clamp(x, -limit, limit);
        };
        step(state_.vx, 0.6 * config_.max_speed, 0.3 * config_.max_speed, config_.max_speed);
        step(state_.omega, 0.0, 0.5 * config_.max_turn_rate, config_.max_turn_rate);
        if (mecanum())
            step(state_.vy, 0.0, 0.5 * config_.max_lateral_speed, config_.max_lateral_speed);
        return state_;
    }

    // Alternating full circles left and right.
    Twist figure_eight(double t) const
    {
        const double omega0 = 0.6 * config_.max_turn_rate;
        const double period = 2.0 * std::numbers::pi / omega0;
        const bool left = std::fmod(t, 2.0 * period) < period;
        Twist tw;
        tw.vx = 0.7 * config_.max_speed;
        tw.omega = left ? omega0 : -omega0;
        if (mecanum())
            tw.vy = 0.3 * config_.max_lateral_speed * std::sin(omega0 * t);
        return tw;
    }

    Twist scripted(double t) const
    {
        double total = 0.0;
        for (const auto& seg : config_.script)
            total += seg.duration;
        double local = std::fmod(t, total);
        for (const auto& seg : config_.script) {
            if (local < seg.duration)
                return { seg.vx, seg.vy, seg.omega };
            local -= seg.duration;
        }
        const auto& last = config_.script.back();
        return { last.vx, last.vy, last.omega };
    }

    const SimConfig& config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    Twist state_;
};

Eigen::VectorXd floor_ticks(const Eigen::VectorXd& angles, const DriveModel& model)
{
    Eigen::VectorXd counters(angles.size());
    for (Eigen::Index i = 0; i < angles.size(); ++i)
        counters(i) = std::floor(angles(i) * static_cast<double>(model.ticks_per_rev[i]) /
                                 (2.0 * std::numbers::pi));
    return counters;
}

} // namespace

SimConfig default_sim_config(DriveKind kind)
{
    SimConfig c;
    if (kind == DriveKind::DiffDrive) {
        c.drive = DriveModel::diff_drive(0.05, 0.14, 3840);
        c.deform = Deformation::none(2);
        c.interval = 0.3;
        c.max_speed = 0.45;
        c.max_turn_rate = 0.45;
    } else {
        c.drive = DriveModel::mecanum(0.03, 0.08, 0.1, 4096);
        c.deform = Deformation::none(4);
        c.interval = 0.6;
        c.max_speed = 0.22;
        c.max_lateral_speed = 0.2;
        c.max_turn_rate = 0.25;
    }
    return c;
}

void validate(const SimConfig& config)
{
    validate(config.drive);
    validate(config.deform, config.drive.wheel_count());
    if (!(config.interval > 0.0))
        throw ValidationError("interval must be positive");
    if (!(config.duration >= config.interval))
        throw ValidationError("duration shorter than interval");
    if (!(config.noise_sigma.array() >= 0.0).all())
        throw ValidationError("noise sigma must be non-negative");
    if (config.substeps < 1 || config.odometry_per_interval < 1 ||
        config.substeps % config.odometry_per_interval != 0)
        throw ValidationError("substeps must be a positive multiple of odometry_per_interval");
    if (config.profile == CommandProfile::Scripted) {
        if (config.script.empty())
            throw ValidationError("scripted profile needs at least one segment");
        for (const auto& seg : config.script)
            if (!(seg.duration > 0.0))
                throw ValidationError("script segment duration must be positive");
    }
}

std::size_t event_count(double duration, double interval)
{
    return static_cast<std::size_t>(std::floor(duration / interval + 1e-9));
}

SimulationResult simulate(const SimConfig& config)
{
    validate(config);

    const DriveModel& nominal = config.drive;
    const int wheels = nominal.wheel_count();
    const std::size_t events = event_count(config.duration, config.interval);
    const double dt = config.interval / config.substeps;
    const int odom_stride = config.substeps / config.odometry_per_interval;

    CommandGenerator commands(config, config.seed);
    std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;

    SimulationResult out;
    out.event_times.reserve(events);
    out.robot_poses.reserve(events);

    Eigen::VectorXd wheel_angle = Eigen::VectorXd::Zero(wheels);
    Pose2D robot;
    std::vector<Eigen::VectorXd> event_counters;

    auto record_event = [&](double t) {
        out.event_times.push_back(t);
        out.robot_poses.push_back(robot);
        out.sensor_poses.push_back(oplus(robot, config.sensor_pose));
        event_counters.push_back(floor_ticks(wheel_angle, nominal));
    };
    auto record_odometry = [&](double t) {
        out.odometry.push_back({ t, floor_ticks(wheel_angle, nominal) });
    };

    record_event(0.0);
    record_odometry(0.0);
    for (std::size_t k = 1; k < events; ++k) {
        const double t0 = static_cast<double>(k - 1) * config.interval;
        for (int s = 0; s < config.substeps; ++s) {
            const double t_mid = t0 + (s + 0.5) * dt;
            const auto cmd = commands.at(t_mid, dt);
            const Eigen::VectorXd delta =
                wheel_rates_for_twist(nominal, cmd.vx, cmd.vy, cmd.omega) * dt;
            const DriveModel actual =
                apply_deformation(nominal, config.deform, wheel_angle + 0.5 * delta);
            robot = oplus(robot, forward_from_angles(delta, actual));
            wheel_angle += delta;
            if ((s + 1) % odom_stride == 0 && s + 1 < config.substeps)
                record_odometry(t0 + (s + 1) * dt);
        }
        const double t1 = static_cast<double>(k) * config.interval;
        record_odometry(t1);
        record_event(t1);
    }

    const Eigen::Vector3d var = config.noise_sigma.array().square();
    out.dataset.reserve(events > 0 ? events - 1 : 0);
    for (std::size_t k = 1; k < events; ++k) {
        const Pose2D q_jk = relative_pose(out.robot_poses[k - 1], out.robot_poses[k]);
        const Pose2D s_jk = conjugate(q_jk, config.sensor_pose);
        DisplacementSample sample;
        sample.t_j = out.event_times[k - 1];
        sample.t_k = out.event_times[k];
        sample.ticks = event_counters[k] - event_counters[k - 1];
        const double nx = config.noise_sigma(0) * normal(noise_rng);
        const double ny = config.noise_sigma(1) * normal(noise_rng);
        const double nt = config.noise_sigma(2) * normal(noise_rng);
        sample.s_hat = Pose2D(s_jk.x() + nx, s_jk.y() + ny, s_jk.theta() + nt);
        sample.sigma = var.asDiagonal();
        out.dataset.push_back(std::move(sample));
    }
    return out;
}

} // namespace gpcal
