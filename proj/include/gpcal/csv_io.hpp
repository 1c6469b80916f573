#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gpcal/dataset.hpp"
#include "gpcal/metrics.hpp"
#include "gpcal/simulator.hpp"

namespace gpcal {

/// Shortest decimal text that parses back to exactly `v` ('.' separator,
/// locale independent).
std::string format_number(double v);

/// Dataset CSV: t_j,t_k,tick_1..tick_m,sx,sy,stheta,cov_00..cov_22 (row-major).
void write_dataset(std::ostream& os, const Dataset& dataset);
Dataset read_dataset(std::istream& is, std::string_view source = "<dataset>");

/// Odometry log CSV: t,counter_1..counter_m (cumulative ticks).
void write_odometry(std::ostream& os, const std::vector<OdometryReading>& log);
std::vector<OdometryReading> read_odometry(std::istream& is, std::string_view source = "<odometry>");

/// Ground truth CSV: t,x,y,theta,sensor_x,sensor_y,sensor_theta.
void write_truth(std::ostream& os, const SimulationResult& sim);

/// Trajectory CSV: t,x,y,theta. The reader also accepts ground-truth files
/// and then returns the sensor trajectory.
void write_trajectory(std::ostream& os, const Trajectory& trajectory);
Trajectory read_trajectory(std::istream& is, std::string_view source = "<trajectory>");

/// Flat "key = value" report and a one-row CSV with the same fields.
void write_metrics_text(std::ostream& os, const MetricsReport& report);
void write_metrics_csv(std::ostream& os, const MetricsReport& report);

// File-path conveniences; throw IoError when the file cannot be opened.
void save_text(const std::filesystem::path& path, const std::string& content);
std::string load_text(const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

} // namespace gpcal
