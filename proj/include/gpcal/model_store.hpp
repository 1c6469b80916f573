#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gpcal/dataset.hpp"
#include "gpcal/pipeline.hpp"

namespace gpcal {

inline constexpr int kModelFormatVersion = 1;

/// Flat "key = value" text container for both model families. GP models
/// store mean/kernel specs, training inputs, per-sample noise variances,
/// jitter and alpha; the factorization is rebuilt on load. Linear models
/// store W and the fit report. Output is byte-stable across a
/// save/load/save cycle.
std::string serialize_model(const CalibrationRun& run);
CalibrationRun deserialize_model(std::string_view text, std::string_view source = "<model>");

void save_model(const std::filesystem::path& path, const CalibrationRun& run);
CalibrationRun load_model(const std::filesystem::path& path);

/// Human-readable fit summary: hyperparameters and log marginal likelihood
/// (GP) or Huber objective (linear), plus training wall time.
std::string fit_report(const CalibrationRun& run, const Dataset& training);

} // namespace gpcal
