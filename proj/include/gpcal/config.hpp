#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gpcal/pipeline.hpp"
#include "gpcal/simulator.hpp"

namespace gpcal {

/// Full tool configuration. Parsed from a flat INI file with sections
/// [simulation], [calibration] and [evaluation]; every key is optional and
/// unknown sections or keys are rejected.
struct Config
{
    SimConfig simulation = default_sim_config(DriveKind::DiffDrive);
    RunSpec calibration;
    std::string output_dir = ".";
};

/// `source` names the input in error messages ("<source>:<line>: ...").
Config parse_config(std::string_view text, std::string_view source = "<config>");
Config load_config(const std::filesystem::path& path);

/// Applies a seed override to both the simulator and the hyperparameter search.
void override_seed(Config& config, std::uint64_t seed);

} // namespace gpcal
