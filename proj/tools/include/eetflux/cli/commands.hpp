#pragma once

// Command implementations behind the eetflux executable. Each returns the
// process exit code and writes human-readable output to the given streams.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eetflux/trajectory_io.hpp"

namespace eetflux::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kValidation = 2, kNumerical = 3 };

inline constexpr const char* kOutDirEnv = "EETFLUX_OUT_DIR";

/// Flag value, then $EETFLUX_OUT_DIR, then the working directory.
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& flag);

struct RunManifest {
    std::string run_id;
    std::string command;
    std::string version;
    std::string model_hash;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json inputs = nlohmann::json::array();
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    std::string status = "ok";
    double wall_time_seconds = 0.0;
    std::string timestamp;

    nlohmann::json to_json() const;
};

/// Deterministic id from the command, model hash and parameters.
std::string make_run_id(const std::string& command, const std::string& model_hash, const nlohmann::json& parameters);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

struct RunOverrides {
    std::optional<double> dt;
    std::optional<double> t_final;
    std::optional<double> dt_output;
};

/// Loads a config and applies run-parameter overrides; throws ModelError.
Model load_model(const std::filesystem::path& config, const RunOverrides& overrides);

struct SimulateOptions {
    std::vector<std::filesystem::path> configs;
    std::optional<std::filesystem::path> out_dir;
    RunOverrides overrides;
    TrajectoryFormat format = TrajectoryFormat::Text;
    unsigned jobs = 1;
};

/// One config: outputs go straight into the out dir. Several configs: one
/// sub-directory per config file stem.
int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);

struct CurrentsOptions {
    std::filesystem::path trajectory;
    std::filesystem::path config;
    std::optional<std::filesystem::path> out_dir;
};

int cmd_currents(const CurrentsOptions& options, std::ostream& out, std::ostream& err);

struct PathwaysOptions {
    std::filesystem::path currents;
    double t0 = 0.0;
    std::optional<double> window;  // default: to the end of the data
    double threshold = 0.0;
    std::optional<std::filesystem::path> groups;
    std::optional<std::filesystem::path> out_dir;
};

int cmd_pathways(const PathwaysOptions& options, std::ostream& out, std::ostream& err);

struct CheckOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> trajectory;
    RunOverrides overrides;
};

/// Invariant suite on the model (horizon min(t_final, 100 dt_output) unless
/// --t-final is given), or on a supplied trajectory.
int cmd_check(const CheckOptions& options, std::ostream& out, std::ostream& err);

inline constexpr const char* kTrajectoryText = "trajectory.txt";
inline constexpr const char* kTrajectoryBinary = "trajectory.bin";
inline constexpr const char* kCurrentsFile = "currents.txt";
inline constexpr const char* kPathwaysDot = "pathways.dot";
inline constexpr const char* kPathwaysJson = "pathways.json";

std::string manifest_name(const std::string& command);

}  // namespace eetflux::cli
