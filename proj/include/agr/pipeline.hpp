#pragma once

// End-to-end reconstruction: normalize, solve for the surface elements,
// orient, evaluate the indicator on a surface band, and mesh. Results carry
// a JSON manifest from which the run can be repeated exactly.

#include "agr/error.hpp"
#include "agr/metrics.hpp"
#include "agr/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace agr {

enum class AdaptiveMode { on, off, append };
enum class PathChoice { automatic, minimal_norm, least_squares };

std::string_view to_string(AdaptiveMode m);
std::string_view to_string(PathChoice p);
AdaptiveMode parse_adaptive_mode(std::string_view s);
PathChoice parse_path_choice(std::string_view s);

/// Parses "x,y,z;x,y,z;...".
std::vector<Vec3> parse_velocity_list(std::string_view s);

struct RunConfig {
  std::filesystem::path input;
  std::optional<std::filesystem::path> gt;          // truth cloud with normals, same order as input
  std::optional<std::filesystem::path> gt_surface;  // dense truth samples with normals
  SolveConfig solve;
  WidthParams widths;
  double epsilon = kDefaultEpsilon;
  std::size_t subsample = kDefaultSubsample;
  AdaptiveMode adaptive = AdaptiveMode::on;
  std::optional<std::vector<Vec3>> velocities;  // user-supplied; overrides adaptive
  PathChoice path = PathChoice::automatic;
  bool pgr_compat = false;
  bool noisy = false;  // recorded only; the preset is resolved into solve
  std::uint64_t seed = 0;
  int dilation = 2;
  int start_depth = 5;
  int eval_samples = kSurfaceSamples;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

/// Velocities the configuration asks for on this cloud, and the eigen-frame
/// used when adaptive selection is involved.
VelocitySet resolve_velocities(const RunConfig& cfg, const PointCloud& cloud, EigenFrame* frame = nullptr);

SolvePath resolve_path(const RunConfig& cfg, std::size_t velocity_count);

enum class Stage { read, normalize, widths, velocities, solve, normals, indicator, mesh, metrics, write };
std::string_view to_string(Stage s);

struct RunResult {
  std::optional<PointCloud> cloud;
  std::optional<VelocitySet> velocities;
  Eigen::VectorXd mu;                   // normalized-space surface elements
  std::optional<OrientedCloud> oriented;  // original coordinates
  std::optional<TriangleMesh> mesh;       // original coordinates
  std::optional<MetricReport> metrics;
  SolveReport solve_report;
  double iso_value = 0;
  nlohmann::json manifest;
  int exit_code = 0;
  std::optional<Stage> failed_stage;
  std::string error_message;
};

/// Exit status for an error: 2 parse, 3 resource, 5 no surface, 1 otherwise.
int exit_code_for(ErrorKind k);

/// Runs every stage; stage errors are recorded in the result rather than
/// thrown. Exit code 4 marks a solve that stopped before the tolerance.
RunResult run_pipeline(const RunConfig& cfg);

/// Same, on an in-memory cloud (normals, if any, are used as truth).
RunResult run_pipeline(const RunConfig& cfg, const Points& original_positions,
                       const std::optional<Points>& truth_normals);

/// Writes <stem>.oriented.ply, <stem>.mesh.obj, <stem>.mesh.ply,
/// <stem>.manifest.json and, with metrics, <stem>.metrics.json. Missing
/// results are skipped. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(RunResult& result, const std::filesystem::path& out_dir,
                                                 const std::string& stem);

nlohmann::json to_json(const MetricReport& r);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string content_hash(const std::string& bytes);

}  // namespace agr
