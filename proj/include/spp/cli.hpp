#pragma once
// Experiment configuration and the command implementations behind the
// `spp` executable. Every command writes into cfg.output_dir only.

#include "spp/problems.hpp"
#include "spp/regularity.hpp"
#include "spp/solver.hpp"
#include "spp/verify.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spp::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_io = 1,
  exit_config = 2,
  exit_solver = 3,
  exit_verification = 4,
};

int exit_code_for(ErrorCode code);

struct ScheduleConfig {
  std::string name;
  StepSchedule schedule;
};

struct BoundsConfig {
  /// "cfp", "rsc" or "manual".
  std::string source = "cfp";
  /// cfp: the linear regularity constant; absent means estimate it.
  std::optional<double> sigma_X;
  LinearRegularityOptions estimator;
  /// Estimator stream seed; defaults to the master seed.
  std::optional<std::uint64_t> estimator_seed;
  /// manual: the constants used as given.
  RegularityConstants constants;
  /// manual: dist^2(x0, X*). Derived from the optimal set otherwise.
  std::optional<double> dist0_sq;
};

struct VerifyConfig {
  std::string suite = "all";
  std::size_t trials = 1000;
};

struct ExperimentConfig {
  InstanceSpec instance;
  /// Instance seed; defaults to `seed` when absent.
  std::optional<std::uint64_t> instance_seed;
  /// Load the problem from this file instead of generating it.
  std::optional<std::string> problem_file;
  std::vector<ScheduleConfig> schedules;
  /// Defaults to 10 passes over the components.
  std::optional<std::int64_t> iterations;
  std::size_t rounds = 5;
  /// Master seed; round r samples with seed + r.
  std::uint64_t seed = 0;
  double reference_tol = 1e-6;
  /// Starting point; absent means the origin.
  std::optional<std::vector<double>> x0;
  std::int64_t stride = 1;
  bool record_timing = false;
  Sampling sampling = Sampling::random;
  int threads = 1;
  double tail_fraction = 0.5;
  std::string output_dir = "spp_out";
  BoundsConfig bounds;
  VerifyConfig verify;
};

/// Five-round constrained regression with m=32, n=40, p=200 and the stepsize
/// exponents 1, 2/3 and 1/2 at mu0 = 1.
ExperimentConfig default_config();

/// Missing keys keep their defaults; unknown keys and bad values throw
/// config errors naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const fs::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a hash of the normalized config without output_dir and threads,
/// which do not affect results.
std::string config_hash(const ExperimentConfig& config);

std::uint64_t instance_seed(const ExperimentConfig& config);
StochasticProblem build_problem(const ExperimentConfig& config);
std::int64_t resolve_iterations(const ExperimentConfig& config, const StochasticProblem& problem);
Vector resolve_x0(const ExperimentConfig& config, const StochasticProblem& problem);
/// File-name-safe form of a schedule name.
std::string sanitize(const std::string& name);

struct GenerateResult {
  fs::path problem_file;
  fs::path manifest;
  std::size_t components = 0;
};
GenerateResult cmd_generate(const ExperimentConfig& config);

struct VariantSummary {
  std::string name;
  StepSchedule schedule;
  double final_envelope_residual = 0.0;
  double final_feasibility_residual = 0.0;
  double final_dist_sq = 0.0;
  /// Tail log-log slopes; NaN when undefined.
  double envelope_slope = 0.0;
  double dist_slope = 0.0;
  fs::path trace_file;
};

struct RunResult {
  ReferenceSolution reference;
  std::vector<VariantSummary> variants;
  std::vector<MeanTrace> traces;
  fs::path summary_file;
  fs::path manifest;
};
/// `log` receives the human-readable summary table when non-null.
RunResult cmd_run(const ExperimentConfig& config, std::ostream* log = nullptr);

struct BoundsResult {
  std::vector<RegularityConstants> constants;
  std::vector<fs::path> files;
  double dist0_sq = 0.0;
  fs::path manifest;
};
BoundsResult cmd_bounds(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes verify_report.json into the output directory.
VerifyReport cmd_verify(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Two log-scale SVG figures (envelope residual, feasibility residual), one
/// curve per CSV. Throws parse on empty or schema-mismatched input.
std::vector<fs::path> cmd_plot(const std::vector<fs::path>& csv_files, const fs::path& output_dir);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
/// Renders one log-y line chart as an SVG document.
std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series);

}  // namespace spp::cli
