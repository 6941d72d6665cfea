#include "spp/cli.hpp"

#include "spp/diagnostics.hpp"

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifndef SPP_VERSION
#define SPP_VERSION "0.0.0"
#endif

namespace spp::cli {
namespace {

using nlohmann::json;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
}

json versions() {
  return json{{"spp", SPP_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}};
}

json manifest_base(const std::string& command, const ExperimentConfig& config) {
  json seeds{{"master", config.seed}};
  if (config.problem_file) {
    seeds["problem_file"] = *config.problem_file;
  } else {
    seeds["instance"] = instance_seed(config);
  }
  return json{{"format", "spp-manifest/1"},
              {"command", command},
              {"config", to_json(config)},
              {"config_hash", config_hash(config)},
              {"seeds", seeds},
              {"versions", versions()}};
}

fs::path write_manifest(const ExperimentConfig& config, const std::string& command, const json& doc) {
  const fs::path path = fs::path(config.output_dir) / ("manifest_" + command + ".json");
  write_file(path, doc.dump(2) + "\n");
  return path;
}

json reference_json(const ReferenceSolution& ref) {
  return json{{"F_star", ref.F_star},
              {"kkt_residual", ref.kkt_residual},
              {"feasibility_violation", ref.feasibility_violation},
              {"unique", ref.unique},
              {"iterations", ref.iterations}};
}

json constants_json(const RegularityConstants& c) {
  return json{{"sigma_F_mu", c.sigma_F_mu}, {"beta", c.beta}, {"sigma_X", c.sigma_X}, {"S_star_F", c.S_star_F}};
}

double safe_slope(const std::vector<std::int64_t>& k, const std::vector<TraceRecord>& rows, double tail,
                  double TraceRecord::*field) {
  std::vector<double> kk;
  std::vector<double> metric;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (k[i] < 1) continue;
    kk.push_back(static_cast<double>(k[i]));
    metric.push_back(rows[i].*field);
  }
  try {
    return fit_rate_slope(kk, metric, tail);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::undefined_slope) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// The k values spp_run records for a given stride.
std::vector<std::int64_t> trace_rows(std::int64_t iterations, std::int64_t stride) {
  std::vector<std::int64_t> rows{0};
  for (std::int64_t k = 1; k <= iterations; ++k) {
    if (k % stride == 0 || k == iterations) rows.push_back(k);
  }
  return rows;
}

std::string schedule_kind(const StepSchedule& s) {
  return s.kind == StepSchedule::Kind::constant ? "constant" : "polynomial";
}

}  // namespace

GenerateResult cmd_generate(const ExperimentConfig& config) {
  const StochasticProblem problem = build_problem(config);
  ensure_dir(config.output_dir);
  GenerateResult out;
  out.problem_file = fs::path(config.output_dir) / "problem.json";
  write_file(out.problem_file, spp::to_json(problem).dump(2) + "\n");
  out.components = problem.size();
  json doc = manifest_base("generate", config);
  doc["problem"] = {{"file", out.problem_file.filename().string()},
                    {"components", problem.size()},
                    {"indicators", problem.indicator_count()},
                    {"dimension", problem.dimension()}};
  out.manifest = write_manifest(config, "generate", doc);
  return out;
}

RunResult cmd_run(const ExperimentConfig& config, std::ostream* log) {
  const StochasticProblem problem = build_problem(config);
  const Vector x0 = resolve_x0(config, problem);
  const std::int64_t iterations = resolve_iterations(config, problem);
  ensure_dir(config.output_dir);

  RunResult result;
  result.reference = reference_solve(problem, config.reference_tol);
  const OptimalSetModel model = OptimalSetModel::for_problem(problem, &result.reference);

  RunOptions options;
  options.sampling = config.sampling;
  options.metrics.F_star = result.reference.F_star;
  if (model.certified()) options.metrics.optimal_set = model;
  options.metrics.stride = config.stride;
  options.metrics.record_timing = config.record_timing;

  json outputs = json::array();
  for (const auto& variant : config.schedules) {
    MeanTrace trace = replicate(problem, x0, variant.schedule, iterations, config.rounds, config.seed, options,
                                config.threads);
    VariantSummary s;
    s.name = variant.name;
    s.schedule = variant.schedule;
    const auto& last = trace.mean.back();
    s.final_envelope_residual = last.envelope_residual;
    s.final_feasibility_residual = last.feasibility_residual;
    s.final_dist_sq = last.dist_sq;
    s.envelope_slope = safe_slope(trace.k, trace.mean, config.tail_fraction, &TraceRecord::envelope_residual);
    s.dist_slope = safe_slope(trace.k, trace.mean, config.tail_fraction, &TraceRecord::dist_sq);
    s.trace_file = fs::path(config.output_dir) / ("trace_" + sanitize(variant.name) + ".csv");
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_file(s.trace_file, csv.str());
    outputs.push_back(s.trace_file.filename().string());
    result.variants.push_back(std::move(s));
    result.traces.push_back(std::move(trace));
  }

  std::ostringstream summary;
  summary << "name,kind,mu0,gamma,iterations,rounds,final_envelope_residual,final_feasibility_residual,"
             "final_dist_sq,envelope_slope,dist_slope,trace_file\n";
  for (const auto& s : result.variants) {
    summary << s.name << ',' << schedule_kind(s.schedule) << ',' << format_double(s.schedule.mu0) << ','
            << format_double(s.schedule.gamma) << ',' << iterations << ',' << config.rounds << ','
            << format_double(s.final_envelope_residual) << ',' << format_double(s.final_feasibility_residual) << ','
            << format_double(s.final_dist_sq) << ',' << format_double(s.envelope_slope) << ','
            << format_double(s.dist_slope) << ',' << s.trace_file.filename().string() << '\n';
  }
  result.summary_file = fs::path(config.output_dir) / "summary.csv";
  write_file(result.summary_file, summary.str());
  outputs.push_back(result.summary_file.filename().string());

  json doc = manifest_base("run", config);
  json round_seeds = json::array();
  for (std::size_t r = 0; r < config.rounds; ++r) round_seeds.push_back(config.seed + r);
  doc["seeds"]["rounds"] = round_seeds;
  doc["iterations"] = iterations;
  doc["x0"] = config.x0 ? "config" : "origin";
  doc["reference"] = reference_json(result.reference);
  doc["optimal_set"] = {{"certified", model.certified()}, {"note", model.note()}};
  doc["outputs"] = outputs;
  result.manifest = write_manifest(config, "run", doc);

  if (log != nullptr) {
    *log << "F* = " << format_double(result.reference.F_star) << " (reference KKT residual "
         << format_double(result.reference.kkt_residual) << ")\n";
    *log << "dist to X*: " << (model.certified() ? "reported" : "absent") << " (" << model.note() << ")\n";
    *log << std::left << std::setw(14) << "schedule" << std::setw(24) << "final |F_mu - F*|" << std::setw(24)
         << "final feasibility" << std::setw(16) << "slope" << '\n';
    for (const auto& s : result.variants) {
      *log << std::left << std::setw(14) << s.name << std::setw(24) << format_double(s.final_envelope_residual)
           << std::setw(24) << format_double(s.final_feasibility_residual) << std::setw(16)
           << format_double(s.envelope_slope) << '\n';
    }
  }
  return result;
}

BoundsResult cmd_bounds(const ExperimentConfig& config, std::ostream* log) {
  const StochasticProblem problem = build_problem(config);
  const Vector x0 = resolve_x0(config, problem);
  const std::int64_t iterations = resolve_iterations(config, problem);
  const BoundsConfig& bc = config.bounds;
  ensure_dir(config.output_dir);

  BoundsResult result;
  json doc = manifest_base("bounds", config);
  doc["iterations"] = iterations;
  doc["source"] = bc.source;

  double sigma_X = 1.0;
  std::vector<Matrix> M;
  double noise = 0.0;
  if (bc.source == "cfp") {
    if (problem.has_smooth()) {
      throw Error(ErrorCode::config, "field 'bounds.source': cfp constants need an indicator-only problem");
    }
    if (bc.sigma_X) {
      sigma_X = *bc.sigma_X;
      doc["sigma_X"] = {{"value", sigma_X}, {"origin", "config"}};
    } else {
      LinearRegularityOptions opt = bc.estimator;
      opt.seed = bc.estimator_seed.value_or(config.seed);
      const auto est = estimate_linear_regularity(problem, opt, config.threads);
      sigma_X = est.sigma_hat;
      doc["sigma_X"] = {{"value", sigma_X},
                        {"origin", "estimate"},
                        {"samples_drawn", est.samples_drawn},
                        {"samples_used", est.samples_used},
                        {"estimator_seed", opt.seed}};
    }
    const OptimalSetModel model = OptimalSetModel::for_problem(problem, nullptr);
    const double d = dist_to_optimal(model, x0);
    result.dist0_sq = d * d;
  } else if (bc.source == "rsc") {
    if (problem.has_indicators()) {
      throw Error(ErrorCode::config, "field 'bounds.source': rsc constants are computed for unconstrained "
                                     "least-squares problems only");
    }
    const ReferenceSolution ref = reference_solve(problem, config.reference_tol);
    for (const auto& c : problem.components()) {
      const auto* ls = std::get_if<LeastSquares>(&c);
      if (ls == nullptr) {
        throw Error(ErrorCode::unsupported, "rsc constants need least-squares rows, found " + kind_name(c));
      }
      M.push_back(ls->a * ls->a.transpose());
    }
    noise = smooth_gradient_noise(problem, ref.x_ref);
    const OptimalSetModel model = OptimalSetModel::for_problem(problem, &ref);
    const double d = dist_to_optimal(model, x0);
    result.dist0_sq = d * d;
    doc["reference"] = reference_json(ref);
  } else {
    result.dist0_sq = *bc.dist0_sq;
  }
  doc["dist0_sq"] = result.dist0_sq;

  const auto rows = trace_rows(iterations, config.stride);
  json variants = json::array();
  for (const auto& variant : config.schedules) {
    RegularityConstants constants;
    if (bc.source == "cfp") {
      constants = constants_cfp(sigma_X, variant.schedule.mu0);
    } else if (bc.source == "rsc") {
      RscInputs in;
      in.rsc_case = RscCase::ii;
      in.M = M;
      in.weights = problem.weights();
      in.mu = variant.schedule.mu0;
      in.E_gF_sq = noise;
      constants = constants_rsc(in);
    } else {
      constants = bc.constants;
    }
    const auto curve = recurrence_bound_curve(result.dist0_sq, constants, variant.schedule, iterations);
    std::vector<double> sampled;
    sampled.reserve(rows.size());
    for (const auto k : rows) sampled.push_back(curve[static_cast<std::size_t>(k)]);
    const fs::path file = fs::path(config.output_dir) / ("bound_" + sanitize(variant.name) + ".csv");
    std::ostringstream csv;
    write_bound_csv(csv, rows, sampled);
    write_file(file, csv.str());

    json v{{"name", variant.name}, {"file", file.filename().string()}, {"constants", constants_json(constants)}};
    if (variant.schedule.kind == StepSchedule::Kind::polynomial && variant.schedule.gamma <= 1.0) {
      const auto rate = classify_rate(variant.schedule.mu0, constants.sigma_F_mu, variant.schedule.gamma);
      v["rate"] = rate.label;
    }
    variants.push_back(v);
    if (log != nullptr) {
      *log << variant.name << ": sigma_F_mu=" << format_double(constants.sigma_F_mu)
           << " beta=" << format_double(constants.beta) << " S*_F=" << format_double(constants.S_star_F)
           << " bound(K)=" << format_double(curve.back());
      if (v.contains("rate")) *log << " rate " << v["rate"].get<std::string>();
      *log << '\n';
    }
    result.constants.push_back(constants);
    result.files.push_back(file);
  }
  doc["variants"] = variants;
  result.manifest = write_manifest(config, "bounds", doc);
  return result;
}

VerifyReport cmd_verify(const ExperimentConfig& config, std::ostream* log) {
  VerifyOptions opt;
  opt.trials = config.verify.trials;
  opt.seed = config.seed;
  VerifyReport report = run_verify_suite(config.verify.suite, opt);
  ensure_dir(config.output_dir);
  write_file(fs::path(config.output_dir) / "verify_report.json", spp::to_json(report).dump(2) + "\n");
  if (log != nullptr) {
    for (const auto& r : report.results) {
      *log << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << r.name << " samples=" << r.samples
           << " worst=" << format_double(r.worst_violation) << " tol=" << format_double(r.tolerance) << '\n';
    }
    *log << (report.passed() ? "all invariants hold" : "invariant violations found") << '\n';
  }
  return report;
}

}  // namespace spp::cli
