#include "spp/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace spp::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::config, "field '" + path + "': " + message);
}

// Rejects keys outside `allowed` so typos do not pass silently.
void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& obj, const std::string& path, const std::string& key, double fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& obj, const std::string& path, const std::string& key, std::int64_t fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t seed_value(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(path, "expected a nonnegative integer");
}

std::string text(const json& obj, const std::string& path, const std::string& key, const std::string& fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(join(path, key), "expected true or false");
  return v.get<bool>();
}

void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be positive");
}

ScheduleConfig parse_schedule(const json& obj, const std::string& path) {
  check_keys(obj, path, {"name", "kind", "mu0", "gamma"});
  ScheduleConfig s;
  const std::string kind = text(obj, path, "kind", "polynomial");
  s.schedule.mu0 = number(obj, path, "mu0", 1.0);
  positive(s.schedule.mu0, join(path, "mu0"));
  if (kind == "polynomial") {
    s.schedule.kind = StepSchedule::Kind::polynomial;
    if (!obj.contains("gamma")) fail(join(path, "gamma"), "required for a polynomial schedule");
    s.schedule.gamma = number(obj, path, "gamma", 1.0);
    positive(s.schedule.gamma, join(path, "gamma"));
  } else if (kind == "constant") {
    s.schedule.kind = StepSchedule::Kind::constant;
    if (obj.contains("gamma")) fail(join(path, "gamma"), "not used by a constant schedule");
    s.schedule.gamma = 0.0;
  } else {
    fail(join(path, "kind"), "expected 'polynomial' or 'constant', got '" + kind + "'");
  }
  s.name = text(obj, path, "name", s.schedule.label());
  if (s.name.empty()) fail(join(path, "name"), "must not be empty");
  return s;
}

void validate_instance(const InstanceSpec& spec, const std::string& path) {
  if (spec.m < 0 || spec.n < 0 || spec.p < 0) fail(path, "m, n and p must be >= 0");
  if (spec.n < 1) fail(join(path, "n"), "must be >= 1");
  switch (spec.family) {
    case Family::constrained_regression:
      if (spec.m < 1) fail(join(path, "m"), "constrained_regression needs m >= 1");
      break;
    case Family::halfspace_cfp:
      if (spec.p < 1) fail(join(path, "p"), "halfspace_cfp needs p >= 1 halfspaces");
      positive(spec.margin, join(path, "margin"));
      break;
    case Family::interpolation_regression:
      if (spec.m < 1) fail(join(path, "m"), "interpolation_regression needs m >= 1");
      break;
  }
}

json schedule_json(const ScheduleConfig& s) {
  json j{{"name", s.name}, {"mu0", s.schedule.mu0}};
  if (s.schedule.kind == StepSchedule::Kind::constant) {
    j["kind"] = "constant";
  } else {
    j["kind"] = "polynomial";
    j["gamma"] = s.schedule.gamma;
  }
  return j;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::parse:
      return exit_config;
    case ErrorCode::io:
      return exit_io;
    default:
      return exit_solver;
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.schedules = {
      {"gamma=1", StepSchedule::polynomial(1.0, 1.0)},
      {"gamma=2/3", StepSchedule::polynomial(1.0, 2.0 / 3.0)},
      {"gamma=1/2", StepSchedule::polynomial(1.0, 0.5)},
  };
  return c;
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "", {"seed", "instance", "problem_file", "schedules", "iterations", "rounds", "reference_tol",
                       "x0", "stride", "record_timing", "sampling", "threads", "tail_fraction", "output_dir",
                       "bounds", "verify"});
  ExperimentConfig c = default_config();
  if (doc.contains("seed")) c.seed = seed_value(doc.at("seed"), "seed");

  if (doc.contains("instance")) {
    const auto& inst = doc.at("instance");
    check_keys(inst, "instance", {"family", "m", "n", "p", "seed", "margin"});
    const std::string family = text(inst, "instance", "family", to_string(c.instance.family));
    try {
      c.instance.family = family_from_string(family);
    } catch (const Error&) {
      fail("instance.family", "expected constrained_regression, halfspace_cfp or interpolation_regression, got '" +
                                  family + "'");
    }
    c.instance.m = static_cast<int>(integer(inst, "instance", "m", c.instance.m));
    c.instance.n = static_cast<int>(integer(inst, "instance", "n", c.instance.n));
    c.instance.p = static_cast<int>(integer(inst, "instance", "p", c.instance.p));
    c.instance.margin = number(inst, "instance", "margin", c.instance.margin);
    if (inst.contains("seed") && !inst.at("seed").is_null()) {
      c.instance_seed = seed_value(inst.at("seed"), "instance.seed");
    }
  }
  validate_instance(c.instance, "instance");

  if (doc.contains("problem_file") && !doc.at("problem_file").is_null()) {
    c.problem_file = text(doc, "", "problem_file", "");
    if (c.problem_file->empty()) fail("problem_file", "must not be empty");
  }

  if (doc.contains("schedules")) {
    const auto& list = doc.at("schedules");
    if (!list.is_array() || list.empty()) fail("schedules", "expected a nonempty array");
    c.schedules.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "schedules[" + std::to_string(i) + "]";
      c.schedules.push_back(parse_schedule(list.at(i), path));
      if (!names.insert(sanitize(c.schedules.back().name)).second) {
        fail(path + ".name", "duplicate schedule name '" + c.schedules.back().name + "'");
      }
    }
  }

  if (doc.contains("iterations") && !doc.at("iterations").is_null()) {
    c.iterations = integer(doc, "", "iterations", 0);
    if (*c.iterations < 1) fail("iterations", "must be >= 1");
  }
  const auto rounds = integer(doc, "", "rounds", static_cast<std::int64_t>(c.rounds));
  if (rounds < 1) fail("rounds", "must be >= 1");
  c.rounds = static_cast<std::size_t>(rounds);
  c.reference_tol = number(doc, "", "reference_tol", c.reference_tol);
  positive(c.reference_tol, "reference_tol");

  if (doc.contains("x0") && !doc.at("x0").is_null()) {
    const auto& x0 = doc.at("x0");
    if (x0.is_string() && x0.get<std::string>() == "origin") {
      c.x0.reset();
    } else {
      if (!x0.is_array()) fail("x0", "expected \"origin\" or an array of numbers");
      std::vector<double> values;
      for (std::size_t i = 0; i < x0.size(); ++i) {
        if (!x0.at(i).is_number()) fail("x0[" + std::to_string(i) + "]", "expected a number");
        values.push_back(x0.at(i).get<double>());
        if (!std::isfinite(values.back())) fail("x0[" + std::to_string(i) + "]", "must be finite");
      }
      c.x0 = std::move(values);
    }
  }

  c.stride = integer(doc, "", "stride", c.stride);
  if (c.stride < 1) fail("stride", "must be >= 1");
  c.record_timing = boolean(doc, "", "record_timing", c.record_timing);
  const std::string sampling = text(doc, "", "sampling", "random");
  if (sampling == "random") {
    c.sampling = Sampling::random;
  } else if (sampling == "cyclic") {
    c.sampling = Sampling::cyclic;
  } else {
    fail("sampling", "expected 'random' or 'cyclic', got '" + sampling + "'");
  }
  c.threads = static_cast<int>(integer(doc, "", "threads", c.threads));
  if (c.threads < 0) fail("threads", "must be >= 0 (0 = all cores)");
  c.tail_fraction = number(doc, "", "tail_fraction", c.tail_fraction);
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) fail("tail_fraction", "must lie in (0, 1]");
  c.output_dir = text(doc, "", "output_dir", c.output_dir);
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");

  if (doc.contains("bounds")) {
    const auto& b = doc.at("bounds");
    check_keys(b, "bounds", {"source", "sigma_X", "estimator", "constants", "dist0_sq"});
    c.bounds.source = text(b, "bounds", "source", c.bounds.source);
    if (c.bounds.source != "cfp" && c.bounds.source != "rsc" && c.bounds.source != "manual") {
      fail("bounds.source", "expected 'cfp', 'rsc' or 'manual', got '" + c.bounds.source + "'");
    }
    if (b.contains("sigma_X") && !b.at("sigma_X").is_null()) {
      if (b.at("sigma_X").is_string() && b.at("sigma_X").get<std::string>() == "estimate") {
        c.bounds.sigma_X.reset();
      } else {
        const double s = number(b, "bounds", "sigma_X", 1.0);
        if (!(s > 0.0 && s <= 1.0)) fail("bounds.sigma_X", "must lie in (0, 1] or be \"estimate\"");
        c.bounds.sigma_X = s;
      }
    }
    if (b.contains("estimator")) {
      const auto& e = b.at("estimator");
      check_keys(e, "bounds.estimator", {"samples", "seed", "tol", "radius"});
      const auto samples = integer(e, "bounds.estimator", "samples", static_cast<std::int64_t>(c.bounds.estimator.samples));
      if (samples < 1) fail("bounds.estimator.samples", "must be >= 1");
      c.bounds.estimator.samples = static_cast<std::size_t>(samples);
      if (e.contains("seed") && !e.at("seed").is_null()) {
        c.bounds.estimator_seed = seed_value(e.at("seed"), "bounds.estimator.seed");
      }
      c.bounds.estimator.oracle_tol = number(e, "bounds.estimator", "tol", c.bounds.estimator.oracle_tol);
      positive(c.bounds.estimator.oracle_tol, "bounds.estimator.tol");
      c.bounds.estimator.radius = number(e, "bounds.estimator", "radius", c.bounds.estimator.radius);
      positive(c.bounds.estimator.radius, "bounds.estimator.radius");
    }
    if (b.contains("constants")) {
      const auto& k = b.at("constants");
      check_keys(k, "bounds.constants", {"sigma_F_mu", "beta", "sigma_X", "S_star_F"});
      auto& rc = c.bounds.constants;
      rc.sigma_F_mu = number(k, "bounds.constants", "sigma_F_mu", rc.sigma_F_mu);
      rc.beta = number(k, "bounds.constants", "beta", rc.beta);
      rc.sigma_X = number(k, "bounds.constants", "sigma_X", rc.sigma_X);
      rc.S_star_F = number(k, "bounds.constants", "S_star_F", rc.S_star_F);
      if (rc.sigma_F_mu < 0.0) fail("bounds.constants.sigma_F_mu", "must be >= 0");
      if (rc.beta < 0.0) fail("bounds.constants.beta", "must be >= 0");
      if (rc.S_star_F < 0.0) fail("bounds.constants.S_star_F", "must be >= 0");
      if (!(rc.sigma_X > 0.0 && rc.sigma_X <= 1.0)) fail("bounds.constants.sigma_X", "must lie in (0, 1]");
    }
    if (b.contains("dist0_sq") && !b.at("dist0_sq").is_null()) {
      c.bounds.dist0_sq = number(b, "bounds", "dist0_sq", 0.0);
      if (*c.bounds.dist0_sq < 0.0) fail("bounds.dist0_sq", "must be >= 0");
    }
    if (c.bounds.source == "manual" && !c.bounds.dist0_sq) fail("bounds.dist0_sq", "required for manual constants");
  }

  if (doc.contains("verify")) {
    const auto& v = doc.at("verify");
    check_keys(v, "verify", {"suite", "trials"});
    c.verify.suite = text(v, "verify", "suite", c.verify.suite);
    const auto names = verify_suite_names();
    if (std::find(names.begin(), names.end(), c.verify.suite) == names.end()) {
      fail("verify.suite", "unknown suite '" + c.verify.suite + "'");
    }
    const auto trials = integer(v, "verify", "trials", static_cast<std::int64_t>(c.verify.trials));
    if (trials < 1) fail("verify.trials", "must be >= 1");
    c.verify.trials = static_cast<std::size_t>(trials);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json schedules = json::array();
  for (const auto& s : c.schedules) schedules.push_back(schedule_json(s));
  json b{{"source", c.bounds.source},
         {"sigma_X", c.bounds.sigma_X ? json(*c.bounds.sigma_X) : json("estimate")},
         {"estimator",
          {{"samples", c.bounds.estimator.samples},
           {"seed", optional_json(c.bounds.estimator_seed)},
           {"tol", c.bounds.estimator.oracle_tol},
           {"radius", c.bounds.estimator.radius}}},
         {"constants",
          {{"sigma_F_mu", c.bounds.constants.sigma_F_mu},
           {"beta", c.bounds.constants.beta},
           {"sigma_X", c.bounds.constants.sigma_X},
           {"S_star_F", c.bounds.constants.S_star_F}}},
         {"dist0_sq", optional_json(c.bounds.dist0_sq)}};
  return json{
      {"seed", c.seed},
      {"instance",
       {{"family", to_string(c.instance.family)},
        {"m", c.instance.m},
        {"n", c.instance.n},
        {"p", c.instance.p},
        {"seed", optional_json(c.instance_seed)},
        {"margin", c.instance.margin}}},
      {"problem_file", optional_json(c.problem_file)},
      {"schedules", schedules},
      {"iterations", optional_json(c.iterations)},
      {"rounds", c.rounds},
      {"reference_tol", c.reference_tol},
      {"x0", c.x0 ? json(*c.x0) : json("origin")},
      {"stride", c.stride},
      {"record_timing", c.record_timing},
      {"sampling", c.sampling == Sampling::random ? "random" : "cyclic"},
      {"threads", c.threads},
      {"tail_fraction", c.tail_fraction},
      {"output_dir", c.output_dir},
      {"bounds", b},
      {"verify", {{"suite", c.verify.suite}, {"trials", c.verify.trials}}},
  };
}

std::string config_hash(const ExperimentConfig& config) {
  json doc = to_json(config);
  doc.erase("output_dir");
  doc.erase("threads");
  const std::string bytes = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t instance_seed(const ExperimentConfig& config) { return config.instance_seed.value_or(config.seed); }

StochasticProblem build_problem(const ExperimentConfig& config) {
  if (config.problem_file) {
    std::ifstream in(*config.problem_file);
    if (!in) throw Error(ErrorCode::io, "cannot open problem file " + *config.problem_file);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse, *config.problem_file + ": " + e.what());
    }
    return problem_from_json(doc);
  }
  InstanceSpec spec = config.instance;
  spec.seed = instance_seed(config);
  return generate(spec);
}

std::int64_t resolve_iterations(const ExperimentConfig& config, const StochasticProblem& problem) {
  return config.iterations.value_or(10 * static_cast<std::int64_t>(problem.size()));
}

Vector resolve_x0(const ExperimentConfig& config, const StochasticProblem& problem) {
  if (!config.x0) return Vector::Zero(problem.dimension());
  if (static_cast<Eigen::Index>(config.x0->size()) != problem.dimension()) {
    throw Error(ErrorCode::config, "field 'x0': has " + std::to_string(config.x0->size()) +
                                       " entries, the problem dimension is " + std::to_string(problem.dimension()));
  }
  return Eigen::Map<const Vector>(config.x0->data(), problem.dimension());
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (const char ch : name) {
    const auto u = static_cast<unsigned char>(ch);
    out.push_back(std::isalnum(u) || ch == '-' || ch == '.' ? ch : '_');
  }
  return out;
}

}  // namespace spp::cli
