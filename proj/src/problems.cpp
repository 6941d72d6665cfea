#include "spp/problems.hpp"

#include "spp/projection.hpp"
#include "spp/rng.hpp"

#include <cmath>
#include <limits>

namespace spp {
namespace {

constexpr const char* kProblemFormat = "spp-problem/1";

Vector normal_vector(std::mt19937_64& engine, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(engine);
  return v;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::invalid_spec, message);
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw Error(ErrorCode::parse, std::string("field '") + field + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::parse, std::string("field '") + field + "' must hold numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::parse, std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

double number(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw Error(ErrorCode::parse, std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

}  // namespace

StochasticProblem::StochasticProblem(std::vector<Component> components, Vector weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  require(!components_.empty(), "a problem needs at least one component");
  dimension_ = spp::dimension(components_.front());
  for (const auto& c : components_) {
    validate(c);
    require(spp::dimension(c) == dimension_, "all components must share one dimension");
    if (is_indicator(c)) ++indicator_count_;
  }
  const auto count = static_cast<Eigen::Index>(components_.size());
  if (weights_.size() == 0) {
    weights_ = Vector::Constant(count, 1.0 / static_cast<double>(count));
  }
  require(weights_.size() == count, "weight vector length must match the component count");
  require(weights_.allFinite() && (weights_.array() >= 0.0).all(), "weights must be finite and nonnegative");
  require(std::abs(weights_.sum() - 1.0) <= 1e-12, "weights must sum to 1");
}

std::vector<HalfspaceIndicator> StochasticProblem::halfspaces() const {
  std::vector<HalfspaceIndicator> out;
  out.reserve(indicator_count_);
  for (const auto& c : components_) {
    if (const auto* h = std::get_if<HalfspaceIndicator>(&c)) out.push_back(*h);
  }
  return out;
}

StochasticProblem& StochasticProblem::set_interior_point(Vector point, double margin) {
  require(point.size() == dimension_, "interior point dimension mismatch");
  interior_point_ = std::move(point);
  interior_margin_ = margin;
  return *this;
}

StochasticProblem& StochasticProblem::set_shared_minimizer(Vector point) {
  require(point.size() == dimension_, "shared minimizer dimension mismatch");
  shared_minimizer_ = std::move(point);
  return *this;
}

std::string to_string(Family family) {
  switch (family) {
    case Family::constrained_regression: return "constrained_regression";
    case Family::halfspace_cfp: return "halfspace_cfp";
    case Family::interpolation_regression: return "interpolation_regression";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "constrained_regression") return Family::constrained_regression;
  if (name == "halfspace_cfp") return Family::halfspace_cfp;
  if (name == "interpolation_regression") return Family::interpolation_regression;
  throw Error(ErrorCode::invalid_spec, "unknown instance family '" + name + "'");
}

StochasticProblem generate_constrained_regression(const InstanceSpec& spec) {
  require(spec.family == Family::constrained_regression, "spec family must be constrained_regression");
  require(spec.m >= 1, "constrained_regression needs m >= 1");
  require(spec.n >= 1, "constrained_regression needs n >= 1");
  require(spec.p >= 0, "p must be >= 0");

  std::vector<Component> components;
  components.reserve(static_cast<std::size_t>(spec.m + spec.p));
  for (int i = 0; i < spec.m; ++i) {
    auto engine = rng::make_engine(spec.seed, rng::Stream::smooth_row, static_cast<std::uint64_t>(i));
    Vector row = normal_vector(engine, spec.n);
    const double target = std::normal_distribution<double>(0.0, 1.0)(engine);
    components.emplace_back(LeastSquares{std::move(row), target});
  }
  if (spec.p == 0) return StochasticProblem(std::move(components));

  auto anchor_engine = rng::make_engine(spec.seed, rng::Stream::anchor);
  const Vector anchor = normal_vector(anchor_engine, spec.n);
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spec.p; ++i) {
    auto engine = rng::make_engine(spec.seed, rng::Stream::halfspace, static_cast<std::uint64_t>(i));
    Vector normal = normal_vector(engine, spec.n);
    const double slack = std::abs(std::normal_distribution<double>(0.0, 1.0)(engine));
    margin = std::min(margin, slack / normal.norm());
    const double offset = normal.dot(anchor) + slack;
    components.emplace_back(HalfspaceIndicator{std::move(normal), offset});
  }
  StochasticProblem problem(std::move(components));
  problem.set_interior_point(anchor, margin);
  return problem;
}

StochasticProblem generate_halfspace_cfp(int n, int count, std::uint64_t seed, double margin) {
  require(n >= 1, "halfspace_cfp needs n >= 1");
  require(count >= 1, "halfspace_cfp needs at least one halfspace");
  require(margin >= 0.0 && std::isfinite(margin), "margin must be finite and >= 0");

  auto anchor_engine = rng::make_engine(seed, rng::Stream::anchor);
  const Vector anchor = normal_vector(anchor_engine, n);
  std::vector<Component> components;
  components.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto engine = rng::make_engine(seed, rng::Stream::halfspace, static_cast<std::uint64_t>(i));
    Vector normal = normal_vector(engine, n);
    const double slack = std::abs(std::normal_distribution<double>(0.0, 1.0)(engine));
    const double offset = normal.dot(anchor) + normal.norm() * (margin + slack);
    components.emplace_back(HalfspaceIndicator{std::move(normal), offset});
  }
  StochasticProblem problem(std::move(components));
  problem.set_interior_point(anchor, margin);
  return problem;
}

StochasticProblem generate_interpolation_regression(int m, int n, std::uint64_t seed) {
  require(m >= 1, "interpolation_regression needs m >= 1");
  require(n >= 1, "interpolation_regression needs n >= 1");

  auto truth_engine = rng::make_engine(seed, rng::Stream::ground_truth);
  const Vector truth = normal_vector(truth_engine, n);
  std::vector<Component> components;
  components.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto engine = rng::make_engine(seed, rng::Stream::smooth_row, static_cast<std::uint64_t>(i));
    Vector row = normal_vector(engine, n);
    const double target = row.dot(truth);
    components.emplace_back(LeastSquares{std::move(row), target});
  }
  StochasticProblem problem(std::move(components));
  problem.set_shared_minimizer(truth);
  return problem;
}

StochasticProblem generate(const InstanceSpec& spec) {
  switch (spec.family) {
    case Family::constrained_regression: return generate_constrained_regression(spec);
    case Family::halfspace_cfp: return generate_halfspace_cfp(spec.n, spec.p, spec.seed, spec.margin);
    case Family::interpolation_regression: return generate_interpolation_regression(spec.m, spec.n, spec.seed);
  }
  throw Error(ErrorCode::invalid_spec, "unknown family");
}

double evaluate_F(const StochasticProblem& problem, const Vector& x) {
  double total = 0.0;
  const auto& w = problem.weights();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& c = problem.component(i);
    if (is_indicator(c)) continue;
    total += w[static_cast<Eigen::Index>(i)] * value(c, x);
  }
  return total;
}

double evaluate_feasibility(const StochasticProblem& problem, const Vector& x) {
  if (!problem.has_indicators()) return 0.0;
  double total = 0.0;
  double mass = 0.0;
  const auto& w = problem.weights();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto* h = std::get_if<HalfspaceIndicator>(&problem.component(i));
    if (h == nullptr) continue;
    const double wi = w[static_cast<Eigen::Index>(i)];
    const double dist = halfspace_distance(*h, x);
    total += wi * dist * dist;
    mass += wi;
  }
  return mass > 0.0 ? total / mass : 0.0;
}

nlohmann::json to_json(const StochasticProblem& problem) {
  nlohmann::json doc;
  doc["format"] = kProblemFormat;
  doc["dimension"] = problem.dimension();
  doc["weights"] = vector_json(problem.weights());
  auto& list = doc["components"] = nlohmann::json::array();
  for (const auto& component : problem.components()) {
    nlohmann::json entry;
    entry["kind"] = kind_name(component);
    if (const auto* c = std::get_if<LeastSquares>(&component)) {
      entry["a"] = vector_json(c->a);
      entry["b"] = c->b;
    } else if (const auto* h = std::get_if<HingeReg>(&component)) {
      entry["a"] = vector_json(h->a);
      entry["b"] = h->b;
      entry["lambda"] = h->lambda;
    } else if (const auto* s = std::get_if<HalfspaceIndicator>(&component)) {
      entry["c"] = vector_json(s->c);
      entry["d"] = s->d;
    } else {
      throw Error(ErrorCode::unsupported, "scalar-composite components hold a function handle and cannot be serialized");
    }
    list.push_back(std::move(entry));
  }
  if (problem.interior_point()) {
    doc["interior_point"] = vector_json(*problem.interior_point());
    doc["interior_margin"] = problem.interior_margin();
  }
  if (problem.shared_minimizer()) doc["shared_minimizer"] = vector_json(*problem.shared_minimizer());
  return doc;
}

StochasticProblem problem_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::parse, "problem document must be a JSON object");
  if (doc.contains("format") && doc.at("format") != kProblemFormat) {
    throw Error(ErrorCode::parse, "unsupported problem format " + doc.at("format").dump());
  }
  const auto& list = field(doc, "components");
  if (!list.is_array()) throw Error(ErrorCode::parse, "field 'components' must be an array");
  std::vector<Component> components;
  components.reserve(list.size());
  for (const auto& entry : list) {
    const auto& kind_field = field(entry, "kind");
    if (!kind_field.is_string()) throw Error(ErrorCode::parse, "field 'kind' must be a string");
    const auto kind = kind_field.get<std::string>();
    if (kind == "least_squares") {
      components.emplace_back(LeastSquares{json_vector(field(entry, "a"), "a"), number(entry, "b")});
    } else if (kind == "hinge_reg") {
      components.emplace_back(
          HingeReg{json_vector(field(entry, "a"), "a"), number(entry, "b"), number(entry, "lambda")});
    } else if (kind == "halfspace") {
      components.emplace_back(HalfspaceIndicator{json_vector(field(entry, "c"), "c"), number(entry, "d")});
    } else {
      throw Error(ErrorCode::parse, "unknown component kind '" + kind + "'");
    }
  }
  Vector weights;
  if (doc.contains("weights")) weights = json_vector(doc.at("weights"), "weights");
  StochasticProblem problem(std::move(components), std::move(weights));
  if (doc.contains("dimension") && doc.at("dimension").get<Eigen::Index>() != problem.dimension()) {
    throw Error(ErrorCode::parse, "declared dimension does not match the component data");
  }
  if (doc.contains("interior_point")) {
    problem.set_interior_point(json_vector(doc.at("interior_point"), "interior_point"),
                               doc.value("interior_margin", 0.0));
  }
  if (doc.contains("shared_minimizer")) {
    problem.set_shared_minimizer(json_vector(doc.at("shared_minimizer"), "shared_minimizer"));
  }
  return problem;
}

}  // namespace spp
