#include "spp/verify.hpp"

#include "spp/diagnostics.hpp"
#include "spp/regularity.hpp"
#include "spp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace spp {
namespace {

constexpr double kRelativeSlack = 1e-10;

class Draws {
 public:
  Draws(std::uint64_t seed, std::uint64_t index) : engine_(rng::make_engine(seed, rng::Stream::verify, index)) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  Vector vector(Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Accumulates the worst violation of one invariant.
class Check {
 public:
  Check(std::string name, double tolerance) : result_{std::move(name), 0, -std::numeric_limits<double>::infinity(),
                                                      tolerance, false} {}

  /// lhs <= rhs with relative slack.
  void at_most(double lhs, double rhs) { observe((lhs - rhs) / std::max(1.0, std::abs(rhs))); }
  void observe(double violation) {
    ++result_.samples;
    if (std::isnan(violation)) violation = std::numeric_limits<double>::infinity();
    result_.worst_violation = std::max(result_.worst_violation, violation);
  }
  InvariantResult finish() {
    result_.passed = result_.samples > 0 && result_.worst_violation <= result_.tolerance;
    return result_;
  }

 private:
  InvariantResult result_;
};

Component random_component(Draws& d, int kind, Eigen::Index n) {
  Vector a = d.vector(n);
  switch (kind) {
    case 0: return LeastSquares{std::move(a), 2.0 * d.normal()};
    case 1: {
      const double lambda = d.uniform(0.0, 1.0) < 0.3 ? 0.0 : d.uniform(0.0, 2.0);
      return HingeReg{std::move(a), 2.0 * d.normal(), lambda};
    }
    case 2: return HalfspaceIndicator{std::move(a), d.normal()};
    default: return ScalarComposite{losses::abs_power(1.5), std::move(a), d.normal()};
  }
}

const char* kind_label(int kind) {
  static const char* labels[] = {"least_squares", "hinge_reg", "halfspace", "scalar_composite"};
  return labels[kind];
}

void prox_suite(const VerifyOptions& opt, std::vector<InvariantResult>& out) {
  for (int kind = 0; kind < 4; ++kind) {
    Check nonexp(std::string("nonexpansive/") + kind_label(kind), kRelativeSlack);
    Check lipschitz(std::string("envelope_gradient_lipschitz/") + kind_label(kind), kRelativeSlack);
    Check identity(std::string("envelope_identity/") + kind_label(kind), 1e-12);
    Check lower(std::string("envelope_below_F/") + kind_label(kind), kRelativeSlack);
    Check oracle(std::string("closed_form_vs_numeric/") + kind_label(kind), 1e-8);
    for (std::size_t t = 0; t < opt.trials; ++t) {
      Draws d(opt.seed, static_cast<std::uint64_t>(kind) * 1000003ULL + t);
      const Eigen::Index n = d.integer(1, 6);
      const Component c = random_component(d, kind, n);
      const double mu = d.log_uniform(1e-3, 1e2);
      const Vector x = d.vector(n, 2.0);
      const Vector y = d.vector(n, 2.0);
      const ProxResult px = moreau(c, x, mu);
      const ProxResult py = moreau(c, y, mu);
      const double gap = (x - y).norm();
      nonexp.observe(((px.z - py.z).norm() - gap) / gap);
      lipschitz.observe(((px.envelope_grad - py.envelope_grad).norm() - gap / mu) / (gap / mu));

      const double fz = is_indicator(c) ? 0.0 : value(c, px.z);
      const double expected = fz + (px.z - x).squaredNorm() / (2.0 * mu);
      identity.observe(std::abs(px.envelope_value - expected) / std::max(1.0, std::abs(expected)) +
                       ((x - px.z) / mu - px.envelope_grad).lpNorm<Eigen::Infinity>());
      const double fx = value(c, x);
      if (std::isfinite(fx)) lower.at_most(px.envelope_value, fx);
      if (kind != 3) oracle.observe((px.z - numeric_prox(c, x, mu).z).norm());
    }
    out.push_back(nonexp.finish());
    out.push_back(lipschitz.finish());
    out.push_back(identity.finish());
    out.push_back(lower.finish());
    if (kind != 3) out.push_back(oracle.finish());
  }
}

struct LsInstance {
  StochasticProblem problem;
  ReferenceSolution reference;
  double L = 0.0;
};

LsInstance ls_instance(std::uint64_t seed) {
  InstanceSpec spec;
  spec.family = Family::constrained_regression;
  spec.m = 20;
  spec.n = 5;
  spec.p = 0;
  spec.seed = seed;
  StochasticProblem problem = generate(spec);
  ReferenceSolution reference = reference_solve(problem, 1e-10);
  Matrix Q = Matrix::Zero(problem.dimension(), problem.dimension());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& ls = std::get<LeastSquares>(problem.component(i));
    Q += problem.weights()[static_cast<Eigen::Index>(i)] * ls.a * ls.a.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  return {std::move(problem), std::move(reference), eig.eigenvalues().maxCoeff()};
}

void lemma_suite(const VerifyOptions& opt, std::vector<InvariantResult>& out) {
  Check below("lemma/envelope_mean_below_F", kRelativeSlack);
  Check gap("lemma/optimal_gap_bound", kRelativeSlack);
  Check order("lemma/gradient_ordering", kRelativeSlack);
  Check contraction("lemma/rsc_contraction", kRelativeSlack);
  Check lipgrad_row("lemma/squared_gradient_bound_row", kRelativeSlack);
  Check lipgrad_mean("lemma/squared_gradient_bound_mean", kRelativeSlack);

  std::vector<LsInstance> instances;
  for (std::uint64_t s = 0; s < 4; ++s) instances.push_back(ls_instance(opt.seed * 16 + s));

  for (std::size_t t = 0; t < opt.trials; ++t) {
    Draws d(opt.seed, 5000000ULL + t);
    const auto& inst = instances[t % instances.size()];
    const auto& prob = inst.problem;
    const Eigen::Index n = prob.dimension();
    const double mu = d.log_uniform(1e-3, 1e1);
    const Vector x = t % 2 == 0 ? Vector(inst.reference.x_ref + d.vector(n, 1e-2)) : d.vector(n, 3.0);

    const double Fx = evaluate_F(prob, x);
    const double Fmu = envelope_value(prob, x, mu);
    below.at_most(Fmu, Fx);
    const double S = smooth_gradient_noise(prob, inst.reference.x_ref);
    gap.at_most(inst.reference.F_star - Fmu, 0.5 * mu * S);

    double lhs = 0.0;
    double rhs = 0.0;
    Vector grad_mean = Vector::Zero(n);
    for (std::size_t i = 0; i < prob.size(); ++i) {
      const double w = prob.weights()[static_cast<Eigen::Index>(i)];
      const auto& ls = std::get<LeastSquares>(prob.component(i));
      const double L = ls.a.squaredNorm();
      const Vector g = (ls.a.dot(x) - ls.b) * ls.a;
      grad_mean += w * g;
      const ProxResult px = moreau(prob.component(i), x, mu);
      lhs += w * g.squaredNorm() / ((1.0 + L * mu) * (1.0 + L * mu));
      rhs += w * px.envelope_grad.squaredNorm();

      lipgrad_row.at_most(g.squaredNorm(), 2.0 * L * value(prob.component(i), x));

      // (I + mu a a^T)^{s} acts as (1 + mu L)^{s} along a and as I elsewhere.
      const Vector y = d.vector(n, 3.0);
      const ProxResult py = moreau(prob.component(i), y, mu);
      auto power = [&](const Vector& v, double s) {
        const double along = ls.a.dot(v) / L;
        return Vector(v + (std::pow(1.0 + mu * L, s) - 1.0) * along * ls.a);
      };
      contraction.at_most(power(px.z - py.z, 0.5).norm(), power(x - y, -0.5).norm());
    }
    order.at_most(lhs, rhs);
    lipgrad_mean.at_most(grad_mean.squaredNorm(), 2.0 * inst.L * (Fx - inst.reference.F_star));
  }
  for (auto* c : {&below, &gap, &order, &contraction, &lipgrad_row, &lipgrad_mean}) out.push_back(c->finish());
}

// Independent O(k^2) evaluation of the recurrence bound.
double naive_bound(double d0, const RegularityConstants& c, const StepSchedule& s, std::int64_t k) {
  double prod = 1.0;
  for (std::int64_t i = 0; i < k; ++i) prod *= 1.0 - step_size(s, i) * c.sigma_F_mu;
  double sum = 0.0;
  for (std::int64_t i = 0; i < k; ++i) {
    double tail = 1.0;
    for (std::int64_t j = i + 1; j < k; ++j) tail *= 1.0 - step_size(s, j) * c.sigma_F_mu;
    const double mu = step_size(s, i);
    sum += tail * mu * mu;
  }
  return prod * d0 + (c.S_star_F + 2.0 * c.beta) * sum;
}

void bounds_suite(const VerifyOptions& opt, std::vector<InvariantResult>& out) {
  Check phi("phi_alpha/identities", 0.0);
  phi.observe(std::abs(phi_alpha(0.0, std::exp(1.0)) - 1.0));
  phi.observe(std::abs(phi_alpha(1.0, 3.0) - 2.0));
  phi.observe(std::abs(phi_alpha(-1.0, 2.0) - 0.5));
  out.push_back(phi.finish());

  // phi_alpha(x) - log x = alpha log^2(x) / 2 + O(alpha^2), so the 1e-9
  // continuity band at |alpha| <= 1e-6 applies where log^2 x <= 2e-3. Away
  // from x = 1 the small-alpha branch is compared with its Taylor series.
  Check continuity("phi_alpha/continuity_at_zero", 1e-9);
  Check series("phi_alpha/small_alpha_series", 1e-12);
  const double reach = std::sqrt(2e-3);
  for (std::size_t t = 0; t < opt.trials; ++t) {
    Draws d(opt.seed, 7000000ULL + t);
    const double alpha = d.uniform(-1e-6, 1e-6);
    const double near = std::exp(d.uniform(-reach, reach));
    continuity.observe(std::abs(phi_alpha(alpha, near) - std::log(near)));
    const double x = d.log_uniform(1e-3, 1e3);
    const double L = std::log(x);
    const double taylor = L * (1.0 + alpha * L / 2.0 * (1.0 + alpha * L / 3.0 * (1.0 + alpha * L / 4.0)));
    series.observe(std::abs(phi_alpha(alpha, x) - taylor) / std::max(1.0, std::abs(taylor)));
  }
  out.push_back(continuity.finish());
  out.push_back(series.finish());

  Check naive("recurrence_bound/naive_oracle", 1e-12);
  const std::int64_t ks[] = {0, 1, 2, 10, 100, 1000, 10000};
  for (std::size_t t = 0; t < 4; ++t) {
    Draws d(opt.seed, 8000000ULL + t);
    RegularityConstants c;
    c.sigma_F_mu = d.uniform(0.0, 0.9);
    c.beta = d.uniform(0.0, 1.0);
    c.S_star_F = d.uniform(0.0, 1.0);
    const StepSchedule s = t % 2 == 0 ? StepSchedule::polynomial(1.0, d.uniform(0.5, 1.0))
                                      : StepSchedule::constant(d.uniform(0.01, 1.0));
    const double d0 = d.uniform(0.1, 10.0);
    const auto curve = recurrence_bound_curve(d0, c, s, 10000);
    for (const auto k : ks) {
      const double ref = naive_bound(d0, c, s, k);
      naive.observe(std::abs(curve[static_cast<std::size_t>(k)] - ref) / std::max(1e-300, std::abs(ref)));
    }
  }
  out.push_back(naive.finish());

  Check geometric("recurrence_bound/cfp_geometric", 1e-12);
  for (std::size_t t = 0; t < 8; ++t) {
    Draws d(opt.seed, 9000000ULL + t);
    const double sigma_X = d.uniform(0.01, 1.0);
    const double mu = d.log_uniform(1e-2, 1e1);
    const auto curve = recurrence_bound_curve(1.0, constants_cfp(sigma_X, mu), StepSchedule::constant(mu), 10000);
    for (std::int64_t k = 0; k <= 10000; k += 97) {
      const double ref = std::pow(1.0 - sigma_X, static_cast<double>(k));
      if (ref < 1e-300) break;
      geometric.observe(std::abs(curve[static_cast<std::size_t>(k)] - ref) / ref);
    }
  }
  out.push_back(geometric.finish());
}

}  // namespace

bool VerifyReport::passed() const {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

std::vector<std::string> verify_suite_names() { return {"prox", "lemmas", "bounds", "all"}; }

VerifyReport run_verify_suite(const std::string& suite, const VerifyOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::config, "verify trials must be >= 1");
  VerifyReport report;
  report.suite = suite;
  report.seed = options.seed;
  const bool all = suite == "all";
  if (!all && suite != "prox" && suite != "lemmas" && suite != "bounds") {
    throw Error(ErrorCode::config, "unknown verify suite '" + suite + "' (expected prox, lemmas, bounds or all)");
  }
  if (all || suite == "prox") prox_suite(options, report.results);
  if (all || suite == "lemmas") lemma_suite(options, report.results);
  if (all || suite == "bounds") bounds_suite(options, report.results);
  return report;
}

nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json doc;
  doc["suite"] = report.suite;
  doc["seed"] = report.seed;
  doc["passed"] = report.passed();
  auto& list = doc["invariants"] = nlohmann::json::array();
  for (const auto& r : report.results) {
    list.push_back({{"invariant", r.name},
                    {"samples", r.samples},
                    {"worst_violation", r.worst_violation},
                    {"tolerance", r.tolerance},
                    {"passed", r.passed}});
  }
  return doc;
}

}  // namespace spp
