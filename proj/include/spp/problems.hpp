#pragma once

#include "spp/prox.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spp {

/// F(x) = sum_i w_i F(x; xi_i) over a finite family of components.
///
/// Smooth components (the Omega_1 part) and halfspace indicators (Omega_2)
/// are told apart by kind. Problems are immutable after construction.
class StochasticProblem {
 public:
  /// Empty `weights` means uniform. Throws invalid_spec on an empty family,
  /// mixed dimensions or a weight vector that is not a probability vector.
  explicit StochasticProblem(std::vector<Component> components, Vector weights = {});

  const std::vector<Component>& components() const noexcept { return components_; }
  const Component& component(std::size_t i) const { return components_.at(i); }
  const Vector& weights() const noexcept { return weights_; }
  Eigen::Index dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return components_.size(); }

  bool has_indicators() const noexcept { return indicator_count_ > 0; }
  bool has_smooth() const noexcept { return indicator_count_ < components_.size(); }
  std::size_t indicator_count() const noexcept { return indicator_count_; }
  std::vector<HalfspaceIndicator> halfspaces() const;

  /// A point strictly inside every halfspace, when the generator recorded one.
  const std::optional<Vector>& interior_point() const noexcept { return interior_point_; }
  double interior_margin() const noexcept { return interior_margin_; }
  StochasticProblem& set_interior_point(Vector point, double margin);

  /// A point minimizing every component at once (interpolation instances).
  const std::optional<Vector>& shared_minimizer() const noexcept { return shared_minimizer_; }
  StochasticProblem& set_shared_minimizer(Vector point);

 private:
  std::vector<Component> components_;
  Vector weights_;
  Eigen::Index dimension_ = 0;
  std::size_t indicator_count_ = 0;
  std::optional<Vector> interior_point_;
  double interior_margin_ = 0.0;
  std::optional<Vector> shared_minimizer_;
};

enum class Family { constrained_regression, halfspace_cfp, interpolation_regression };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

struct InstanceSpec {
  Family family = Family::constrained_regression;
  int m = 32;
  int n = 40;
  int p = 200;
  std::uint64_t seed = 0;
  /// Lower bound on the distance of the recorded interior point to every
  /// halfspace boundary (halfspace_cfp only).
  double margin = 0.1;
};

/// m least-squares rows with N(0,1) data and p halfspaces c^T x <= d with
/// c ~ N(0,I) and d = c^T xbar + |u|, xbar ~ N(0,I), u ~ N(0,1).
StochasticProblem generate_constrained_regression(const InstanceSpec& spec);

/// `count` halfspaces that all contain the ball of radius `margin` around a
/// N(0,I) anchor.
StochasticProblem generate_halfspace_cfp(int n, int count, std::uint64_t seed, double margin = 0.1);

/// Consistent least-squares system a_i^T z* = b_i with N(0,1) rows and z*.
StochasticProblem generate_interpolation_regression(int m, int n, std::uint64_t seed);

/// Dispatches on spec.family.
StochasticProblem generate(const InstanceSpec& spec);

/// sum over smooth components of w_i F(x; xi_i). Indicator components are not
/// evaluated, so this is the smooth objective even at infeasible x.
double evaluate_F(const StochasticProblem& problem, const Vector& x);

/// Weighted mean of dist^2 to the halfspaces, with weights renormalized over
/// the indicator components. Zero for problems without indicators.
double evaluate_feasibility(const StochasticProblem& problem, const Vector& x);

struct ReferenceSolution {
  Vector x_ref;
  double F_star = 0.0;
  /// max of the stationarity and complementary-slackness residuals.
  double kkt_residual = 0.0;
  /// max_i max{0, c_i^T x_ref - d_i}
  double feasibility_violation = 0.0;
  /// Sufficient second-order certificate that x_ref is the only minimizer.
  bool unique = false;
  /// Multipliers of the halfspace constraints in problem order.
  Vector multipliers;
  int iterations = 0;
};

/// Deterministic full-information solver for problems built from
/// least-squares rows and halfspaces. ADMM with an exact active-set polish;
/// throws infeasible / max_iterations when the residuals cannot reach `tol`.
ReferenceSolution reference_solve(const StochasticProblem& problem, double tol = 1e-6,
                                  int max_iterations = 200000);

// JSON problem files: {"format", "dimension", "weights", "components": [...],
// optional "interior_point", "interior_margin", "shared_minimizer"}.
nlohmann::json to_json(const StochasticProblem& problem);
StochasticProblem problem_from_json(const nlohmann::json& doc);

}  // namespace spp
