#pragma once

#include "spp/problems.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace spp {

/// Representation of the optimal set X* used for dist_{X*}.
class OptimalSetModel {
 public:
  struct Point {
    Vector x_ref;
  };
  /// {z : A z = y}
  struct AffineSet {
    Matrix A;
    Vector y;
  };
  struct FeasibleIntersection {
    std::vector<HalfspaceIndicator> halfspaces;
    Vector anchor;
  };
  using Kind = std::variant<Point, AffineSet, FeasibleIntersection>;

  /// A point model is only usable for distances when `certified_unique`.
  static OptimalSetModel point(Vector x_ref, bool certified_unique, std::string note = {});
  /// Throws invalid_spec unless the system A z = y is consistent.
  static OptimalSetModel affine(Matrix A, Vector y, std::string note = {});
  /// Throws invalid_spec unless `anchor` lies in every halfspace.
  static OptimalSetModel intersection(std::vector<HalfspaceIndicator> halfspaces, Vector anchor,
                                      std::string note = {});

  /// Picks the representation a problem supports: shared minimizer -> affine
  /// set of the rows, indicator-only -> intersection, otherwise the reference
  /// point (certified only when the reference solve proved uniqueness).
  static OptimalSetModel for_problem(const StochasticProblem& problem, const ReferenceSolution* reference);

  const Kind& kind() const noexcept { return kind_; }
  bool certified() const noexcept { return certified_; }
  const std::string& note() const noexcept { return note_; }

 private:
  OptimalSetModel(Kind kind, bool certified, std::string note)
      : kind_(std::move(kind)), certified_(certified), note_(std::move(note)) {}

  Kind kind_;
  bool certified_ = false;
  std::string note_;
};

/// dist_{X*}(x). Throws unsupported for an uncertified model.
double dist_to_optimal(const OptimalSetModel& model, const Vector& x, double tol = 1e-10);

/// E[F_mu(x; xi)] under the problem weights.
double envelope_value(const StochasticProblem& problem, const Vector& x, double mu);

/// |E[F_mu(x; xi)] - F*|
double envelope_residual(const StochasticProblem& problem, const Vector& x, double mu, double F_star);

/// OLS slope of log(metric) against log(k) over the last `tail_fraction` of
/// the samples. Needs >= 50 tail points with k >= 1; throws undefined_slope on
/// nonpositive metric values in the tail.
double fit_rate_slope(std::span<const double> k, std::span<const double> metric, double tail_fraction);

/// exp of the OLS slope of log(metric) against k over the samples with
/// positive metric: the per-iteration geometric contraction factor.
double fit_geometric_rate(std::span<const double> k, std::span<const double> metric);

}  // namespace spp
