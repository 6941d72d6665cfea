#include "doctest.h"

#include "oracles.hpp"
#include "spp/diagnostics.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace spp;
using testing::code_of;
using testing::vec;

TEST_CASE("distance to a point model") {
  const auto m = OptimalSetModel::point(vec({1.0, 2.0}), true);
  CHECK(dist_to_optimal(m, vec({1.0, 2.0})) == 0.0);
  CHECK(dist_to_optimal(m, vec({4.0, 6.0})) == doctest::Approx(5.0));
  const auto unsure = OptimalSetModel::point(vec({1.0, 2.0}), false, "rank deficient");
  CHECK_FALSE(unsure.certified());
  CHECK(code_of([&] { dist_to_optimal(unsure, vec({0.0, 0.0})); }) == ErrorCode::unsupported);
}

TEST_CASE("distance to an affine set") {
  Matrix A(1, 2);
  A << 0.6, 0.8;
  const auto m = OptimalSetModel::affine(A, vec({1.0}));
  // a^T x - b = 2.
  CHECK(dist_to_optimal(m, vec({1.8, 2.4})) == doctest::Approx(2.0).epsilon(1e-14));

  // A single-row interpolation problem: X* is a line in the plane.
  const auto line = generate_interpolation_regression(1, 2, 5);
  const auto lm = OptimalSetModel::for_problem(line, nullptr);
  const auto& row = std::get<LeastSquares>(line.component(0));
  const Vector x = vec({3.0, -1.0});
  CHECK(dist_to_optimal(lm, x) == doctest::Approx(std::abs(row.a.dot(x) - row.b) / row.a.norm()).epsilon(1e-12));

  Matrix bad(2, 1);
  bad << 1.0, 1.0;
  CHECK(code_of([&] { OptimalSetModel::affine(bad, vec({0.0, 1.0})); }) == ErrorCode::invalid_spec);
}

TEST_CASE("distance to a halfspace intersection matches a grid oracle") {
  const std::vector<HalfspaceIndicator> hs = {{vec({1.0, 0.3}), 0.2}, {vec({-0.4, 1.0}), -0.1}};
  const auto m = OptimalSetModel::intersection(hs, vec({-5.0, -5.0}));
  for (const Vector& x : {vec({2.0, 1.5}), vec({0.9, -0.1}), vec({-0.5, 3.0})}) {
    CHECK(std::abs(dist_to_optimal(m, x) - oracle::grid_distance_2d(hs, x, 6.0)) <= 1e-4);
  }
  CHECK(code_of([&] { OptimalSetModel::intersection(hs, vec({5.0, 5.0})); }) == ErrorCode::invalid_spec);
}

TEST_CASE("intersection and affine representations agree") {
  // The hyperplane a^T z = b as two opposing halfspaces.
  const Vector a = vec({1.0, -2.0, 0.5});
  const double b = 0.7;
  Matrix A(1, 3);
  A.row(0) = a.transpose();
  const auto affine = OptimalSetModel::affine(A, vec({b}));
  const Vector anchor = a * (b / a.squaredNorm());
  const auto both = OptimalSetModel::intersection({{a, b}, {-a, -b}}, anchor);
  std::mt19937_64 engine(3);
  for (int t = 0; t < 50; ++t) {
    const Vector x = testing::normal_vector(engine, 3, 3.0);
    CHECK(std::abs(dist_to_optimal(affine, x) - dist_to_optimal(both, x)) <= 1e-8);
  }
}

TEST_CASE("optimal-set model selection") {
  const auto interp = generate_interpolation_regression(4, 3, 1);
  CHECK(std::holds_alternative<OptimalSetModel::AffineSet>(OptimalSetModel::for_problem(interp, nullptr).kind()));
  const auto cfp = generate_halfspace_cfp(3, 5, 1);
  CHECK(std::holds_alternative<OptimalSetModel::FeasibleIntersection>(
      OptimalSetModel::for_problem(cfp, nullptr).kind()));
  const auto reg = generate_constrained_regression({Family::constrained_regression, 3, 5, 0, 1, 0.1});
  CHECK(code_of([&] { OptimalSetModel::for_problem(reg, nullptr); }) == ErrorCode::unsupported);
  // Fewer rows than unknowns leaves the minimizer non-unique.
  const auto ref = reference_solve(reg, 1e-9);
  CHECK_FALSE(ref.unique);
  CHECK_FALSE(OptimalSetModel::for_problem(reg, &ref).certified());
}

TEST_CASE("envelope residual examples") {
  // Unconstrained: at x_ref the gap is at most mu S*_F / 2.
  const auto p = generate_constrained_regression({Family::constrained_regression, 25, 4, 0, 8, 0.1});
  const auto ref = reference_solve(p, 1e-12);
  double S = 0.0;
  for (const auto& c : p.components()) {
    const auto& ls = std::get<LeastSquares>(c);
    S += std::pow(ls.a.dot(ref.x_ref) - ls.b, 2) * ls.a.squaredNorm() / 25.0;
  }
  for (double mu : {1e-4, 1e-2, 0.1}) {
    CHECK(envelope_residual(p, ref.x_ref, mu, ref.F_star) <= 0.5 * mu * S * (1.0 + 1e-12));
  }

  const auto cfp = generate_halfspace_cfp(3, 5, 2);
  CHECK(envelope_residual(cfp, *cfp.interior_point(), 0.3, 0.0) == 0.0);

  // One quadratic row: F_mu(x) = (a^T x - b)^2 / (2 (1 + mu |a|^2)).
  const StochasticProblem q({LeastSquares{vec({1.0, 2.0}), 0.5}});
  const Vector x = vec({0.3, -1.1});
  const double r = 0.3 - 2.2 - 0.5;
  for (double mu : {0.01, 0.5, 3.0}) {
    CHECK(std::abs(envelope_value(q, x, mu) - r * r / (2.0 * (1.0 + 5.0 * mu))) <= 1e-12);
    CHECK(std::abs(envelope_residual(q, x, mu, 0.25) - std::abs(r * r / (2.0 * (1.0 + 5.0 * mu)) - 0.25)) <= 1e-12);
  }
}

TEST_CASE("rate slope fitting") {
  std::vector<double> k;
  std::vector<double> inv;
  std::vector<double> inv_sqrt;
  for (int i = 0; i <= 1000; ++i) {
    k.push_back(i);
    inv.push_back(i == 0 ? 1.0 : 1.0 / i);
    inv_sqrt.push_back(i == 0 ? 1.0 : 1.0 / std::sqrt(i));
  }
  CHECK(std::abs(fit_rate_slope(k, inv, 0.5) + 1.0) <= 1e-6);
  CHECK(std::abs(fit_rate_slope(k, inv_sqrt, 0.5) + 0.5) <= 1e-6);
  // The whole trace can be fitted once the k = 0 row is dropped.
  CHECK(code_of([&] { fit_rate_slope(k, inv_sqrt, 1.0); }) == ErrorCode::undefined_slope);
  const std::vector<double> k1(k.begin() + 1, k.end());
  const std::vector<double> m1(inv_sqrt.begin() + 1, inv_sqrt.end());
  CHECK(std::abs(fit_rate_slope(k1, m1, 1.0) + 0.5) <= 1e-6);

  auto with_zero = inv;
  with_zero[900] = 0.0;
  CHECK(code_of([&] { fit_rate_slope(k, with_zero, 0.5); }) == ErrorCode::undefined_slope);
  auto with_nan = inv;
  with_nan.back() = NAN;
  CHECK(code_of([&] { fit_rate_slope(k, with_nan, 0.5); }) == ErrorCode::undefined_slope);
  const std::vector<double> short_k(k.begin(), k.begin() + 60);
  const std::vector<double> short_m(inv.begin(), inv.begin() + 60);
  CHECK(code_of([&] { fit_rate_slope(short_k, short_m, 0.5); }) == ErrorCode::undefined_slope);
  CHECK(code_of([&] { fit_rate_slope(k, inv, 0.0); }) == ErrorCode::undefined_slope);

  std::vector<double> geo;
  for (int i = 0; i <= 200; ++i) geo.push_back(3.0 * std::pow(0.9, i));
  std::vector<double> kk(k.begin(), k.begin() + 201);
  CHECK(std::abs(fit_geometric_rate(kk, geo) - 0.9) <= 1e-12);
}
