#include "doctest.h"

#include "oracles.hpp"
#include "spp/regularity.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace spp;
using testing::code_of;
using testing::vec;

TEST_CASE("phi_alpha identities and continuity") {
  CHECK(phi_alpha(0.0, std::numbers::e) == 1.0);
  CHECK(phi_alpha(1.0, 3.0) == 2.0);
  CHECK(phi_alpha(-1.0, 2.0) == 0.5);
  CHECK(phi_alpha(2.0, 3.0) == 4.0);
  // The gap to log x is alpha log^2(x) / 2 to first order.
  for (double x : {0.96, 0.999, 1.0, 1.001, 1.04}) {
    for (double a : {1e-6, -1e-6, 1e-9, -1e-12}) {
      CHECK(std::abs(phi_alpha(a, x) - std::log(x)) <= 1e-9);
    }
  }
  for (double x : {1e-3, 0.01, 0.5, 2.0, 37.0, 1e3}) {
    for (double a : {1e-6, -1e-6, 1e-4, -2e-4}) {
      const double L = std::log(x);
      const double taylor = L + a * L * L / 2.0 + a * a * L * L * L / 6.0 + a * a * a * L * L * L * L / 24.0;
      CHECK(std::abs(phi_alpha(a, x) - taylor) <= 1e-12 * std::max(1.0, std::abs(taylor)));
      CHECK(std::abs(phi_alpha(a, x) - std::log(x)) <= std::abs(a) * L * L);
    }
  }
  // Just past the small-alpha branch the pow form takes over seamlessly.
  CHECK(std::abs(phi_alpha(1e-3, 50.0) - phi_alpha(1e-3 * (1 - 1e-12), 50.0)) <= 1e-9);
  CHECK(code_of([] { phi_alpha(0.5, 0.0); }) == ErrorCode::domain);
  CHECK(code_of([] { phi_alpha(0.0, -1.0); }) == ErrorCode::domain);
}

TEST_CASE("recurrence bound examples") {
  RegularityConstants none;
  none.sigma_F_mu = 0.5;
  CHECK(recurrence_bound(1.0, none, StepSchedule::constant(1.0), 3) == 0.125);

  RegularityConstants flat;
  flat.sigma_F_mu = 0.0;
  flat.S_star_F = 0.3;
  flat.beta = 0.1;
  const auto s = StepSchedule::polynomial(1.0, 0.5);
  double sum = 0.0;
  for (int i = 0; i < 20; ++i) sum += step_size(s, i) * step_size(s, i);
  CHECK(recurrence_bound(2.0, flat, s, 20) == doctest::Approx(2.0 + 0.5 * sum).epsilon(1e-14));

  RegularityConstants c;
  c.sigma_F_mu = 0.5;
  c.S_star_F = 1.0;
  const auto harmonic = StepSchedule::polynomial(1.0, 1.0);
  CHECK(std::abs(recurrence_bound(1.0, c, harmonic, 10) - oracle::recurrence_bound(1.0, c, harmonic, 10)) <= 1e-12);
  CHECK(recurrence_bound(1.7, c, harmonic, 0) == 1.7);
}

TEST_CASE("recurrence bound against the double-loop oracle") {
  RegularityConstants c;
  c.sigma_F_mu = 0.37;
  c.S_star_F = 0.8;
  c.beta = 0.25;
  for (const auto& s : {StepSchedule::polynomial(1.0, 1.0), StepSchedule::polynomial(2.0, 0.5),
                        StepSchedule::constant(0.9)}) {
    const auto curve = recurrence_bound_curve(3.0, c, s, 2000);
    for (std::int64_t k : {0, 1, 2, 7, 100, 999, 2000}) {
      const double naive = oracle::recurrence_bound(3.0, c, s, k);
      CHECK(std::abs(curve[static_cast<std::size_t>(k)] - naive) <= 1e-12 * std::max(1.0, naive));
      CHECK(curve[static_cast<std::size_t>(k)] == recurrence_bound(3.0, c, s, k));
    }
  }
}

TEST_CASE("recurrence bound with zero noise is geometric") {
  RegularityConstants c;
  c.sigma_F_mu = 0.03;
  const auto curve = recurrence_bound_curve(1.0, c, StepSchedule::constant(2.0), 10000);
  for (std::int64_t k = 0; k <= 10000; k += 250) {
    CHECK(std::abs(curve[static_cast<std::size_t>(k)] - std::pow(0.94, static_cast<double>(k))) <= 1e-12);
  }
}

TEST_CASE("recurrence bound errors") {
  RegularityConstants c;
  c.sigma_F_mu = 2.0;
  CHECK(code_of([&] { recurrence_bound(1.0, c, StepSchedule::constant(1.0), 5); }) == ErrorCode::stepsize_too_large);
  // Only the first step is too large.
  CHECK(code_of([&] { recurrence_bound(1.0, c, StepSchedule::polynomial(1.0, 1.0), 5); }) ==
        ErrorCode::stepsize_too_large);
  CHECK_NOTHROW(recurrence_bound(1.0, c, StepSchedule::constant(0.5), 5));
  CHECK(code_of([&] { recurrence_bound(-1.0, c, StepSchedule::constant(0.1), 5); }) == ErrorCode::domain);

  std::ostringstream out;
  write_bound_csv(out, {0, 5}, {1.0, 0.5});
  CHECK(out.str() == "k,bound\n0,1\n5,0.5\n");
  CHECK(code_of([&] { write_bound_csv(out, {0}, {1.0, 2.0}); }) == ErrorCode::invalid_spec);
}

TEST_CASE("rate classification") {
  CHECK(classify_rate(1.0, 1.0, 0.5).label == "O(1/k^0.5)");
  CHECK(classify_rate(1.0, 1.0, 0.5).exponent == 0.5);
  const auto edge = classify_rate(1.0, std::numbers::e - 1.0, 1.0);
  CHECK(edge.label == "O(ln k / k)");
  CHECK(edge.regime == RateDescriptor::Regime::log_k_over_k);
  CHECK(classify_rate(1.0, 10.0, 1.0).label == "O(1/k)");
  CHECK(classify_rate(2.0, 5.0, 1.0).regime == RateDescriptor::Regime::inverse_k);
  const auto slow = classify_rate(1.0, 0.5, 1.0);
  CHECK(slow.regime == RateDescriptor::Regime::slow_polynomial);
  CHECK(slow.exponent == doctest::Approx(2.0 * std::log(1.5)).epsilon(1e-15));
  CHECK(code_of([] { classify_rate(1.0, 1.0, 1.5); }) == ErrorCode::unsupported_schedule);
  CHECK(code_of([] { classify_rate(1.0, 1.0, 0.0); }) == ErrorCode::unsupported_schedule);
}

TEST_CASE("quadratic-growth constants") {
  const auto c = constants_quadratic_growth(1.0, 1.0, 1.0, 1.0, 0.0, 0.0);
  CHECK(c.beta == 0.0);
  CHECK(c.sigma_F_mu == doctest::Approx(1.0 / 97.0).epsilon(1e-15));
  // Second evaluation written out term by term.
  const double sf = 0.7, sx = 0.4, L = 2.5, mu = 0.3, Eg = 0.2, g = 0.05;
  const auto d = constants_quadratic_growth(sf, sx, L, mu, Eg, g);
  const double denom = sf * mu * mu + 8.0 * (1.0 + 2.0 * sx) * (1.0 + mu * L) * (1.0 + mu * L);
  CHECK(std::abs(d.sigma_F_mu - sf * mu * sx / denom) <= 1e-15);
  const double t = 1.0 + sf / (4.0 * L * L);
  CHECK(std::abs(d.beta - (Eg + (1.0 / sx + t * t / (4.0 * sx * sx * sx)) * g)) <= 1e-14);

  // Nonincreasing over a mu-grid from the peak onwards.
  const double peak = quadratic_growth_sigma_peak(sf, sx, L);
  double prev = constants_quadratic_growth(sf, sx, L, peak, 0, 0).sigma_F_mu;
  for (int i = 1; i <= 200; ++i) {
    const double m = peak * std::pow(1.05, i);
    const double now = constants_quadratic_growth(sf, sx, L, m, 0, 0).sigma_F_mu;
    CHECK(now <= prev);
    prev = now;
  }
  // Below the peak the constant grows with mu.
  CHECK(constants_quadratic_growth(sf, sx, L, 0.5 * peak, 0, 0).sigma_F_mu <
        constants_quadratic_growth(sf, sx, L, peak, 0, 0).sigma_F_mu);

  CHECK(code_of([] { constants_quadratic_growth(0.0, 1.0, 1.0, 1.0, 0.0, 0.0); }) == ErrorCode::domain);
  CHECK(code_of([] { constants_quadratic_growth(1.0, 0.0, 1.0, 1.0, 0.0, 0.0); }) == ErrorCode::domain);
  CHECK(code_of([] { constants_quadratic_growth(1.0, 1.0, 1.0, -1.0, 0.0, 0.0); }) == ErrorCode::domain);
  CHECK(code_of([] { constants_quadratic_growth(1.0, 1.5, 1.0, 1.0, 0.0, 0.0); }) == ErrorCode::domain);
}

TEST_CASE("RSC constants") {
  RscInputs in;
  in.M = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  in.mu = 1.0;
  CHECK((rsc_smoothed_curvature(in.M, {}, 1.0) - 0.5 * Matrix::Identity(3, 3)).norm() <= 1e-15);
  const auto ii = constants_rsc(in);
  CHECK(ii.sigma_F_mu == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ii.beta == 0.0);

  // Interpolation: every gradient term vanishes so beta = 0 in all cases.
  for (auto c : {RscCase::i, RscCase::ii, RscCase::iii}) {
    RscInputs z = in;
    z.rsc_case = c;
    z.sigma_X = 0.6;
    z.sigma_fX = 0.5;
    CHECK(constants_rsc(z).beta == 0.0);
  }

  // Diagonal family: per-coordinate hand computation.
  const std::vector<Vector> diags = {vec({1.0, 0.2, 3.0}), vec({0.5, 2.0, 0.0}), vec({4.0, 0.1, 1.0})};
  const Vector w = vec({0.2, 0.3, 0.5});
  RscInputs diag;
  diag.weights = w;
  diag.mu = 0.7;
  diag.E_gF_sq = 0.9;
  for (const auto& d : diags) diag.M.push_back(d.asDiagonal());
  double smallest = INFINITY;
  for (int j = 0; j < 3; ++j) {
    double entry = 0.0;
    for (int x = 0; x < 3; ++x) entry += w[x] * diags[static_cast<std::size_t>(x)][j] / (1.0 + 0.7 * diags[static_cast<std::size_t>(x)].maxCoeff());
    smallest = std::min(smallest, entry);
  }
  const auto dc = constants_rsc(diag);
  CHECK(std::abs(dc.sigma_F_mu - smallest) <= 1e-12);
  CHECK(dc.beta == doctest::Approx(0.45));
  CHECK(dc.S_star_F == doctest::Approx(0.9));

  diag.rsc_case = RscCase::iii;
  diag.E_gf_sq = 0.4;
  diag.mean_gf_sq = 0.1;
  diag.sigma_X = 0.25;
  CHECK(constants_rsc(diag).beta == doctest::Approx(0.2 + 0.1 / 0.5));

  diag.rsc_case = RscCase::i;
  diag.sigma_fX = 0.5;
  const auto ci = constants_rsc(diag);
  CHECK(ci.sigma_F_mu == doctest::Approx(1.0 / (2.0 * (1.0 + 0.7 * 4.0)) * 0.5));
  CHECK(ci.beta == doctest::Approx(0.35 * (1.0 + 8.0) * 0.4 + 0.7 / 0.5 * 0.1));

  RscInputs singular;
  singular.M = {vec({1.0, 0.0}).asDiagonal()};
  CHECK(code_of([&] { constants_rsc(singular); }) == ErrorCode::case_violation);
  singular.rsc_case = RscCase::iii;
  CHECK(code_of([&] { constants_rsc(singular); }) == ErrorCode::case_violation);
  RscInputs indefinite;
  indefinite.M = {vec({1.0, -0.1}).asDiagonal()};
  CHECK(code_of([&] { constants_rsc(indefinite); }) == ErrorCode::domain);
  // Roundoff-sized negative eigenvalues are absorbed.
  indefinite.M = {vec({1.0, -1e-14}).asDiagonal(), Matrix::Identity(2, 2)};
  CHECK_NOTHROW(constants_rsc(indefinite));
  CHECK(rsc_case_from_string("iii") == RscCase::iii);
  CHECK(code_of([] { rsc_case_from_string("iv"); }) == ErrorCode::config);
}

TEST_CASE("CFP constants") {
  const auto c = constants_cfp(0.3, 0.1);
  CHECK(c.sigma_F_mu == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(c.beta == 0.0);
  for (double sx : {0.01, 0.3, 0.77, 1.0}) {
    for (double mu : {1e-3, 0.1, 1.0, 7.0}) {
      const auto k = constants_cfp(sx, mu);
      CHECK(std::abs(mu * k.sigma_F_mu - sx) <= 1e-15);
      for (std::int64_t n : {1, 10, 100}) {
        CHECK(std::abs(recurrence_bound(1.0, k, StepSchedule::constant(mu), n) - std::pow(1.0 - sx, static_cast<double>(n))) <=
              1e-12);
      }
    }
  }
  CHECK(code_of([] { constants_cfp(0.0, 1.0); }) == ErrorCode::domain);
  CHECK(code_of([] { constants_cfp(1.5, 1.0); }) == ErrorCode::domain);
  CHECK(code_of([] { constants_cfp(0.5, 0.0); }) == ErrorCode::domain);
}

TEST_CASE("gradient noise at the optimum") {
  const StochasticProblem p({LeastSquares{vec({1.0, 0.0}), 1.0}, LeastSquares{vec({0.0, 2.0}), 0.0},
                             HalfspaceIndicator{vec({1.0, 1.0}), 5.0}});
  // Gradients at the origin: (-1, 0) and (0, 0); halfspaces contribute 0.
  CHECK(smooth_gradient_noise(p, vec({0.0, 0.0})) == doctest::Approx(1.0 / 3.0));
  const StochasticProblem hinge({HingeReg{vec({1.0}), 0.0, 0.0}});
  CHECK(code_of([&] { smooth_gradient_noise(hinge, vec({0.0})); }) == ErrorCode::unsupported);
}

TEST_CASE("linear regularity estimates") {
  LinearRegularityOptions o;
  o.samples = 500;
  const StochasticProblem one({HalfspaceIndicator{vec({1.0, 2.0, -1.0}), 0.5}});
  CHECK(std::abs(estimate_linear_regularity(one, o).sigma_hat - 1.0) <= 1e-6);

  const StochasticProblem twin({HalfspaceIndicator{vec({1.0, 1.0}), 0.0}, HalfspaceIndicator{vec({2.0, 2.0}), 0.0}});
  CHECK(std::abs(estimate_linear_regularity(twin, o).sigma_hat - 1.0) <= 1e-6);

  // Orthogonal halfspaces x1 <= 0, x2 <= 0: brute-force minimum of the ratio
  // over a dense grid of the positive quadrant.
  const std::vector<HalfspaceIndicator> quadrant = {{vec({1, 0}), 0.0}, {vec({0, 1}), 0.0}};
  const StochasticProblem orth({quadrant[0], quadrant[1]});
  double grid_min = INFINITY;
  for (int i = 1; i <= 60; ++i) {
    for (int j = 1; j <= 60; ++j) {
      const Vector x = vec({0.1 * i, 0.1 * j});
      const double d = oracle::grid_distance_2d(quadrant, x, 8.0, 41);
      grid_min = std::min(grid_min, 0.5 * (x[0] * x[0] + x[1] * x[1]) / (d * d));
    }
  }
  const auto est = estimate_linear_regularity(orth, o);
  CHECK(std::abs(est.sigma_hat - grid_min) <= 1e-3);
  CHECK(est.samples_drawn == 500);
  CHECK(est.samples_used > 300);

  // sigma_hat always lies in (0, 1].
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfp = generate_halfspace_cfp(3, 6, seed);
    LinearRegularityOptions q;
    q.samples = 200;
    q.seed = seed;
    const double s = estimate_linear_regularity(cfp, q).sigma_hat;
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("linear regularity estimator errors") {
  const StochasticProblem ls({LeastSquares{vec({1.0}), 0.0}});
  CHECK(code_of([&] { estimate_linear_regularity(ls); }) == ErrorCode::invalid_spec);
  const StochasticProblem one({HalfspaceIndicator{vec({1.0}), 0.0}});
  LinearRegularityOptions o;
  o.samples = 0;
  CHECK(code_of([&] { estimate_linear_regularity(one, o); }) == ErrorCode::invalid_spec);
  // Samples that never leave the feasible set are all discarded.
  const StochasticProblem roomy({HalfspaceIndicator{vec({1.0}), 100.0}});
  LinearRegularityOptions tiny;
  tiny.samples = 50;
  tiny.radius = 1.0;
  CHECK(code_of([&] { estimate_linear_regularity(roomy, tiny); }) == ErrorCode::insufficient_samples);
}
