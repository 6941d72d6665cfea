#include "doctest.h"

#include "oracles.hpp"
#include "spp/prox.hpp"
#include "spp/rng.hpp"

#include <random>

using namespace spp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

struct Rand {
  std::mt19937_64 engine;
  explicit Rand(std::uint64_t seed) : engine(seed) {}
  double normal() { return std::normal_distribution<double>()(engine); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  Vector vector(Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
};

Component random_component(Rand& r, int kind, Eigen::Index n) {
  Vector a = r.vector(n);
  if (kind == 0) return LeastSquares{a, 2.0 * r.normal()};
  if (kind == 1) return HingeReg{a, 2.0 * r.normal(), r.uniform(0.0, 1.0) < 0.3 ? 0.0 : r.uniform(0.0, 2.0)};
  if (kind == 2) return HalfspaceIndicator{a, r.normal()};
  return ScalarComposite{losses::abs_power(1.5), a, r.normal()};
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an spp::Error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("least-squares prox examples") {
  const auto r = prox_least_squares(vec({1, 0}), vec({1, 0}), 0.0, 1.0);
  CHECK((r.z - vec({0.5, 0})).norm() < 1e-15);
  CHECK((oracle::prox(LeastSquares{vec({1, 0}), 0.0}, vec({1, 0}), 1.0) - vec({0.5, 0})).norm() < 1e-6);

  // A zero residual is a fixed point.
  const Vector a = vec({0.3, -1.2, 2.0});
  const Vector x = vec({1.0, 0.5, -0.25});
  const auto fixed = prox_least_squares(x, a, a.dot(x), 0.7);
  CHECK((fixed.z - x).norm() < 1e-15);

  const auto tiny = prox_least_squares(vec({1, 0}), vec({1, 0}), 0.0, 1e-12);
  CHECK((tiny.z - vec({1, 0})).norm() < 1e-6);
}

TEST_CASE("least-squares envelope value at x=(1,0) matches the brute-force prox") {
  const LeastSquares c{vec({1, 0}), 0.0};
  const Vector x = vec({1, 0});
  const Vector z = oracle::prox(c, x, 1.0);
  const double expected = oracle::objective(c, z) + (z - x).squaredNorm() / 2.0;
  const auto r = moreau(c, x, 1.0);
  CHECK(r.envelope_value == doctest::Approx(expected).epsilon(1e-10));
  CHECK(r.envelope_value == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("hinge prox examples") {
  CHECK((prox_hinge_reg(vec({-1, 0}), vec({1, 0}), 0.0, 0.0, 1.0).z - vec({-1, 0})).norm() < 1e-15);
  CHECK((prox_hinge_reg(vec({5, 0}), vec({1, 0}), 0.0, 0.0, 1.0).z - vec({4, 0})).norm() < 1e-14);
  CHECK((prox_hinge_reg(vec({0, 2}), vec({1, 0}), 0.0, 1.0, 1.0).z - vec({0, 1})).norm() < 1e-14);
  CHECK((oracle::prox(HingeReg{vec({1, 0}), 0.0, 1.0}, vec({0, 2}), 1.0) - vec({0, 1})).norm() < 1e-6);
}

TEST_CASE("hinge prox with a ridge and an active kink") {
  // lambda = mu = 1, a = 1, b = 0, x = 3: the minimizer sits on the kink at
  // z = 1 since s = 1 clamps the hinge subgradient.
  const auto r = prox_hinge_reg(vec({3}), vec({1}), 0.0, 1.0, 1.0);
  const Vector brute = oracle::prox(HingeReg{vec({1}), 0.0, 1.0}, vec({3}), 1.0);
  CHECK(brute[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("halfspace projection examples") {
  CHECK((project_halfspace(vec({2, 3}), vec({1, 0}), 0.0) - vec({0, 3})).norm() < 1e-15);
  CHECK((project_halfspace(vec({-1, 5}), vec({1, 0}), 0.0) - vec({-1, 5})).norm() == 0.0);
  CHECK((project_halfspace(vec({1, 1}), vec({1, 1}), 0.0) - vec({0, 0})).norm() < 1e-15);
  CHECK((oracle::prox(HalfspaceIndicator{vec({1, 1}), 0.0}, vec({1, 1}), 1.0) - vec({0, 0})).norm() < 1e-6);
}

TEST_CASE("halfspace projection postconditions") {
  Rand r(11);
  for (int t = 0; t < 500; ++t) {
    const Vector c = r.vector(4);
    const double d = 3.0 * r.normal();
    const Vector x = r.vector(4, 5.0);
    const Vector z = project_halfspace(x, c, d);
    CHECK(c.dot(z) <= d + 1e-12 * (1.0 + std::abs(d)));
    const Vector step = z - x;
    // Parallel to c: the component orthogonal to c vanishes.
    CHECK((step - step.dot(c) / c.squaredNorm() * c).norm() <= 1e-12 * (1.0 + step.norm()));
    if (c.dot(x) <= d) CHECK(step.norm() == 0.0);
  }
}

TEST_CASE("scalar-composite prox examples") {
  const Vector x = vec({1.0, -2.0});
  const Vector a = vec({1.5, 0.5});
  const auto via_bisection = prox_scalar_composite(x, *losses::half_square(), a, 0.3, 0.8);
  const auto closed = prox_least_squares(x, a, 0.3, 0.8);
  CHECK((via_bisection.z - closed.z).norm() <= 1e-8);

  CHECK((prox_scalar_composite(x, *losses::zero(), a, 0.3, 0.8).z - x).norm() == 0.0);

  const auto p15 = prox_scalar_composite(vec({1, 0}), *losses::abs_power(1.5), vec({1, 0}), 0.0, 1.0);
  const double t = oracle::minimize_1d([](double s) { return std::pow(std::abs(s), 1.5) + 0.5 * (s - 1) * (s - 1); },
                                       -2.0, 2.0, 400001);
  CHECK(std::abs(p15.z[0] - t) <= 1e-6);
  CHECK(std::abs(p15.z[1]) <= 1e-15);
}

TEST_CASE("moreau envelope examples") {
  const auto r = moreau(HalfspaceIndicator{vec({1, 0}), 0.0}, vec({2, 0}), 1.0);
  CHECK(r.envelope_value == doctest::Approx(2.0).epsilon(1e-15));

  const Vector a = vec({1.0, 2.0});
  const Vector xs = vec({0.2, 0.4});
  const std::vector<Component> at_minimizer = {
      LeastSquares{a, a.dot(xs)},
      HingeReg{a, a.dot(xs) + 1.0, 0.0},
      HalfspaceIndicator{a, a.dot(xs) + 1.0},
      ScalarComposite{losses::abs_power(1.5), a, a.dot(xs)},
  };
  for (const auto& c : at_minimizer) CHECK(moreau(c, xs, 0.5).envelope_grad.norm() <= 1e-12);
}

TEST_CASE("prox domain errors") {
  CHECK(code_of([] { prox_least_squares(vec({1, 0}), vec({0, 0}), 0.0, 1.0); }) == ErrorCode::invalid_component);
  CHECK(code_of([] { prox_least_squares(vec({1, 0}), vec({1, 0}), 0.0, 0.0); }) == ErrorCode::invalid_stepsize);
  CHECK(code_of([] { prox_least_squares(vec({1, 0}), vec({1, 0}), 0.0, -1.0); }) == ErrorCode::invalid_stepsize);
  CHECK(code_of([] { prox_hinge_reg(vec({1, 0}), vec({0, 0}), 0.0, 0.0, 1.0); }) == ErrorCode::invalid_component);
  CHECK(code_of([] { prox_hinge_reg(vec({1, 0}), vec({1, 0}), 0.0, 0.0, 0.0); }) == ErrorCode::invalid_stepsize);
  CHECK(code_of([] { project_halfspace(vec({1, 0}), vec({0, 0}), 0.0); }) == ErrorCode::invalid_component);
  CHECK(code_of([] { validate(HingeReg{vec({1, 0}), 0.0, -1.0}); }) == ErrorCode::invalid_component);

  const ScalarLoss broken{"broken", [](double t) { return t; }, [](double) { return std::nan(""); }};
  CHECK(code_of([&] { prox_scalar_composite(vec({1}), broken, vec({1}), 0.0, 1.0); }) == ErrorCode::diverged);
}

TEST_CASE("nonexpansiveness and envelope gradient Lipschitz bound over random pairs") {
  for (int kind = 0; kind < 4; ++kind) {
    Rand r(100 + static_cast<std::uint64_t>(kind));
    double worst_nonexp = -1.0;
    double worst_lip = -1.0;
    for (int t = 0; t < 1000; ++t) {
      const Eigen::Index n = 1 + t % 5;
      const Component c = random_component(r, kind, n);
      const double mu = r.log_uniform(1e-3, 1e2);
      const Vector x = r.vector(n, 2.0);
      const Vector y = r.vector(n, 2.0);
      const auto px = moreau(c, x, mu);
      const auto py = moreau(c, y, mu);
      const double gap = (x - y).norm();
      worst_nonexp = std::max(worst_nonexp, ((px.z - py.z).norm() - gap) / gap);
      worst_lip = std::max(worst_lip, ((px.envelope_grad - py.envelope_grad).norm() * mu - gap) / gap);
    }
    CAPTURE(kind);
    CHECK(worst_nonexp <= 1e-10);
    CHECK(worst_lip <= 1e-10);
  }
}

TEST_CASE("envelope identities and lower bound") {
  for (int kind = 0; kind < 4; ++kind) {
    Rand r(200 + static_cast<std::uint64_t>(kind));
    for (int t = 0; t < 300; ++t) {
      const Eigen::Index n = 1 + t % 4;
      const Component c = random_component(r, kind, n);
      const double mu = r.log_uniform(1e-3, 1e2);
      const Vector x = r.vector(n, 2.0);
      const auto p = moreau(c, x, mu);
      const double fz = kind == 2 ? 0.0 : oracle::objective(c, p.z);
      const double expected = fz + (p.z - x).squaredNorm() / (2.0 * mu);
      CHECK(std::abs(p.envelope_value - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
      CHECK(((x - p.z) / mu - p.envelope_grad).lpNorm<Eigen::Infinity>() == 0.0);
      const double fx = oracle::objective(c, x);
      if (std::isfinite(fx)) CHECK(p.envelope_value <= fx * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST_CASE("closed forms agree with the bisection prox and with the brute-force prox") {
  for (int kind = 0; kind < 3; ++kind) {
    Rand r(300 + static_cast<std::uint64_t>(kind));
    double worst_numeric = 0.0;
    double worst_brute = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Eigen::Index n = 1 + t % 6;
      const Component c = random_component(r, kind, n);
      const double mu = r.log_uniform(1e-3, 1e2);
      const Vector x = r.vector(n, 2.0);
      const Vector z = moreau(c, x, mu).z;
      worst_numeric = std::max(worst_numeric, (z - numeric_prox(c, x, mu).z).norm());
      if (t % 20 == 0) worst_brute = std::max(worst_brute, (z - oracle::prox(c, x, mu)).norm() / (1.0 + z.norm()));
    }
    CAPTURE(kind);
    CHECK(worst_numeric <= 1e-8);
    CHECK(worst_brute <= 1e-5);
  }
}

TEST_CASE("stepsizes below the identity threshold leave x unchanged") {
  const Vector x = vec({1.0, 2.0});
  CHECK((moreau(LeastSquares{vec({1, 1}), 0.0}, x, 1e-15).z - x).norm() == 0.0);
  CHECK((moreau(HingeReg{vec({1, 1}), 0.0, 1.0}, x, 1e-15).z - x).norm() == 0.0);
  // Projections do not depend on the stepsize at all.
  CHECK((moreau(HalfspaceIndicator{vec({1, 1}), 0.0}, x, 1e-15).z - vec({-0.5, 0.5})).norm() < 1e-15);
}
