#include "spp/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_direction(const Vector& a, const char* what) {
  if (a.size() == 0 || !a.allFinite() || a.squaredNorm() == 0.0) {
    throw Error(ErrorCode::invalid_component, std::string(what) + " must be a finite nonzero vector");
  }
}

void check_stepsize(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw Error(ErrorCode::invalid_stepsize, "stepsize must be positive and finite, got " + std::to_string(mu));
  }
}

void check_point(const Vector& x, const Vector& a) {
  if (x.size() != a.size()) {
    throw Error(ErrorCode::invalid_component, "point dimension " + std::to_string(x.size()) +
                                                  " does not match component dimension " +
                                                  std::to_string(a.size()));
  }
}

ProxResult assemble(const Vector& x, Vector z, double f_at_z, double mu) {
  ProxResult r;
  const Vector diff = x - z;
  r.envelope_value = f_at_z + diff.squaredNorm() / (2.0 * mu);
  r.envelope_grad = diff / mu;
  r.z = std::move(z);
  return r;
}

ProxResult identity_prox(const Vector& x, double f_at_x) {
  ProxResult r;
  r.z = x;
  r.envelope_value = f_at_x;
  r.envelope_grad = Vector::Zero(x.size());
  return r;
}

// Minimizes loss(s - shift) + (s - s0)^2 / (2 kappa) over s.
double scalar_prox(const ScalarLoss& loss, double s0, double shift, double kappa, double tol) {
  auto slope = [&](double s) { return loss.derivative(s - shift) + (s - s0) / kappa; };

  const double g0 = slope(s0);
  if (std::isnan(g0)) throw Error(ErrorCode::diverged, "loss subgradient is NaN at the starting point");
  if (g0 == 0.0) return s0;

  double lo = s0;
  double hi = s0;
  double width = std::max(1.0, std::abs(s0)) * 1e-3;
  constexpr int kMaxExpansions = 2100;
  int expansions = 0;
  if (g0 > 0.0) {
    for (;;) {
      lo = s0 - width;
      const double g = slope(lo);
      if (std::isnan(g)) throw Error(ErrorCode::diverged, "loss subgradient is NaN while bracketing");
      if (g <= 0.0) break;
      hi = lo;
      width *= 2.0;
      if (++expansions > kMaxExpansions || !std::isfinite(lo)) {
        throw Error(ErrorCode::diverged, "could not bracket the prox minimizer (loss unbounded below?)");
      }
    }
  } else {
    for (;;) {
      hi = s0 + width;
      const double g = slope(hi);
      if (std::isnan(g)) throw Error(ErrorCode::diverged, "loss subgradient is NaN while bracketing");
      if (g > 0.0) break;
      lo = hi;
      width *= 2.0;
      if (++expansions > kMaxExpansions || !std::isfinite(hi)) {
        throw Error(ErrorCode::diverged, "could not bracket the prox minimizer (loss unbounded below?)");
      }
    }
  }

  // Invariant: slope(lo) <= 0 < slope(hi).
  while (hi - lo > tol) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (slope(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double mid = lo + 0.5 * (hi - lo);
  return std::isfinite(loss.value(mid - shift)) ? mid : lo;
}

}  // namespace

void validate(const Component& component) {
  std::visit(overloaded{
                 [](const LeastSquares& c) {
                   check_direction(c.a, "least-squares row a");
                   if (!std::isfinite(c.b)) throw Error(ErrorCode::invalid_component, "b must be finite");
                 },
                 [](const HingeReg& c) {
                   check_direction(c.a, "hinge row a");
                   if (!std::isfinite(c.b)) throw Error(ErrorCode::invalid_component, "b must be finite");
                   if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) {
                     throw Error(ErrorCode::invalid_component, "hinge ridge weight must be >= 0");
                   }
                 },
                 [](const HalfspaceIndicator& c) {
                   check_direction(c.c, "halfspace normal c");
                   if (!std::isfinite(c.d)) throw Error(ErrorCode::invalid_component, "d must be finite");
                 },
                 [](const ScalarComposite& c) {
                   check_direction(c.a, "composite row a");
                   if (!c.loss || !c.loss->value || !c.loss->derivative) {
                     throw Error(ErrorCode::invalid_component, "scalar composite needs a loss with value and derivative");
                   }
                 },
             },
             component);
}

Eigen::Index dimension(const Component& component) {
  return std::visit(overloaded{
                        [](const HalfspaceIndicator& c) { return c.c.size(); },
                        [](const auto& c) { return c.a.size(); },
                    },
                    component);
}

bool is_indicator(const Component& component) {
  return std::holds_alternative<HalfspaceIndicator>(component);
}

std::string kind_name(const Component& component) {
  return std::visit(overloaded{
                        [](const LeastSquares&) { return std::string("least_squares"); },
                        [](const HingeReg&) { return std::string("hinge_reg"); },
                        [](const HalfspaceIndicator&) { return std::string("halfspace"); },
                        [](const ScalarComposite&) { return std::string("scalar_composite"); },
                    },
                    component);
}

double value(const Component& component, const Vector& x) {
  return std::visit(overloaded{
                        [&](const LeastSquares& c) {
                          const double r = c.a.dot(x) - c.b;
                          return 0.5 * r * r;
                        },
                        [&](const HingeReg& c) {
                          return std::max(0.0, c.a.dot(x) - c.b) + 0.5 * c.lambda * x.squaredNorm();
                        },
                        [&](const HalfspaceIndicator& c) { return c.c.dot(x) <= c.d ? 0.0 : kInf; },
                        [&](const ScalarComposite& c) { return c.loss->value(c.a.dot(x) - c.b); },
                    },
                    component);
}

ProxResult prox_least_squares(const Vector& x, const Vector& a, double b, double mu) {
  check_direction(a, "least-squares row a");
  check_point(x, a);
  check_stepsize(mu);
  const double residual = a.dot(x) - b;
  if (mu < kMinStepsize) return identity_prox(x, 0.5 * residual * residual);

  Vector z = x - (mu * residual / (1.0 + mu * a.squaredNorm())) * a;
  const double rz = a.dot(z) - b;
  return assemble(x, std::move(z), 0.5 * rz * rz, mu);
}

ProxResult prox_hinge_reg(const Vector& x, const Vector& a, double b, double lambda, double mu) {
  check_direction(a, "hinge row a");
  check_point(x, a);
  check_stepsize(mu);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_component, "hinge ridge weight must be >= 0");
  auto objective = [&](const Vector& z) {
    return std::max(0.0, a.dot(z) - b) + 0.5 * lambda * z.squaredNorm();
  };
  if (mu < kMinStepsize) return identity_prox(x, objective(x));

  // Optimality: z = (x - mu s a) / (1 + lambda mu) with s in the hinge
  // subdifferential at a^T z - b; the active branch solves a^T z = b for s.
  const double shrink = 1.0 + lambda * mu;
  const double s = std::clamp((a.dot(x) - shrink * b) / (mu * a.squaredNorm()), 0.0, 1.0);
  Vector z = (x - (mu * s) * a) / shrink;
  const double fz = objective(z);
  return assemble(x, std::move(z), fz, mu);
}

Vector project_halfspace(const Vector& x, const Vector& c, double d) {
  check_direction(c, "halfspace normal c");
  check_point(x, c);
  const double violation = c.dot(x) - d;
  if (violation <= 0.0) return x;
  return x - (violation / c.squaredNorm()) * c;
}

ProxResult prox_scalar_composite(const Vector& x, const ScalarLoss& loss, const Vector& a, double b,
                                 double mu, double tol) {
  check_direction(a, "composite row a");
  check_point(x, a);
  check_stepsize(mu);
  if (!(tol > 0.0)) throw Error(ErrorCode::domain, "bisection tolerance must be positive");
  if (mu < kMinStepsize) return identity_prox(x, loss.value(a.dot(x) - b));

  const double a_sq = a.squaredNorm();
  const double s0 = a.dot(x);
  // z moves along a by (s - s0) / |a|, so s is needed to within tol |a|.
  const double s = scalar_prox(loss, s0, b, mu * a_sq, tol * std::sqrt(a_sq));
  Vector z = x + ((s - s0) / a_sq) * a;
  const double fz = loss.value(a.dot(z) - b);
  return assemble(x, std::move(z), std::isfinite(fz) ? fz : loss.value(s - b), mu);
}

ProxResult moreau(const Component& component, const Vector& x, double mu) {
  return std::visit(overloaded{
                        [&](const LeastSquares& c) { return prox_least_squares(x, c.a, c.b, mu); },
                        [&](const HingeReg& c) { return prox_hinge_reg(x, c.a, c.b, c.lambda, mu); },
                        [&](const HalfspaceIndicator& c) {
                          check_stepsize(mu);
                          return assemble(x, project_halfspace(x, c.c, c.d), 0.0, mu);
                        },
                        [&](const ScalarComposite& c) {
                          validate(component);
                          return prox_scalar_composite(x, *c.loss, c.a, c.b, mu);
                        },
                    },
                    component);
}

ProxResult numeric_prox(const Component& component, const Vector& x, double mu, double tol) {
  validate(component);
  return std::visit(
      overloaded{
          [&](const LeastSquares& c) {
            return prox_scalar_composite(x, *losses::half_square(), c.a, c.b, mu, tol);
          },
          [&](const HingeReg& c) {
            // The ridge term folds into the proximity term:
            // (l/2)|z|^2 + |z-x|^2/(2mu) = (1+l mu)/(2mu) |z - x/(1+l mu)|^2 + const.
            check_stepsize(mu);
            const double shrink = 1.0 + c.lambda * mu;
            ProxResult inner =
                prox_scalar_composite(x / shrink, *losses::hinge(), c.a, c.b, mu / shrink, tol);
            return assemble(x, std::move(inner.z), 0.0, mu);
          },
          [&](const HalfspaceIndicator& c) {
            return prox_scalar_composite(x, *losses::nonpositive_indicator(), c.c, c.d, mu, tol);
          },
          [&](const ScalarComposite& c) { return prox_scalar_composite(x, *c.loss, c.a, c.b, mu, tol); },
      },
      component);
}

namespace losses {

std::shared_ptr<const ScalarLoss> zero() {
  static const auto loss = std::make_shared<const ScalarLoss>(
      ScalarLoss{"zero", [](double) { return 0.0; }, [](double) { return 0.0; }});
  return loss;
}

std::shared_ptr<const ScalarLoss> half_square() {
  static const auto loss = std::make_shared<const ScalarLoss>(
      ScalarLoss{"half_square", [](double t) { return 0.5 * t * t; }, [](double t) { return t; }});
  return loss;
}

std::shared_ptr<const ScalarLoss> abs_power(double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::domain, "abs_power needs p >= 1 for convexity");
  return std::make_shared<const ScalarLoss>(ScalarLoss{
      "abs_power",
      [p](double t) { return std::pow(std::abs(t), p); },
      [p](double t) {
        if (t == 0.0) return p == 1.0 ? 1.0 : 0.0;
        return std::copysign(p * std::pow(std::abs(t), p - 1.0), t);
      },
  });
}

std::shared_ptr<const ScalarLoss> hinge() {
  static const auto loss = std::make_shared<const ScalarLoss>(ScalarLoss{
      "hinge",
      [](double t) { return std::max(0.0, t); },
      [](double t) { return t >= 0.0 ? 1.0 : 0.0; },
  });
  return loss;
}

std::shared_ptr<const ScalarLoss> nonpositive_indicator() {
  static const auto loss = std::make_shared<const ScalarLoss>(ScalarLoss{
      "nonpositive_indicator",
      [](double t) { return t <= 0.0 ? 0.0 : kInf; },
      [](double t) { return t < 0.0 ? 0.0 : kInf; },
  });
  return loss;
}

}  // namespace losses
}  // namespace spp
