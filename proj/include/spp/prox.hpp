#pragma once

// Proximal operators and Moreau envelopes of single finite-sum components.
//
// For a component F(.;xi) and smoothing parameter mu > 0
//
//   z_mu(x)  = argmin_z F(z) + |z - x|^2 / (2 mu)
//   F_mu(x)  = F(z_mu(x)) + |z_mu(x) - x|^2 / (2 mu)
//   grad F_mu(x) = (x - z_mu(x)) / mu
//
// Every component kind here is a function of one linear form a^T z (plus an
// optional ridge term), so the n-dimensional prox always reduces to a 1-D
// strongly convex problem. The closed forms and the bisection route in
// numeric_prox() are independent ways of solving that problem.

#include "spp/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>

namespace spp {

inline constexpr double kDefaultProxTol = 1e-10;
/// Below this stepsize the prox is returned as the identity.
inline constexpr double kMinStepsize = 1e-14;

/// 0.5 * (a^T x - b)^2
struct LeastSquares {
  Vector a;
  double b = 0.0;
};

/// max{0, a^T x - b} + (lambda / 2) |x|^2
struct HingeReg {
  Vector a;
  double b = 0.0;
  double lambda = 0.0;
};

/// Indicator of {x : c^T x <= d}.
struct HalfspaceIndicator {
  Vector c;
  double d = 0.0;
};

/// A convex loss on the real line. `derivative` returns the right derivative
/// and may return +/-infinity outside the effective domain (indicator-type
/// losses); `value` may return +infinity there.
struct ScalarLoss {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// loss(a^T x - b)
struct ScalarComposite {
  std::shared_ptr<const ScalarLoss> loss;
  Vector a;
  double b = 0.0;
};

using Component = std::variant<LeastSquares, HingeReg, HalfspaceIndicator, ScalarComposite>;

struct ProxResult {
  Vector z;
  double envelope_value = 0.0;
  Vector envelope_grad;
};

// Component helpers.

/// Throws invalid_component for zero direction vectors, non-finite data,
/// negative ridge weights or a missing loss handle.
void validate(const Component& component);
Eigen::Index dimension(const Component& component);
bool is_indicator(const Component& component);
std::string kind_name(const Component& component);

/// F(x; xi); +infinity outside the domain of indicator components.
double value(const Component& component, const Vector& x);

/// Closed-form proxes.
ProxResult prox_least_squares(const Vector& x, const Vector& a, double b, double mu);
ProxResult prox_hinge_reg(const Vector& x, const Vector& a, double b, double lambda, double mu);
Vector project_halfspace(const Vector& x, const Vector& c, double d);

/// Prox of loss(a^T z - b) found by bracketing bisection on the 1-D
/// subgradient; the minimizer z is located to within `tol`.
ProxResult prox_scalar_composite(const Vector& x, const ScalarLoss& loss, const Vector& a, double b,
                                 double mu, double tol = kDefaultProxTol);

/// Dispatches to the kind-specific closed form (bisection for ScalarComposite).
ProxResult moreau(const Component& component, const Vector& x, double mu);

/// Generic numeric prox: rewrites every kind as a scalar composite and runs
/// the bisection solver. Used as the cross-check for the closed forms.
ProxResult numeric_prox(const Component& component, const Vector& x, double mu,
                        double tol = kDefaultProxTol);

namespace losses {

std::shared_ptr<const ScalarLoss> zero();
/// 0.5 t^2
std::shared_ptr<const ScalarLoss> half_square();
/// |t|^p for p >= 1
std::shared_ptr<const ScalarLoss> abs_power(double p);
/// max{0, t}
std::shared_ptr<const ScalarLoss> hinge();
/// indicator of t <= 0
std::shared_ptr<const ScalarLoss> nonpositive_indicator();

}  // namespace losses

}  // namespace spp
