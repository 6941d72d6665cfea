#pragma once
// Growth constants, the SPP recurrence bound and linear-regularity estimates.

#include "spp/problems.hpp"
#include "spp/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spp {

/// Constants of the weak linear regularity inequality
///   (sigma_F_mu / 2) dist^2_{X*}(x) <= F_mu(x) - F*_mu + mu beta
/// together with the linear regularity constant of the constraint family and
/// the gradient noise S*_F = E|g_F(x*; xi)|^2.
struct RegularityConstants {
  double sigma_F_mu = 0.0;
  double beta = 0.0;
  /// 1 when the problem has no constraints.
  double sigma_X = 1.0;
  double S_star_F = 0.0;
};

/// (x^alpha - 1) / alpha, and log x at alpha = 0. Throws domain for x <= 0.
double phi_alpha(double alpha, double x);

/// Upper bound on E dist^2(x^k) after k SPP steps:
///   prod_{i<k} (1 - mu_i s) d0 + (S* + 2 beta) sum_{i<k} prod_{i<j<k} (1 - mu_j s) mu_i^2
/// with s = sigma_F_mu. Throws stepsize_too_large when some 1 - mu_i s < 0.
double recurrence_bound(double dist0_sq, const RegularityConstants& constants, const StepSchedule& schedule,
                        std::int64_t k);

/// recurrence_bound for k = 0 .. iterations in one O(iterations) pass.
std::vector<double> recurrence_bound_curve(double dist0_sq, const RegularityConstants& constants,
                                           const StepSchedule& schedule, std::int64_t iterations);

/// Writes "k,bound" rows for the given k values (typically trace rows).
void write_bound_csv(std::ostream& out, const std::vector<std::int64_t>& k, const std::vector<double>& bound);

struct RateDescriptor {
  enum class Regime { polynomial, inverse_k, log_k_over_k, slow_polynomial };
  Regime regime = Regime::polynomial;
  /// Exponent e of the O(1/k^e) envelope (1 for the ln k / k regime).
  double exponent = 0.0;
  std::string label;
};

/// Asymptotic regime of E|x^k - x*|^2 under mu_k = mu0 / k^gamma.
/// Throws unsupported_schedule unless 0 < gamma <= 1.
RateDescriptor classify_rate(double mu0, double sigma_F_mu0, double gamma);

/// Quadratic growth of f plus linearly regular constraints.
/// Throws domain for nonpositive sigma_f, sigma_X, L_max or mu, sigma_X > 1,
/// or negative gradient terms.
RegularityConstants constants_quadratic_growth(double sigma_f, double sigma_X, double L_max, double mu,
                                               double E_grad_sq_at_opt, double grad_norm_sq_at_opt);

/// The stepsize at which the quadratic-growth sigma_F_mu peaks; the constant
/// is nonincreasing in mu only beyond it.
double quadratic_growth_sigma_peak(double sigma_f, double sigma_X, double L_max);

enum class RscCase { i, ii, iii };

std::string to_string(RscCase c);
RscCase rsc_case_from_string(const std::string& name);

struct RscInputs {
  RscCase rsc_case = RscCase::ii;
  /// Curvature matrices M_xi, one per smooth component.
  std::vector<Matrix> M;
  /// Sampling weights of the M_xi (empty = uniform).
  Vector weights;
  double mu = 1.0;
  /// E|g_F(x*; xi)|^2 (case ii).
  double E_gF_sq = 0.0;
  /// E|g_f(x*; xi)|^2 (cases i, iii).
  double E_gf_sq = 0.0;
  /// |E g_f(x*; xi)|^2 (cases i, iii).
  double mean_gf_sq = 0.0;
  /// Linear regularity of the constraints (cases i, iii).
  double sigma_X = 1.0;
  /// Joint regularity of the curvature level set and the constraints (case i).
  double sigma_fX = 0.0;
  /// Value reported as S*_F; defaults to E|g_F|^2 when negative.
  double S_star_F = -1.0;
};

/// hat M = E[M_xi / lambda_max(I + mu M_xi)].
Matrix rsc_smoothed_curvature(const std::vector<Matrix>& M, const Vector& weights, double mu);

/// Throws domain for non-PSD M_xi (eigenvalues below -1e-12), case_violation
/// for a singular E[M_xi] in cases ii and iii.
RegularityConstants constants_rsc(const RscInputs& inputs);

/// sigma_F_mu = sigma_X / mu, beta = 0.
RegularityConstants constants_cfp(double sigma_X, double mu);

/// E|g(x*; xi)|^2 under the problem weights, with the gradient of each
/// least-squares row and the zero subgradient for each halfspace (valid when
/// x* lies in the interior of every constraint). Other kinds throw unsupported.
double smooth_gradient_noise(const StochasticProblem& problem, const Vector& x_star);

struct LinearRegularityOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  /// Dykstra tolerance; samples with dist_X < 10 tol are discarded.
  double oracle_tol = 1e-10;
  /// Samples are uniform in the ball of this radius around the anchor.
  double radius = 10.0;
};

struct LinearRegularityEstimate {
  double sigma_hat = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_drawn = 0;
  /// The sample attaining the minimum ratio.
  Vector argmin;
};

/// Sampled lower envelope of E[dist^2_{X_xi}(x)] / dist^2_X(x), an estimate
/// of sigma_X (an upper bound on the true constant, not a certificate).
/// Uses the indicator components of `problem`.
LinearRegularityEstimate estimate_linear_regularity_serial(const StochasticProblem& problem,
                                                           const LinearRegularityOptions& options = {});
/// Same estimate with samples evaluated on an OpenMP team. Each sample owns
/// its stream, so the result is identical to the serial one.
LinearRegularityEstimate estimate_linear_regularity_parallel(const StochasticProblem& problem,
                                                             const LinearRegularityOptions& options = {},
                                                             int threads = 0);
LinearRegularityEstimate estimate_linear_regularity(const StochasticProblem& problem,
                                                    const LinearRegularityOptions& options = {}, int threads = 1);

}  // namespace spp
