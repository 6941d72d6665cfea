#include "spp/regularity.hpp"

#include "spp/projection.hpp"
#include "spp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spp {
namespace {

constexpr double kEigenClamp = 1e-12;

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::domain, message);
}

void require_sigma_X(double sigma_X) {
  require(sigma_X > 0.0 && sigma_X <= 1.0 && std::isfinite(sigma_X), "sigma_X must lie in (0, 1]");
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

Spectrum psd_spectrum(const Matrix& M, std::size_t index) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw Error(ErrorCode::domain, "M[" + std::to_string(index) + "] must be a nonempty square matrix");
  }
  if (!M.allFinite()) throw Error(ErrorCode::domain, "M[" + std::to_string(index) + "] has non-finite entries");
  const double scale = std::max(1.0, M.lpNorm<Eigen::Infinity>());
  if ((M - M.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * scale) {
    throw Error(ErrorCode::domain, "M[" + std::to_string(index) + "] is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  Spectrum s{eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
  if (s.min < -kEigenClamp) {
    throw Error(ErrorCode::domain, "M[" + std::to_string(index) + "] is not positive semidefinite (eigenvalue " +
                                       std::to_string(s.min) + ")");
  }
  s.min = std::max(s.min, 0.0);
  s.max = std::max(s.max, 0.0);
  return s;
}

Vector resolve_weights(const Vector& weights, std::size_t count) {
  if (weights.size() == 0) return Vector::Constant(static_cast<Eigen::Index>(count), 1.0 / static_cast<double>(count));
  require(static_cast<std::size_t>(weights.size()) == count, "weights must match the number of matrices");
  require((weights.array() >= 0.0).all() && std::abs(weights.sum() - 1.0) <= 1e-12,
          "weights must be a probability vector");
  return weights;
}

}  // namespace

double phi_alpha(double alpha, double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::domain, "phi_alpha needs x > 0");
  if (alpha == 0.0) return std::log(x);
  // expm1 keeps the small-alpha branch accurate; pow is exact for the
  // integer exponents.
  if (std::abs(alpha) < 1e-3) return std::expm1(alpha * std::log(x)) / alpha;
  return (std::pow(x, alpha) - 1.0) / alpha;
}

std::vector<double> recurrence_bound_curve(double dist0_sq, const RegularityConstants& constants,
                                           const StepSchedule& schedule, std::int64_t iterations) {
  require(dist0_sq >= 0.0, "dist0^2 must be nonnegative");
  require(constants.sigma_F_mu >= 0.0 && constants.beta >= 0.0 && constants.S_star_F >= 0.0,
          "constants must be nonnegative");
  require(iterations >= 0, "k must be >= 0");
  schedule.validate();
  const double s = constants.sigma_F_mu;
  const double noise = constants.S_star_F + 2.0 * constants.beta;
  std::vector<double> bound(static_cast<std::size_t>(iterations) + 1);
  bound[0] = dist0_sq;
  for (std::int64_t i = 0; i < iterations; ++i) {
    const double mu = step_size(schedule, i);
    const double theta = 1.0 - mu * s;
    if (theta < 0.0) {
      throw Error(ErrorCode::stepsize_too_large, "1 - mu_" + std::to_string(i) + " sigma = " + std::to_string(theta) +
                                                     " < 0 (mu=" + format_double(mu) +
                                                     ", sigma=" + format_double(s) + ")");
    }
    const auto u = static_cast<std::size_t>(i);
    bound[u + 1] = theta * bound[u] + noise * mu * mu;
  }
  return bound;
}

double recurrence_bound(double dist0_sq, const RegularityConstants& constants, const StepSchedule& schedule,
                        std::int64_t k) {
  return recurrence_bound_curve(dist0_sq, constants, schedule, k).back();
}

void write_bound_csv(std::ostream& out, const std::vector<std::int64_t>& k, const std::vector<double>& bound) {
  if (k.size() != bound.size()) throw Error(ErrorCode::invalid_spec, "k and bound columns differ in length");
  out << "k,bound\n";
  for (std::size_t i = 0; i < k.size(); ++i) out << k[i] << ',' << format_double(bound[i]) << '\n';
}

RateDescriptor classify_rate(double mu0, double sigma_F_mu0, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::unsupported_schedule, "rate regimes are defined for 0 < gamma <= 1, got " +
                                                     format_double(gamma));
  }
  require(mu0 > 0.0 && sigma_F_mu0 >= 0.0, "classify_rate needs mu0 > 0 and sigma >= 0");
  RateDescriptor r;
  if (gamma < 1.0) {
    r.regime = RateDescriptor::Regime::polynomial;
    r.exponent = gamma;
    r.label = "O(1/k^" + format_double(gamma) + ")";
    return r;
  }
  const double c = mu0 * sigma_F_mu0;
  const double threshold = std::numbers::e - 1.0;
  if (std::abs(c - threshold) <= 1e-12 * threshold) {
    r.regime = RateDescriptor::Regime::log_k_over_k;
    r.exponent = 1.0;
    r.label = "O(ln k / k)";
  } else if (c > threshold) {
    r.regime = RateDescriptor::Regime::inverse_k;
    r.exponent = 1.0;
    r.label = "O(1/k)";
  } else {
    r.regime = RateDescriptor::Regime::slow_polynomial;
    r.exponent = 2.0 * std::log1p(c);
    r.label = "O(1/k^" + format_double(r.exponent) + ")";
  }
  return r;
}

RegularityConstants constants_quadratic_growth(double sigma_f, double sigma_X, double L_max, double mu,
                                               double E_grad_sq_at_opt, double grad_norm_sq_at_opt) {
  require(sigma_f > 0.0 && std::isfinite(sigma_f), "sigma_f must be positive");
  require_sigma_X(sigma_X);
  require(L_max > 0.0 && std::isfinite(L_max), "L_max must be positive");
  require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
  require(E_grad_sq_at_opt >= 0.0 && grad_norm_sq_at_opt >= 0.0, "gradient terms must be nonnegative");
  RegularityConstants out;
  const double growth = 1.0 + mu * L_max;
  out.sigma_F_mu = sigma_f * mu * sigma_X / (sigma_f * mu * mu + 8.0 * (1.0 + 2.0 * sigma_X) * growth * growth);
  const double inner = 1.0 + sigma_f / (4.0 * L_max * L_max);
  out.beta = E_grad_sq_at_opt +
             (1.0 / sigma_X + inner * inner / (4.0 * sigma_X * sigma_X * sigma_X)) * grad_norm_sq_at_opt;
  out.sigma_X = sigma_X;
  out.S_star_F = E_grad_sq_at_opt;
  return out;
}

double quadratic_growth_sigma_peak(double sigma_f, double sigma_X, double L_max) {
  require(sigma_f > 0.0 && L_max > 0.0, "sigma_f and L_max must be positive");
  require_sigma_X(sigma_X);
  const double b = 8.0 * (1.0 + 2.0 * sigma_X);
  return std::sqrt(b / (sigma_f + b * L_max * L_max));
}

std::string to_string(RscCase c) {
  switch (c) {
    case RscCase::i: return "i";
    case RscCase::ii: return "ii";
    case RscCase::iii: return "iii";
  }
  return "?";
}

RscCase rsc_case_from_string(const std::string& name) {
  if (name == "i") return RscCase::i;
  if (name == "ii") return RscCase::ii;
  if (name == "iii") return RscCase::iii;
  throw Error(ErrorCode::config, "unknown RSC case '" + name + "' (expected i, ii or iii)");
}

Matrix rsc_smoothed_curvature(const std::vector<Matrix>& M, const Vector& weights, double mu) {
  require(!M.empty(), "RSC constants need at least one curvature matrix");
  require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
  const Vector w = resolve_weights(weights, M.size());
  const Eigen::Index n = M.front().rows();
  Matrix hat = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < M.size(); ++i) {
    require(M[i].rows() == n, "curvature matrices differ in size");
    const Spectrum s = psd_spectrum(M[i], i);
    hat += (w[static_cast<Eigen::Index>(i)] / (1.0 + mu * s.max)) * M[i];
  }
  return hat;
}

RegularityConstants constants_rsc(const RscInputs& in) {
  require(!in.M.empty(), "RSC constants need at least one curvature matrix");
  require(in.mu > 0.0 && std::isfinite(in.mu), "mu must be positive");
  require(in.E_gF_sq >= 0.0 && in.E_gf_sq >= 0.0 && in.mean_gf_sq >= 0.0, "gradient terms must be nonnegative");
  const Vector w = resolve_weights(in.weights, in.M.size());
  const Eigen::Index n = in.M.front().rows();

  Matrix hat = Matrix::Zero(n, n);
  Matrix mean = Matrix::Zero(n, n);
  double lambda_max = 0.0;
  for (std::size_t i = 0; i < in.M.size(); ++i) {
    require(in.M[i].rows() == n, "curvature matrices differ in size");
    const Spectrum s = psd_spectrum(in.M[i], i);
    const double wi = w[static_cast<Eigen::Index>(i)];
    hat += (wi / (1.0 + in.mu * s.max)) * in.M[i];
    mean += wi * in.M[i];
    lambda_max = std::max(lambda_max, s.max);
  }

  RegularityConstants out;
  out.S_star_F = in.S_star_F >= 0.0 ? in.S_star_F : in.E_gF_sq;
  if (in.rsc_case == RscCase::i) {
    require_sigma_X(in.sigma_X);
    require(in.sigma_fX > 0.0 && in.sigma_fX <= 1.0, "sigma_fX must lie in (0, 1]");
    out.sigma_F_mu = std::min(1.0, lambda_max) / (2.0 * (1.0 + in.mu * lambda_max)) * in.sigma_fX;
    out.beta = 0.5 * in.mu * (1.0 + 2.0 / in.sigma_X) * in.E_gf_sq + in.mu / (2.0 * in.sigma_X) * in.mean_gf_sq;
    out.sigma_X = in.sigma_X;
    return out;
  }

  const Eigen::SelfAdjointEigenSolver<Matrix> mean_eig(mean, Eigen::EigenvaluesOnly);
  const double mean_min = mean_eig.eigenvalues().minCoeff();
  if (mean_min <= kEigenClamp * std::max(1.0, mean_eig.eigenvalues().maxCoeff())) {
    throw Error(ErrorCode::case_violation, "case " + to_string(in.rsc_case) +
                                               " needs E[M_xi] positive definite, smallest eigenvalue " +
                                               std::to_string(mean_min));
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> hat_eig(hat, Eigen::EigenvaluesOnly);
  out.sigma_F_mu = std::max(0.0, hat_eig.eigenvalues().minCoeff());
  if (in.rsc_case == RscCase::ii) {
    out.beta = 0.5 * in.E_gF_sq;
    out.sigma_X = 1.0;
  } else {
    require_sigma_X(in.sigma_X);
    out.beta = 0.5 * in.E_gf_sq + in.mean_gf_sq / (2.0 * in.sigma_X);
    out.sigma_X = in.sigma_X;
  }
  return out;
}

RegularityConstants constants_cfp(double sigma_X, double mu) {
  require_sigma_X(sigma_X);
  require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
  RegularityConstants out;
  out.sigma_F_mu = sigma_X / mu;
  out.beta = 0.0;
  out.sigma_X = sigma_X;
  out.S_star_F = 0.0;
  return out;
}

double smooth_gradient_noise(const StochasticProblem& problem, const Vector& x_star) {
  if (x_star.size() != problem.dimension()) throw Error(ErrorCode::invalid_spec, "x* has the wrong dimension");
  double total = 0.0;
  const auto& w = problem.weights();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& c = problem.component(i);
    if (const auto* ls = std::get_if<LeastSquares>(&c)) {
      const double r = ls->a.dot(x_star) - ls->b;
      total += w[static_cast<Eigen::Index>(i)] * r * r * ls->a.squaredNorm();
    } else if (!is_indicator(c)) {
      throw Error(ErrorCode::unsupported, "gradient noise is implemented for least-squares rows, found " +
                                              kind_name(c));
    }
  }
  return total;
}

namespace {

struct Sampler {
  const std::vector<HalfspaceIndicator>& halfspaces;
  const StochasticProblem& problem;
  const Vector& anchor;
  const LinearRegularityOptions& options;

  // NaN marks a near-feasible (excluded) sample.
  double ratio(std::size_t index, Vector& point) const {
    auto engine = rng::make_engine(options.seed, rng::Stream::estimator, index);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    const Eigen::Index n = anchor.size();
    Vector direction(n);
    for (Eigen::Index j = 0; j < n; ++j) direction[j] = normal(engine);
    const double norm = direction.norm();
    const double r = options.radius * std::pow(uniform(engine), 1.0 / static_cast<double>(n));
    point = anchor + (norm > 0.0 ? r / norm : 0.0) * direction;
    const auto proj = dykstra_project(halfspaces, point, options.oracle_tol);
    if (!proj.converged) throw Error(ErrorCode::max_iterations, "Dykstra oracle did not converge");
    const double dist = (point - proj.point).norm();
    if (dist < 10.0 * options.oracle_tol) return std::numeric_limits<double>::quiet_NaN();
    return evaluate_feasibility(problem, point) / (dist * dist);
  }
};

Vector estimator_anchor(const StochasticProblem& problem, const std::vector<HalfspaceIndicator>& halfspaces,
                        double tol) {
  if (problem.interior_point()) return *problem.interior_point();
  const auto proj = dykstra_project(halfspaces, Vector::Zero(problem.dimension()), tol);
  if (!proj.converged) throw Error(ErrorCode::infeasible, "could not find a feasible anchor");
  return proj.point;
}

void check_options(const StochasticProblem& problem, const LinearRegularityOptions& options) {
  if (!problem.has_indicators()) throw Error(ErrorCode::invalid_spec, "problem has no constraint components");
  if (options.samples < 1) throw Error(ErrorCode::invalid_spec, "sample_count must be >= 1");
  if (!(options.oracle_tol > 0.0)) throw Error(ErrorCode::domain, "oracle tolerance must be positive");
  if (!(options.radius > 0.0)) throw Error(ErrorCode::domain, "sampling radius must be positive");
}

LinearRegularityEstimate reduce(const std::vector<double>& ratios, const std::vector<Vector>& points) {
  LinearRegularityEstimate est;
  est.samples_drawn = ratios.size();
  est.sigma_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (std::isnan(ratios[i])) continue;
    ++est.samples_used;
    if (ratios[i] < est.sigma_hat) {
      est.sigma_hat = ratios[i];
      est.argmin = points[i];
    }
  }
  if (est.samples_used == 0) {
    throw Error(ErrorCode::insufficient_samples,
                "all " + std::to_string(ratios.size()) + " samples were within 10*tol of the feasible set");
  }
  // The ratio cannot exceed 1; anything above is oracle roundoff.
  est.sigma_hat = std::min(est.sigma_hat, 1.0);
  return est;
}

}  // namespace

LinearRegularityEstimate estimate_linear_regularity_serial(const StochasticProblem& problem,
                                                           const LinearRegularityOptions& options) {
  check_options(problem, options);
  const auto halfspaces = problem.halfspaces();
  const Vector anchor = estimator_anchor(problem, halfspaces, options.oracle_tol);
  const Sampler sampler{halfspaces, problem, anchor, options};
  std::vector<double> ratios(options.samples);
  std::vector<Vector> points(options.samples);
  for (std::size_t i = 0; i < options.samples; ++i) ratios[i] = sampler.ratio(i, points[i]);
  return reduce(ratios, points);
}

LinearRegularityEstimate estimate_linear_regularity_parallel(const StochasticProblem& problem,
                                                             const LinearRegularityOptions& options, int threads) {
  check_options(problem, options);
  const auto halfspaces = problem.halfspaces();
  const Vector anchor = estimator_anchor(problem, halfspaces, options.oracle_tol);
  const Sampler sampler{halfspaces, problem, anchor, options};
  std::vector<double> ratios(options.samples);
  std::vector<Vector> points(options.samples);
  std::exception_ptr failure;
  const auto count = static_cast<std::int64_t>(options.samples);
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(team)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      const auto u = static_cast<std::size_t>(i);
      ratios[u] = sampler.ratio(u, points[u]);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(spp_estimator_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  (void)threads;
  if (failure) std::rethrow_exception(failure);
  return reduce(ratios, points);
}

LinearRegularityEstimate estimate_linear_regularity(const StochasticProblem& problem,
                                                    const LinearRegularityOptions& options, int threads) {
  if (threads == 1) return estimate_linear_regularity_serial(problem, options);
  return estimate_linear_regularity_parallel(problem, options, threads);
}

}  // namespace spp
