#include "spp/diagnostics.hpp"

#include "spp/projection.hpp"

#include <cmath>

namespace spp {
namespace {

struct LogFit {
  double slope = 0.0;
  std::size_t points = 0;
};

LogFit least_squares_slope(const std::vector<double>& u, const std::vector<double>& v) {
  const auto count = static_cast<double>(u.size());
  double mu = 0.0;
  double mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= count;
  mv /= count;
  double suv = 0.0;
  double suu = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suv += (u[i] - mu) * (v[i] - mv);
    suu += (u[i] - mu) * (u[i] - mu);
  }
  if (suu == 0.0) throw Error(ErrorCode::undefined_slope, "regressor has zero spread");
  return {suv / suu, u.size()};
}

}  // namespace

OptimalSetModel OptimalSetModel::point(Vector x_ref, bool certified_unique, std::string note) {
  return OptimalSetModel(Point{std::move(x_ref)}, certified_unique, std::move(note));
}

OptimalSetModel OptimalSetModel::affine(Matrix A, Vector y, std::string note) {
  if (A.rows() != y.size() || A.rows() == 0) throw Error(ErrorCode::invalid_spec, "affine set needs matching A, y");
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  const Vector z = cod.solve(y);
  const double residual = (A * z - y).norm();
  if (residual > 1e-8 * (1.0 + y.norm())) {
    throw Error(ErrorCode::invalid_spec, "affine optimal set is empty (inconsistent rows)");
  }
  return OptimalSetModel(AffineSet{std::move(A), std::move(y)}, true, std::move(note));
}

OptimalSetModel OptimalSetModel::intersection(std::vector<HalfspaceIndicator> halfspaces, Vector anchor,
                                              std::string note) {
  if (halfspaces.empty()) throw Error(ErrorCode::invalid_spec, "intersection model needs halfspaces");
  for (const auto& h : halfspaces) {
    validate(h);
    if (h.c.dot(anchor) > h.d + 1e-12 * (1.0 + std::abs(h.d))) {
      throw Error(ErrorCode::invalid_spec, "anchor point is not feasible for every halfspace");
    }
  }
  return OptimalSetModel(FeasibleIntersection{std::move(halfspaces), std::move(anchor)}, true, std::move(note));
}

OptimalSetModel OptimalSetModel::for_problem(const StochasticProblem& problem, const ReferenceSolution* reference) {
  if (problem.shared_minimizer() && !problem.has_indicators()) {
    Matrix A(static_cast<Eigen::Index>(problem.size()), problem.dimension());
    Vector y(A.rows());
    for (std::size_t i = 0; i < problem.size(); ++i) {
      const auto* ls = std::get_if<LeastSquares>(&problem.component(i));
      if (ls == nullptr) throw Error(ErrorCode::unsupported, "shared-minimizer model expects least-squares rows");
      A.row(static_cast<Eigen::Index>(i)) = ls->a.transpose();
      y[static_cast<Eigen::Index>(i)] = ls->b;
    }
    return affine(std::move(A), std::move(y), "solution set of the consistent linear system");
  }
  if (!problem.has_smooth()) {
    const auto halfspaces = problem.halfspaces();
    Vector anchor;
    if (problem.interior_point()) {
      anchor = *problem.interior_point();
    } else if (reference != nullptr) {
      anchor = reference->x_ref;
    } else {
      anchor = dykstra_project(halfspaces, Vector::Zero(problem.dimension())).point;
    }
    return intersection(halfspaces, std::move(anchor), "intersection of the halfspaces");
  }
  if (reference == nullptr) throw Error(ErrorCode::unsupported, "no reference solution; optimal set unknown");
  return point(reference->x_ref, reference->unique,
               reference->unique ? "reference solution certified unique" : "reference solution not certified unique");
}

double dist_to_optimal(const OptimalSetModel& model, const Vector& x, double tol) {
  if (!model.certified()) {
    throw Error(ErrorCode::unsupported, "optimal-set model is not certified: " + model.note());
  }
  if (const auto* p = std::get_if<OptimalSetModel::Point>(&model.kind())) return (x - p->x_ref).norm();
  if (const auto* a = std::get_if<OptimalSetModel::AffineSet>(&model.kind())) {
    // Minimal-norm correction d with A (x - d) = y.
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a->A);
    const Vector residual = a->A * x - a->y;
    Vector step = cod.solve(residual);
    step += cod.solve(residual - a->A * step);
    return step.norm();
  }
  const auto& s = std::get<OptimalSetModel::FeasibleIntersection>(model.kind());
  const auto proj = dykstra_project(s.halfspaces, x, tol);
  if (!proj.converged) throw Error(ErrorCode::max_iterations, "Dykstra projection did not converge");
  return (x - proj.point).norm();
}

double envelope_value(const StochasticProblem& problem, const Vector& x, double mu) {
  double total = 0.0;
  const auto& w = problem.weights();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    total += w[static_cast<Eigen::Index>(i)] * moreau(problem.component(i), x, mu).envelope_value;
  }
  return total;
}

double envelope_residual(const StochasticProblem& problem, const Vector& x, double mu, double F_star) {
  return std::abs(envelope_value(problem, x, mu) - F_star);
}

double fit_rate_slope(std::span<const double> k, std::span<const double> metric, double tail_fraction) {
  if (k.size() != metric.size()) throw Error(ErrorCode::undefined_slope, "k and metric lengths differ");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorCode::undefined_slope, "tail fraction must lie in (0, 1]");
  }
  const auto tail = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(k.size())));
  if (tail < 50) throw Error(ErrorCode::undefined_slope, "need at least 50 tail points, have " + std::to_string(tail));
  std::vector<double> u;
  std::vector<double> v;
  u.reserve(tail);
  v.reserve(tail);
  for (std::size_t i = k.size() - tail; i < k.size(); ++i) {
    if (!(k[i] >= 1.0)) throw Error(ErrorCode::undefined_slope, "tail contains k < 1");
    if (!(metric[i] > 0.0) || !std::isfinite(metric[i])) {
      throw Error(ErrorCode::undefined_slope, "tail contains a nonpositive or non-finite metric value");
    }
    u.push_back(std::log(k[i]));
    v.push_back(std::log(metric[i]));
  }
  return least_squares_slope(u, v).slope;
}

double fit_geometric_rate(std::span<const double> k, std::span<const double> metric) {
  if (k.size() != metric.size()) throw Error(ErrorCode::undefined_slope, "k and metric lengths differ");
  std::vector<double> u;
  std::vector<double> v;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (metric[i] > 0.0 && std::isfinite(metric[i])) {
      u.push_back(k[i]);
      v.push_back(std::log(metric[i]));
    }
  }
  if (u.size() < 2) throw Error(ErrorCode::undefined_slope, "need at least two positive samples");
  return std::exp(least_squares_slope(u, v).slope);
}

}  // namespace spp
