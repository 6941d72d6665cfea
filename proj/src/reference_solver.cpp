#include "spp/problems.hpp"
#include "spp/projection.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spp {
namespace {

// min 0.5 x^T Q x - q^T x  s.t.  C x <= d, rows of C normalized to unit length.
struct QuadraticProgram {
  Matrix Q;
  Vector q;
  Matrix C;
  Vector d;
  Vector row_norms;
};

struct Candidate {
  Vector x;
  Vector y;  // multipliers of the normalized rows
  double kkt = 0.0;
  double feasibility = 0.0;
};

QuadraticProgram assemble(const StochasticProblem& problem) {
  const Eigen::Index n = problem.dimension();
  QuadraticProgram qp;
  qp.Q = Matrix::Zero(n, n);
  qp.q = Vector::Zero(n);
  std::vector<const HalfspaceIndicator*> halfspaces;
  const auto& w = problem.weights();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& component = problem.component(i);
    const double wi = w[static_cast<Eigen::Index>(i)];
    if (const auto* ls = std::get_if<LeastSquares>(&component)) {
      qp.Q.noalias() += wi * ls->a * ls->a.transpose();
      qp.q.noalias() += (wi * ls->b) * ls->a;
    } else if (const auto* h = std::get_if<HalfspaceIndicator>(&component)) {
      halfspaces.push_back(h);
    } else {
      throw Error(ErrorCode::unsupported,
                  "reference_solve handles least-squares and halfspace components only, found " +
                      kind_name(component));
    }
  }
  const auto p = static_cast<Eigen::Index>(halfspaces.size());
  qp.C.resize(p, n);
  qp.d.resize(p);
  qp.row_norms.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& h = *halfspaces[static_cast<std::size_t>(i)];
    const double norm = h.c.norm();
    qp.row_norms[i] = norm;
    qp.C.row(i) = h.c.transpose() / norm;
    qp.d[i] = h.d / norm;
  }
  return qp;
}

void score(const QuadraticProgram& qp, Candidate& cand) {
  const Vector lambda = cand.y.cwiseMax(0.0);
  const Vector slack = qp.C * cand.x - qp.d;
  const double stationarity = (qp.Q * cand.x - qp.q + qp.C.transpose() * lambda).lpNorm<Eigen::Infinity>();
  const double complementarity = slack.size() ? lambda.cwiseProduct(slack).lpNorm<Eigen::Infinity>() : 0.0;
  cand.kkt = std::max(stationarity, complementarity);
  // Reported in the units of the original rows.
  cand.feasibility = slack.size() ? slack.cwiseProduct(qp.row_norms).cwiseMax(0.0).maxCoeff() : 0.0;
  cand.y = lambda;
}

Candidate polish(const QuadraticProgram& qp, const Candidate& start, double rho) {
  const Eigen::Index n = qp.Q.rows();
  const Eigen::Index p = qp.C.rows();
  const double activity_tol = 1e-9;
  std::vector<bool> active(static_cast<std::size_t>(p));
  const Vector slack = qp.d - qp.C * start.x;
  for (Eigen::Index i = 0; i < p; ++i) active[static_cast<std::size_t>(i)] = slack[i] < start.y[i] / rho;

  Candidate out = start;
  for (int round = 0; round < 50; ++round) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (active[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.Q;
    rhs.head(n) = qp.q;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt.block(n + j, 0, 1, n) = qp.C.row(idx[static_cast<std::size_t>(j)]);
      kkt.block(0, n + j, n, 1) = qp.C.row(idx[static_cast<std::size_t>(j)]).transpose();
      rhs[n + j] = qp.d[idx[static_cast<std::size_t>(j)]];
    }
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
    Vector sol = cod.solve(rhs);
    sol += cod.solve(rhs - kkt * sol);

    out.x = sol.head(n);
    out.y = Vector::Zero(p);
    bool changed = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto i = idx[static_cast<std::size_t>(j)];
      out.y[i] = sol[n + j];
      if (sol[n + j] < -activity_tol) {
        active[static_cast<std::size_t>(i)] = false;
        changed = true;
      }
    }
    const Vector violation = qp.C * out.x - qp.d;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!active[static_cast<std::size_t>(i)] && violation[i] > activity_tol) {
        active[static_cast<std::size_t>(i)] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  score(qp, out);
  return out;
}

bool certify_unique(const QuadraticProgram& qp, const Vector& lambda) {
  const Eigen::Index n = qp.Q.rows();
  const double scale = std::max(1.0, qp.Q.norm());
  const double strong = 1e-8 * (1.0 + (lambda.size() ? lambda.maxCoeff() : 0.0));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > strong) rows.push_back(i);
  }
  Matrix basis;
  if (rows.empty()) {
    basis = Matrix::Identity(n, n);
  } else {
    Matrix active(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t j = 0; j < rows.size(); ++j) active.row(static_cast<Eigen::Index>(j)) = qp.C.row(rows[j]);
    const Eigen::JacobiSVD<Matrix> svd(active, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) {
      if (sv[j] > 1e-10 * std::max(1.0, sv[0])) ++rank;
    }
    if (rank == n) return true;
    basis = svd.matrixV().rightCols(n - rank);
  }
  const Matrix reduced = basis.transpose() * qp.Q * basis;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 1e-10 * scale;
}

ReferenceSolution finish(const StochasticProblem& problem, const QuadraticProgram& qp, const Candidate& c,
                         int iterations) {
  ReferenceSolution sol;
  sol.x_ref = c.x;
  sol.F_star = evaluate_F(problem, c.x);
  sol.kkt_residual = c.kkt;
  sol.feasibility_violation = c.feasibility;
  sol.multipliers = c.y.cwiseQuotient(qp.row_norms);
  sol.unique = certify_unique(qp, c.y);
  sol.iterations = iterations;
  return sol;
}

ReferenceSolution solve_unconstrained(const StochasticProblem& problem, const QuadraticProgram& qp, double tol) {
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(qp.Q);
  Vector x = cod.solve(qp.q);
  x += cod.solve(qp.q - qp.Q * x);
  Candidate c{x, Vector::Zero(0)};
  score(qp, c);
  if (c.kkt > tol) {
    throw Error(ErrorCode::max_iterations, "normal equations residual " + std::to_string(c.kkt) + " above tolerance");
  }
  auto sol = finish(problem, qp, c, 1);
  sol.unique = cod.rank() == qp.Q.rows();
  return sol;
}

ReferenceSolution solve_feasibility(const StochasticProblem& problem, const QuadraticProgram& qp, double tol,
                                    int max_iterations) {
  const auto halfspaces = problem.halfspaces();
  const auto proj = dykstra_project(halfspaces, Vector::Zero(problem.dimension()), 1e-2 * tol, max_iterations);
  Candidate c{proj.point, Vector::Zero(qp.C.rows())};
  score(qp, c);
  if (c.feasibility > tol) {
    throw Error(ErrorCode::infeasible, "feasibility residual stalled at " + std::to_string(c.feasibility));
  }
  auto sol = finish(problem, qp, c, proj.cycles);
  sol.F_star = 0.0;
  sol.kkt_residual = 0.0;
  sol.unique = false;
  return sol;
}

}  // namespace

ReferenceSolution reference_solve(const StochasticProblem& problem, double tol, int max_iterations) {
  if (!(tol > 0.0)) throw Error(ErrorCode::domain, "reference tolerance must be positive");
  const QuadraticProgram qp = assemble(problem);
  if (qp.C.rows() == 0) return solve_unconstrained(problem, qp, tol);
  if (!problem.has_smooth()) return solve_feasibility(problem, qp, tol, max_iterations);

  // OSQP-style ADMM on x and z = C x with z <= d.
  const Eigen::Index n = qp.Q.rows();
  const double sigma = 1e-6;
  const double alpha = 1.6;
  const double eps = 0.1 * tol;
  double rho = 0.1;
  const Matrix CtC = qp.C.transpose() * qp.C;
  auto factor = [&] {
    return Eigen::LLT<Matrix>(qp.Q + sigma * Matrix::Identity(n, n) + rho * CtC);
  };
  Eigen::LLT<Matrix> llt = factor();

  Vector x = Vector::Zero(n);
  Vector z = (qp.C * x).cwiseMin(qp.d);
  Vector y = Vector::Zero(qp.C.rows());
  double primal = 0.0;
  double dual = 0.0;
  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= max_iterations; ++iter) {
    const Vector x_tilde = llt.solve(sigma * x + qp.q + qp.C.transpose() * (rho * z - y));
    const Vector z_tilde = qp.C * x_tilde;
    x = alpha * x_tilde + (1.0 - alpha) * x;
    const Vector z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
    const Vector z_next = (z_relaxed + y / rho).cwiseMin(qp.d);
    y += rho * (z_relaxed - z_next);
    z = z_next;

    if (iter % 10 != 0) continue;
    const Vector Cx = qp.C * x;
    const Vector Qx = qp.Q * x;
    const Vector Cty = qp.C.transpose() * y;
    primal = (Cx - z).lpNorm<Eigen::Infinity>();
    dual = (Qx - qp.q + Cty).lpNorm<Eigen::Infinity>();
    if (primal <= eps && dual <= eps) {
      converged = true;
      break;
    }
    if (iter % 50 == 0) {
      const double p_scale = std::max({Cx.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-30});
      const double d_scale = std::max(
          {Qx.lpNorm<Eigen::Infinity>(), Cty.lpNorm<Eigen::Infinity>(), qp.q.lpNorm<Eigen::Infinity>(), 1e-30});
      const double ratio = std::sqrt((primal / p_scale) / std::max(dual / d_scale, 1e-300));
      if (ratio > 5.0 || ratio < 0.2) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        llt = factor();
      }
    }
  }
  iter = std::min(iter, max_iterations);

  Candidate admm{x, y};
  score(qp, admm);
  const Candidate polished = polish(qp, Candidate{x, y}, rho);
  auto merit = [](const Candidate& c) { return std::max(c.kkt, c.feasibility); };
  const Candidate& best = merit(polished) <= merit(admm) ? polished : admm;

  if (merit(best) > tol) {
    if (!converged && primal > tol) {
      throw Error(ErrorCode::infeasible, "primal residual stalled at " + std::to_string(primal));
    }
    throw Error(ErrorCode::max_iterations, "KKT residual " + std::to_string(merit(best)) + " above tolerance after " +
                                               std::to_string(iter) + " iterations");
  }
  return finish(problem, qp, best, iter);
}

}  // namespace spp
