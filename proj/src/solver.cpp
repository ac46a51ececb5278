#include "agr/solver.hpp"

#include "agr/adaptive.hpp"
#include "agr/error.hpp"

#include <cmath>

#ifdef AGR_HAVE_CBLAS
#include <cblas.h>
#endif
#include <string>

namespace agr {

std::string_view to_string(SolvePath p) {
  return p == SolvePath::minimal_norm ? "minimal_norm" : "least_squares";
}

CgResult cg_solve(const LinearOperator& op, const Eigen::VectorXd& rhs, const CgOptions& options) {
  require(options.tol > 0, "cg: tolerance must be positive");
  require(options.max_iter >= 1, "cg: max_iter must be >= 1");
  if (!rhs.allFinite()) throw Error(ErrorKind::numerical_breakdown, "cg: right-hand side is not finite");
  const bool precondition = options.inv_diagonal.size() > 0;
  if (precondition) require(options.inv_diagonal.size() == rhs.size(), "cg: preconditioner size mismatch");

  CgResult result;
  result.x = Eigen::VectorXd::Zero(rhs.size());
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.report.converged = true;
    return result;
  }

  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = precondition ? Eigen::VectorXd(options.inv_diagonal.cwiseProduct(r)) : r;
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(rhs.size());
  double rz = r.dot(z);
  double rel = 1.0;

  int it = 0;
  while (it < options.max_iter) {
    op(p, ap);
    const double pap = p.dot(ap);
    ++it;
    if (!std::isfinite(pap)) {
      throw Error(ErrorKind::numerical_breakdown, "cg: non-finite value at iteration " + std::to_string(it));
    }
    if (pap <= 0.0) break;  // semidefinite direction, no further progress possible
    const double step = rz / pap;
    result.x.noalias() += step * p;
    r.noalias() -= step * ap;
    rel = r.norm() / rhs_norm;
    if (!std::isfinite(rel)) {
      throw Error(ErrorKind::numerical_breakdown, "cg: non-finite residual at iteration " + std::to_string(it));
    }
    if (options.observer) options.observer(it, result.x);
    if (rel <= options.tol) break;
    if (precondition) {
      z = options.inv_diagonal.cwiseProduct(r);
    } else {
      z = r;
    }
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  result.report.iterations = it;
  result.report.relative_residual = rel;
  result.report.converged = rel <= options.tol;
  return result;
}

LinearOperator symmetric_operator(const Eigen::MatrixXd& m) {
  return [&m](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
#ifdef AGR_HAVE_CBLAS
    y.resize(x.size());
    cblas_dsymv(CblasColMajor, CblasLower, static_cast<int>(m.rows()), 1.0, m.data(),
                static_cast<int>(m.outerStride()), x.data(), 1, 0.0, y.data(), 1);
#else
    y.noalias() = m.selfadjointView<Eigen::Lower>() * x;
#endif
  };
}

CgOptions cg_options(const SolveConfig& cfg, const Eigen::MatrixXd& m) {
  CgOptions o;
  o.tol = cfg.cg_tol;
  o.max_iter = cfg.cg_max_iter;
  if (cfg.jacobi) {
    o.inv_diagonal = m.diagonal().unaryExpr([](double v) { return v > 0 ? 1.0 / v : 1.0; });
  }
  return o;
}

LseSolution solve_minimal_norm(const RowBlockMatrix& a, const Eigen::VectorXd& d, const SolveConfig& cfg) {
  require(d.size() == a.rows(), "solve_minimal_norm: right-hand side length must equal the row count");
  const Eigen::MatrixXd b = assemble_gram(a, cfg.alpha, cfg.memory_budget);
  CgResult cg = cg_solve(symmetric_operator(b), d, cg_options(cfg, b));
  LseSolution s;
  s.mu = apply_transpose(a, cg.x);
  s.report = cg.report;
  s.report.path = SolvePath::minimal_norm;
  return s;
}

LseSolution solve_minimal_norm(const VelocitySet& velocities, const PointCloud& cloud,
                               const WidthField& widths, const SolveConfig& cfg) {
  cfg.validate();
  LseSolution s;
  {
    const Eigen::MatrixXd b = assemble_gram(velocities, cloud, widths, cfg);
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(b.rows(), 0.5);
    CgResult cg = cg_solve(symmetric_operator(b), d, cg_options(cfg, b));
    s.report = cg.report;
    s.mu = std::move(cg.x);  // ξ for now; B is released at scope exit
  }
  const KernelRowBlocks a(velocities, cloud, widths, cfg.batch_size, cfg.memory_budget);
  s.mu = apply_transpose(a, s.mu);
  s.report.path = SolvePath::minimal_norm;
  return s;
}

LseSolution solve_least_squares(const RowBlockMatrix& a, const Eigen::VectorXd& d, const SolveConfig& cfg) {
  const NormalEquations eq = assemble_normal_eq(a, d, cfg.alpha, cfg.memory_budget);
  CgResult cg = cg_solve(symmetric_operator(eq.h), eq.rhs, cg_options(cfg, eq.h));
  LseSolution s{std::move(cg.x), cg.report};
  s.report.path = SolvePath::least_squares;
  return s;
}

LseSolution solve_least_squares(const VelocitySet& velocities, const PointCloud& cloud,
                                const WidthField& widths, const SolveConfig& cfg) {
  cfg.validate();
  const NormalEquations eq = assemble_normal_eq(velocities, cloud, widths, cfg);
  CgResult cg = cg_solve(symmetric_operator(eq.h), eq.rhs, cg_options(cfg, eq.h));
  LseSolution s{std::move(cg.x), cg.report};
  s.report.path = SolvePath::least_squares;
  return s;
}

}  // namespace agr
