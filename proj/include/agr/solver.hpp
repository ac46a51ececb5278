#pragma once

#include "agr/system.hpp"

#include <functional>
#include <string_view>

namespace agr {

enum class SolvePath { minimal_norm, least_squares };

std::string_view to_string(SolvePath p);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
  SolvePath path = SolvePath::minimal_norm;
};

/// y = Op(x) for a symmetric positive (semi)definite operator.
using LinearOperator = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct CgOptions {
  double tol = 1e-10;
  int max_iter = 2000;
  /// Inverse diagonal for Jacobi preconditioning; empty means none.
  Eigen::VectorXd inv_diagonal;
  /// Called after each iteration with the iteration count and current iterate.
  std::function<void(int, const Eigen::VectorXd&)> observer;
};

struct CgResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Conjugate gradients from the zero vector. Stops when
/// ||Op(x) − rhs|| <= tol ||rhs|| or after max_iter iterations (reported, not
/// thrown). Throws ErrorKind::numerical_breakdown on NaN/Inf.
CgResult cg_solve(const LinearOperator& op, const Eigen::VectorXd& rhs, const CgOptions& options);

/// Operator for a dense symmetric matrix (reads the lower triangle).
LinearOperator symmetric_operator(const Eigen::MatrixXd& m);

/// Options wired from a SolveConfig; Jacobi uses the matrix diagonal.
CgOptions cg_options(const SolveConfig& cfg, const Eigen::MatrixXd& m);

struct LseSolution {
  Eigen::VectorXd mu;  // 3N, point-major triples n_j σ_j
  SolveReport report;
};

/// min ||μ|| s.t. Aμ = d, regularized: μ = Aᵀξ with (AAᵀ + (α−1)diag(AAᵀ))ξ = d.
LseSolution solve_minimal_norm(const RowBlockMatrix& a, const Eigen::VectorXd& d, const SolveConfig& cfg);
LseSolution solve_minimal_norm(const VelocitySet& velocities, const PointCloud& cloud,
                               const WidthField& widths, const SolveConfig& cfg);

/// min ||Aμ − d||² via (AᵀA + (α−1)diag(AᵀA))μ = Aᵀd.
LseSolution solve_least_squares(const RowBlockMatrix& a, const Eigen::VectorXd& d, const SolveConfig& cfg);
LseSolution solve_least_squares(const VelocitySet& velocities, const PointCloud& cloud,
                                const WidthField& widths, const SolveConfig& cfg);

}  // namespace agr
