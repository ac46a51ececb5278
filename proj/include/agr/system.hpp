#pragma once

// Assembly of the dense linear systems built from the truncated kernel rows:
// per-velocity row blocks A_c(Q;P), the regularized Gram matrix
// B = AAᵀ + (α−1)diag(AAᵀ) for the minimal-norm path, and the normal
// equations H = AᵀA + (α−1)diag(AᵀA) for the least-squares path. Row blocks
// are produced on demand so that at most two are resident at a time.

#include "agr/kernel.hpp"

#include <cstdint>
#include <vector>

namespace agr {

class VelocitySet;

inline constexpr std::uint64_t kDefaultMemoryBudget = 8ULL << 30;  // 8 GiB

struct SolveConfig {
  double alpha = 2.0;           // regularization scale, >= 1
  int batch_size = 5000;        // N_s, rows per block
  double L = 1.0;               // velocity modulus
  int m = 3;                    // velocity count
  double cg_tol = 1e-10;        // relative residual
  int cg_max_iter = 2000;
  int depth = 8;                // D_max
  bool jacobi = false;          // diagonal preconditioner for CG
  std::uint64_t memory_budget = kDefaultMemoryBudget;  // bytes for B / H / one block

  /// Throws ErrorKind::precondition on out-of-range values.
  void validate() const;
};

/// Global row range of one block.
struct BlockRange {
  Eigen::Index velocity = 0;  // which velocity the rows belong to
  Eigen::Index batch = 0;     // batch index within that velocity
  Eigen::Index row_begin = 0; // global row offset
  Eigen::Index rows = 0;
};

/// A tall matrix exposed as a sequence of dense row blocks. Blocks are
/// computed on request; callers decide how many to keep alive.
class RowBlockMatrix {
 public:
  virtual ~RowBlockMatrix() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Eigen::Index block_count() const = 0;
  virtual BlockRange range(Eigen::Index block) const = 0;
  virtual RowMatrix block(Eigen::Index block) const = 0;

  /// Concatenation of all blocks; for tests and small problems.
  RowMatrix materialize() const;
};

/// Rows A_{c_i}(P_j; P) ordered velocity-major then batch-major.
class KernelRowBlocks final : public RowBlockMatrix {
 public:
  KernelRowBlocks(const VelocitySet& velocities, const PointCloud& cloud, const WidthField& widths,
                  int batch_size, std::uint64_t memory_budget = kDefaultMemoryBudget);

  Eigen::Index rows() const override;
  Eigen::Index cols() const override { return 3 * cloud_.size(); }
  Eigen::Index block_count() const override;
  BlockRange range(Eigen::Index block) const override;
  RowMatrix block(Eigen::Index block) const override;

 private:
  const VelocitySet& velocities_;
  const PointCloud& cloud_;
  const WidthField& widths_;
  Eigen::Index batch_;
  Eigen::Index batches_per_velocity_;
  std::uint64_t memory_budget_;
};

/// An explicit matrix split into row batches.
class DenseRowBlocks final : public RowBlockMatrix {
 public:
  DenseRowBlocks(RowMatrix a, int batch_size);
  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Eigen::Index block_count() const override;
  BlockRange range(Eigen::Index block) const override;
  RowMatrix block(Eigen::Index block) const override;

 private:
  RowMatrix a_;
  Eigen::Index batch_;
};

/// Rows phi_row(c, queries[q]) for every query. Throws ErrorKind::resource
/// when |queries| * 3N doubles exceed the budget.
RowMatrix assemble_block(const Velocity& c, const Points& queries, const PointCloud& cloud,
                         const WidthField& widths, std::uint64_t memory_budget = kDefaultMemoryBudget);

/// B = A Aᵀ + (α−1) diag(A Aᵀ), filled block pair by block pair over the upper
/// triangle and mirrored.
Eigen::MatrixXd assemble_gram(const RowBlockMatrix& a, double alpha,
                              std::uint64_t memory_budget = kDefaultMemoryBudget);
Eigen::MatrixXd assemble_gram(const VelocitySet& velocities, const PointCloud& cloud,
                              const WidthField& widths, const SolveConfig& cfg);

struct NormalEquations {
  Eigen::MatrixXd h;    // AᵀA + (α−1) diag(AᵀA)
  Eigen::VectorXd rhs;  // Aᵀ d
};

/// Normal equations of min ||Aμ − d||², accumulated one block at a time.
NormalEquations assemble_normal_eq(const RowBlockMatrix& a, const Eigen::VectorXd& d, double alpha,
                                   std::uint64_t memory_budget = kDefaultMemoryBudget);
NormalEquations assemble_normal_eq(const VelocitySet& velocities, const PointCloud& cloud,
                                   const WidthField& widths, const SolveConfig& cfg);

/// Aᵀ ξ computed block by block.
Eigen::VectorXd apply_transpose(const RowBlockMatrix& a, const Eigen::VectorXd& xi);

/// Largest N for which an (mN x mN) Gram matrix fits the budget.
Eigen::Index max_points_for_gram(int m, std::uint64_t memory_budget);

}  // namespace agr
