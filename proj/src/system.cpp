#include "agr/system.hpp"

#include "agr/adaptive.hpp"
#include "agr/error.hpp"

#include <string>

#ifdef AGR_HAVE_CBLAS
#include <cblas.h>
#endif

namespace agr {

namespace {

void check_budget(double doubles, std::uint64_t budget, const std::string& what) {
  const double bytes = doubles * sizeof(double);
  if (bytes > static_cast<double>(budget)) {
    throw Error(ErrorKind::resource, what + " needs " + std::to_string(bytes / (1 << 20)) +
                                         " MiB, over the " + std::to_string(budget >> 20) +
                                         " MiB budget");
  }
}

template <class M>
void mirror_lower(M&& m) {
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < c; ++r) m(r, c) = m(c, r);
}

// Lower triangle of c += a aᵀ (or aᵀ a when `transpose_a`).
void lower_rank_update(Eigen::Ref<Eigen::MatrixXd> c, const RowMatrix& a, bool transpose_a) {
#ifdef AGR_HAVE_CBLAS
  // A row-major a is the column-major aᵀ with leading dimension a.cols().
  const auto n = static_cast<int>(transpose_a ? a.cols() : a.rows());
  const auto k = static_cast<int>(transpose_a ? a.rows() : a.cols());
  cblas_dsyrk(CblasColMajor, CblasLower, transpose_a ? CblasNoTrans : CblasTrans, n, k, 1.0, a.data(),
              static_cast<int>(a.cols()), 1.0, c.data(), static_cast<int>(c.outerStride()));
#else
  if (transpose_a) {
    c.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  } else {
    c.selfadjointView<Eigen::Lower>().rankUpdate(a);
  }
#endif
}

constexpr Eigen::Index kGramSourceChunk = 512;

Eigen::Index ceil_div(Eigen::Index a, Eigen::Index b) { return (a + b - 1) / b; }

}  // namespace

void SolveConfig::validate() const {
  require(alpha >= 1.0, "alpha must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(L >= 0.0, "L must be >= 0");
  require(m >= 1, "m must be >= 1");
  require(cg_tol > 0.0, "cg tolerance must be positive");
  require(cg_max_iter >= 1, "cg max iterations must be >= 1");
  require(depth >= 3 && depth <= 10, "depth must be in [3, 10]");
}

RowMatrix RowBlockMatrix::materialize() const {
  RowMatrix a(rows(), cols());
  for (Eigen::Index b = 0; b < block_count(); ++b) {
    const BlockRange r = range(b);
    a.middleRows(r.row_begin, r.rows) = block(b);
  }
  return a;
}

KernelRowBlocks::KernelRowBlocks(const VelocitySet& velocities, const PointCloud& cloud,
                                 const WidthField& widths, int batch_size, std::uint64_t memory_budget)
    : velocities_(velocities),
      cloud_(cloud),
      widths_(widths),
      batch_(batch_size),
      memory_budget_(memory_budget) {
  require(batch_size >= 1, "batch size must be >= 1");
  require(widths.size() == cloud.size(), "one width per cloud point is required");
  batches_per_velocity_ = ceil_div(cloud.size(), batch_);
}

Eigen::Index KernelRowBlocks::rows() const {
  return static_cast<Eigen::Index>(velocities_.size()) * cloud_.size();
}

Eigen::Index KernelRowBlocks::block_count() const {
  return static_cast<Eigen::Index>(velocities_.size()) * batches_per_velocity_;
}

BlockRange KernelRowBlocks::range(Eigen::Index block) const {
  BlockRange r;
  r.velocity = block / batches_per_velocity_;
  r.batch = block % batches_per_velocity_;
  const Eigen::Index begin = r.batch * batch_;
  r.rows = std::min(batch_, cloud_.size() - begin);
  r.row_begin = r.velocity * cloud_.size() + begin;
  return r;
}

RowMatrix KernelRowBlocks::block(Eigen::Index block) const {
  const BlockRange r = range(block);
  const Eigen::Index begin = r.batch * batch_;
  const Points queries = cloud_.positions().middleRows(begin, r.rows);
  return assemble_block(velocities_[static_cast<std::size_t>(r.velocity)], queries, cloud_,
                        widths_.segment(begin, r.rows), memory_budget_);
}

DenseRowBlocks::DenseRowBlocks(RowMatrix a, int batch_size) : a_(std::move(a)), batch_(batch_size) {
  require(batch_size >= 1, "batch size must be >= 1");
}

Eigen::Index DenseRowBlocks::block_count() const { return ceil_div(a_.rows(), batch_); }

BlockRange DenseRowBlocks::range(Eigen::Index block) const {
  BlockRange r;
  r.batch = block;
  r.row_begin = block * batch_;
  r.rows = std::min(batch_, a_.rows() - r.row_begin);
  return r;
}

RowMatrix DenseRowBlocks::block(Eigen::Index block) const {
  const BlockRange r = range(block);
  return a_.middleRows(r.row_begin, r.rows);
}

RowMatrix assemble_block(const Velocity& c, const Points& queries, const PointCloud& cloud,
                         const WidthField& widths, std::uint64_t memory_budget) {
  require(widths.size() == queries.rows(), "assemble_block: one width per query is required");
  check_budget(static_cast<double>(queries.rows()) * 3.0 * static_cast<double>(cloud.size()),
               memory_budget, "row block");
  RowMatrix out(queries.rows(), 3 * cloud.size());
  detail::fill_phi_rows(c, queries, widths, cloud.positions(), out);
  return out;
}

Eigen::Index max_points_for_gram(int m, std::uint64_t memory_budget) {
  const double n = std::sqrt(static_cast<double>(memory_budget) / sizeof(double)) / m;
  return static_cast<Eigen::Index>(n);
}

Eigen::MatrixXd assemble_gram(const RowBlockMatrix& a, double alpha, std::uint64_t memory_budget) {
  require(alpha >= 1.0, "alpha must be >= 1");
  const Eigen::Index n = a.rows();
  const double need = static_cast<double>(n) * static_cast<double>(n);
  if (need * sizeof(double) > static_cast<double>(memory_budget)) {
    throw Error(ErrorKind::resource, "Gram matrix of " + std::to_string(n) +
                                         " rows exceeds the memory budget; at most " +
                                         std::to_string(max_points_for_gram(1, memory_budget)) +
                                         " rows fit");
  }
  Eigen::MatrixXd b(n, n);
  const Eigen::Index blocks = a.block_count();
  for (Eigen::Index b1 = 0; b1 < blocks; ++b1) {
    const BlockRange r1 = a.range(b1);
    const RowMatrix a1 = a.block(b1);
    // Diagonal block: lower triangle by a rank update, then mirrored.
    auto diag = b.block(r1.row_begin, r1.row_begin, r1.rows, r1.rows);
    diag.setZero();
    lower_rank_update(diag, a1, false);
    mirror_lower(diag);
    for (Eigen::Index b2 = b1 + 1; b2 < blocks; ++b2) {
      const BlockRange r2 = a.range(b2);
      const RowMatrix a2 = a.block(b2);
      b.block(r1.row_begin, r2.row_begin, r1.rows, r2.rows).noalias() = a1 * a2.transpose();
      b.block(r2.row_begin, r1.row_begin, r2.rows, r1.rows) =
          b.block(r1.row_begin, r2.row_begin, r1.rows, r2.rows).transpose();
    }
  }
  b.diagonal() *= alpha;
  return b;
}

Eigen::MatrixXd assemble_gram(const VelocitySet& velocities, const PointCloud& cloud,
                              const WidthField& widths, const SolveConfig& cfg) {
  cfg.validate();
  const Eigen::Index rows = static_cast<Eigen::Index>(velocities.size()) * cloud.size();
  const double need = static_cast<double>(rows) * static_cast<double>(rows) * sizeof(double);
  if (need > static_cast<double>(cfg.memory_budget)) {
    throw Error(ErrorKind::resource,
                "Gram matrix for N=" + std::to_string(cloud.size()) + ", m=" +
                    std::to_string(velocities.size()) + " exceeds the memory budget; at most N=" +
                    std::to_string(max_points_for_gram(static_cast<int>(velocities.size()), cfg.memory_budget)) +
                    " fits");
  }
  // AAᵀ = Σ_S A_S A_Sᵀ over column chunks A_S (all rows, the 3|S| columns of
  // a run S of source points), so every product is a symmetric rank update.
  const Eigen::Index n = cloud.size();
  const auto m = static_cast<Eigen::Index>(velocities.size());
  const double budget_rows = static_cast<double>(cfg.memory_budget) - need;
  Eigen::Index chunk = std::min<Eigen::Index>(kGramSourceChunk, n);
  while (chunk > 1 && static_cast<double>(rows) * 3.0 * static_cast<double>(chunk) * sizeof(double) > budget_rows) chunk /= 2;
  check_budget(static_cast<double>(rows) * 3.0 * static_cast<double>(chunk) + static_cast<double>(rows) * rows,
               cfg.memory_budget, "Gram assembly");
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows, rows);
  RowMatrix a_s;
  for (Eigen::Index s0 = 0; s0 < n; s0 += chunk) {
    const Eigen::Index len = std::min(chunk, n - s0);
    const Points sources = cloud.positions().middleRows(s0, len);
    a_s.resize(rows, 3 * len);
    for (Eigen::Index v = 0; v < m; ++v) {
      detail::fill_phi_rows(velocities[static_cast<std::size_t>(v)], cloud.positions(), widths, sources,
                            a_s.middleRows(v * n, n));
    }
    lower_rank_update(b, a_s, false);
  }
  mirror_lower(b);
  b.diagonal() *= cfg.alpha;
  return b;
}

NormalEquations assemble_normal_eq(const RowBlockMatrix& a, const Eigen::VectorXd& d, double alpha,
                                   std::uint64_t memory_budget) {
  require(alpha >= 1.0, "alpha must be >= 1");
  require(d.size() == a.rows(), "right-hand side length must equal the row count");
  const Eigen::Index n = a.cols();
  check_budget(static_cast<double>(n) * static_cast<double>(n), memory_budget, "normal-equation matrix");
  NormalEquations eq;
  eq.h = Eigen::MatrixXd::Zero(n, n);
  eq.rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index blk = 0; blk < a.block_count(); ++blk) {
    const BlockRange r = a.range(blk);
    const RowMatrix ab = a.block(blk);
    lower_rank_update(eq.h, ab, true);
    eq.rhs.noalias() += ab.transpose() * d.segment(r.row_begin, r.rows);
  }
  mirror_lower(eq.h);
  eq.h.diagonal() *= alpha;
  return eq;
}

NormalEquations assemble_normal_eq(const VelocitySet& velocities, const PointCloud& cloud,
                                   const WidthField& widths, const SolveConfig& cfg) {
  cfg.validate();
  const KernelRowBlocks a(velocities, cloud, widths, cfg.batch_size, cfg.memory_budget);
  return assemble_normal_eq(a, Eigen::VectorXd::Constant(a.rows(), 0.5), cfg.alpha, cfg.memory_budget);
}

Eigen::VectorXd apply_transpose(const RowBlockMatrix& a, const Eigen::VectorXd& xi) {
  require(xi.size() == a.rows(), "apply_transpose: vector length must equal the row count");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.cols());
  for (Eigen::Index blk = 0; blk < a.block_count(); ++blk) {
    const BlockRange r = a.range(blk);
    out.noalias() += a.block(blk).transpose() * xi.segment(r.row_begin, r.rows);
  }
  return out;
}

}  // namespace agr
