#pragma once

// Closed-form anisotropic fundamental solution of  Δu − c·∇u = 0  in R^3,
// its gradient, the Gauss kernel K_c = ∇Φ_c − c Φ_c whose surface integral
// against outward normals yields the indicator function, and the truncated
// discrete rows used to assemble the linear systems.

#include "agr/point_cloud.hpp"

#include <memory>
#include <optional>
#include <span>

namespace agr {

/// Convection velocity c (normalized-space units) with its cached modulus.
class Velocity {
 public:
  Velocity() = default;
  explicit Velocity(const Vec3& v) : v_(v), modulus_(v.norm()) {}
  Velocity(double x, double y, double z) : Velocity(Vec3(x, y, z)) {}

  const Vec3& vector() const { return v_; }
  double modulus() const { return modulus_; }

  friend bool operator==(const Velocity& a, const Velocity& b) { return a.v_ == b.v_; }

 private:
  Vec3 v_ = Vec3::Zero();
  double modulus_ = 0;
};

struct WidthParams {
  double w_min = 0.0015;
  int k_w = 7;
  std::optional<double> w_max;  // optional upper clamp, off by default
};

/// Per-query truncation widths, each >= w_min.
using WidthField = Eigen::VectorXd;

/// Φ_c(x) = exp(½(c·x − |c||x|)) / (4π|x|). Throws ErrorKind::domain at x = 0.
double fundamental_solution(const Velocity& c, const Vec3& x);

/// ∇Φ_c(x) = Φ_c(x) (−x/|x|² + ½c − ½|c| x/|x|).
Vec3 fundamental_gradient(const Velocity& c, const Vec3& x);

/// K_c(x) = Φ_c(x) (−x/|x|² − ½c − ½|c| x/|x|).
Vec3 gauss_kernel(const Velocity& c, const Vec3& x);

/// Central-difference estimate of ΔΦ_c − c·∇Φ_c at x: 7-point Laplacian and
/// central gradient with step h, evaluated in extended precision so that the
/// O(h²) truncation term dominates round-off. Requires |x| > 10h.
double pde_residual(const Velocity& c, const Vec3& x, double h);

class KdTree;

/// Width evaluator holding a spatial index over the cloud; build once,
/// query many times.
class WidthEstimator {
 public:
  WidthEstimator(const PointCloud& cloud, const WidthParams& params);
  ~WidthEstimator();
  WidthEstimator(WidthEstimator&&) noexcept;
  WidthEstimator& operator=(WidthEstimator&&) noexcept;

  WidthField operator()(const Points& queries) const;
  const WidthParams& params() const { return params_; }

 private:
  std::unique_ptr<KdTree> tree_;
  WidthParams params_;
  int k_;
};

/// w(x) = max(w_min, sqrt(mean squared distance to the k_w nearest cloud
/// points)), excluding x itself when x is one of the cloud points. Clamped
/// from above by w_max when set.
WidthField compute_widths(const Points& queries, const PointCloud& cloud, const WidthParams& params);

/// Flattened 3N row of the truncated discrete Gauss formula at x: block j is
///   exp(½(c·r − |c|d̃)) / (8πd̃) · (−2r/d̃² − c − |c| r/d̃),
/// r = x − p_j, d̃ = max(|r|, w). Finite for x = p_j.
Eigen::VectorXd phi_row(const Velocity& c, const Vec3& x, const PointCloud& cloud, double width);

namespace detail {

/// Fills out.row(q) with phi_row(c, queries.row(q), ...) for every query.
/// `out` must be |queries| x 3N.
void fill_phi_rows(const Velocity& c, const Eigen::Ref<const Points>& queries,
                   const Eigen::Ref<const Eigen::VectorXd>& widths, const Points& cloud,
                   Eigen::Ref<RowMatrix> out);

/// Matrix-free average over velocities of the rows applied to a solution:
/// out[q] = (1/m) Σ_i A_{c_i}(q; P) μ.
void apply_mean_rows(std::span<const Velocity> velocities, const Eigen::Ref<const Points>& queries,
                     const Eigen::Ref<const Eigen::VectorXd>& widths, const Points& cloud,
                     const Eigen::Ref<const Eigen::VectorXd>& mu, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace detail

}  // namespace agr
