#include "agr/kernel.hpp"

#include "agr/error.hpp"
#include "agr/kdtree.hpp"

#include <cmath>
#include <numbers>

namespace agr {

namespace {

constexpr double kInv4Pi = 0.25 * std::numbers::inv_pi;

double checked_norm(const Vec3& x) {
  const double r = x.norm();
  if (!(r > 0)) throw Error(ErrorKind::domain, "kernel evaluated at its singularity |x| = 0");
  return r;
}

using Vec3L = Eigen::Matrix<long double, 3, 1>;

long double phi_extended(const Vec3L& c, long double c_mod, const Vec3L& x) {
  const long double r = x.norm();
  return std::exp(0.5L * (c.dot(x) - c_mod * r)) / (4.0L * std::numbers::pi_v<long double> * r);
}

}  // namespace

double fundamental_solution(const Velocity& c, const Vec3& x) {
  const double r = checked_norm(x);
  return kInv4Pi / r * std::exp(0.5 * (c.vector().dot(x) - c.modulus() * r));
}

Vec3 fundamental_gradient(const Velocity& c, const Vec3& x) {
  const double r = checked_norm(x);
  const double phi = fundamental_solution(c, x);
  return phi * (-x / (r * r) + 0.5 * c.vector() - 0.5 * c.modulus() * x / r);
}

Vec3 gauss_kernel(const Velocity& c, const Vec3& x) {
  const double r = checked_norm(x);
  const double phi = fundamental_solution(c, x);
  return phi * (-x / (r * r) - 0.5 * c.vector() - 0.5 * c.modulus() * x / r);
}

double pde_residual(const Velocity& c, const Vec3& x, double h) {
  require(h > 0, "pde_residual: step must be positive");
  if (!(x.norm() > 10 * h)) {
    throw Error(ErrorKind::domain, "pde_residual: |x| must exceed 10 h");
  }
  const Vec3L cl = c.vector().cast<long double>();
  const long double cm = cl.norm();
  const Vec3L xl = x.cast<long double>();
  const long double hl = h;
  const long double center = phi_extended(cl, cm, xl);
  long double laplacian = 0, convection = 0;
  for (int a = 0; a < 3; ++a) {
    Vec3L step = Vec3L::Zero();
    step[a] = hl;
    const long double plus = phi_extended(cl, cm, xl + step);
    const long double minus = phi_extended(cl, cm, xl - step);
    laplacian += (plus - 2.0L * center + minus) / (hl * hl);
    convection += cl[a] * (plus - minus) / (2.0L * hl);
  }
  return static_cast<double>(laplacian - convection);
}

WidthEstimator::WidthEstimator(const PointCloud& cloud, const WidthParams& params) : params_(params) {
  require(cloud.size() > 0, "compute_widths: empty cloud");
  require(params.w_min > 0, "compute_widths: w_min must be positive");
  require(params.k_w >= 1, "compute_widths: k_w must be >= 1");
  k_ = static_cast<int>(std::min<Eigen::Index>(params.k_w, std::max<Eigen::Index>(cloud.size() - 1, 1)));
  tree_ = std::make_unique<KdTree>(cloud.positions());
}

WidthEstimator::~WidthEstimator() = default;
WidthEstimator::WidthEstimator(WidthEstimator&&) noexcept = default;
WidthEstimator& WidthEstimator::operator=(WidthEstimator&&) noexcept = default;

WidthField WidthEstimator::operator()(const Points& queries) const {
  WidthField w(queries.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Vec3 x = queries.row(q).transpose();
    auto nn = tree_->knn(x, k_ + 1);
    // Drop the query itself when it is a cloud point; otherwise the farthest.
    if (!nn.empty() && nn.front().dist2 == 0.0 && static_cast<int>(nn.size()) > k_) {
      nn.erase(nn.begin());
    }
    if (static_cast<int>(nn.size()) > k_) nn.resize(static_cast<size_t>(k_));
    double sum = 0;
    for (const auto& n : nn) sum += n.dist2;
    double width = std::max(params_.w_min, std::sqrt(sum / static_cast<double>(nn.size())));
    if (params_.w_max) width = std::min(width, std::max(*params_.w_max, params_.w_min));
    w[q] = width;
  }
  return w;
}

WidthField compute_widths(const Points& queries, const PointCloud& cloud, const WidthParams& params) {
  return WidthEstimator(cloud, params)(queries);
}

Eigen::VectorXd phi_row(const Velocity& c, const Vec3& x, const PointCloud& cloud, double width) {
  require(width > 0, "phi_row: width must be positive");
  RowMatrix row(1, 3 * cloud.size());
  Points q(1, 3);
  q.row(0) = x.transpose();
  Eigen::VectorXd w(1);
  w[0] = width;
  detail::fill_phi_rows(c, q, w, cloud.positions(), row);
  return row.row(0).transpose();
}

}  // namespace agr
