#include "agr/error.hpp"
#include "agr/field.hpp"
#include "agr/kdtree.hpp"

namespace agr {

OrientedCloud extract_normals(const Eigen::VectorXd& mu, const PointCloud& cloud) {
  const Eigen::Index n = cloud.size();
  require(mu.size() == 3 * n, "extract_normals: mu must have length 3N");
  OrientedCloud out;
  out.positions = cloud.positions();
  out.normals.resize(n, 3);
  out.flags.assign(static_cast<size_t>(n), NormalFlag::ok);

  std::vector<Eigen::Index> good;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3 row = mu.segment<3>(3 * j);
    const double len = row.norm();
    if (len < 1e-14 || !std::isfinite(len)) {
      out.flags[static_cast<size_t>(j)] = NormalFlag::degenerate_fallback;
      continue;
    }
    out.normals.row(j) = (row / len).transpose();
    good.push_back(j);
  }
  if (good.empty()) {
    throw Error(ErrorKind::numerical_breakdown, "extract_normals: every surface element vanished");
  }
  if (good.size() == static_cast<size_t>(n)) return out;

  Points good_points(static_cast<Eigen::Index>(good.size()), 3);
  for (size_t i = 0; i < good.size(); ++i) good_points.row(static_cast<Eigen::Index>(i)) = cloud.positions().row(good[i]);
  const KdTree tree(std::move(good_points));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (out.flags[static_cast<size_t>(j)] == NormalFlag::ok) continue;
    const auto nb = tree.nearest(cloud.point(j));
    out.normals.row(j) = out.normals.row(good[static_cast<size_t>(nb.index)]);
  }
  return out;
}

}  // namespace agr
