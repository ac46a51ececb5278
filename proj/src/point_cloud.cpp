#include "agr/point_cloud.hpp"

#include "agr/error.hpp"

#include <cmath>

namespace agr {

Points Transform::to_original(const Points& p) const {
  Points out = p * scale;
  out.rowwise() += offset.transpose();
  return out;
}

Points Transform::to_normalized(const Points& p) const {
  Points out = p;
  out.rowwise() -= offset.transpose();
  return out / scale;
}

Points normalized_rows(const Points& v) {
  Points out = v;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

PointCloud PointCloud::from_original(const Points& original, std::optional<Points> normals) {
  require(original.rows() > 0, "point cloud is empty");
  require(original.allFinite(), "point cloud contains non-finite coordinates");
  const Vec3 lo = original.colwise().minCoeff().transpose();
  const Vec3 hi = original.colwise().maxCoeff().transpose();
  const double extent = (hi - lo).maxCoeff();
  Transform t;
  t.scale = extent > 0 ? extent : 1.0;
  t.offset = 0.5 * (lo + hi) - 0.5 * t.scale * Vec3::Ones();
  return from_normalized(t.to_normalized(original), std::move(normals), t);
}

PointCloud PointCloud::from_normalized(Points positions, std::optional<Points> normals,
                                       Transform transform) {
  if (normals) {
    require(normals->rows() == positions.rows(), "normal count does not match point count");
    *normals = normalized_rows(*normals);
  }
  PointCloud c;
  c.positions_ = std::move(positions);
  c.gt_normals_ = std::move(normals);
  c.transform_ = transform;
  return c;
}

}  // namespace agr
