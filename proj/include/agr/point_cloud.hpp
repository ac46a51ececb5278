#pragma once

#include <Eigen/Core>
#include <optional>

namespace agr {

using Vec3 = Eigen::Vector3d;
// N x 3, column-major: each coordinate is a contiguous column, which is the
// layout the vectorized kernel loops want.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Similarity map from the normalized unit box back to input coordinates:
/// original = scale * normalized + offset.
struct Transform {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  Vec3 to_original(const Vec3& p) const { return scale * p + offset; }
  Vec3 to_normalized(const Vec3& p) const { return (p - offset) / scale; }
  Points to_original(const Points& p) const;
  Points to_normalized(const Points& p) const;
};

/// Input samples in normalized [0,1]^3 coordinates together with the map back
/// to the caller's frame. The longest bounding-box side spans the unit
/// interval and the box is centered at (0.5, 0.5, 0.5).
class PointCloud {
 public:
  PointCloud() = default;

  /// Normalizes raw input coordinates. Normals, if given, are renormalized
  /// to unit length (they are invariant under the similarity map).
  static PointCloud from_original(const Points& original, std::optional<Points> normals = {});

  /// Wraps coordinates that are already in the unit box (identity transform).
  static PointCloud from_normalized(Points positions, std::optional<Points> normals = {},
                                    Transform transform = {});

  Eigen::Index size() const { return positions_.rows(); }
  const Points& positions() const { return positions_; }
  Vec3 point(Eigen::Index i) const { return positions_.row(i).transpose(); }
  const std::optional<Points>& gt_normals() const { return gt_normals_; }
  bool has_normals() const { return gt_normals_.has_value(); }
  const Transform& transform() const { return transform_; }
  Points original_positions() const { return transform_.to_original(positions_); }

 private:
  Points positions_;
  std::optional<Points> gt_normals_;
  Transform transform_;
};

/// Rows scaled to unit length; zero rows are left untouched.
Points normalized_rows(const Points& v);

}  // namespace agr
