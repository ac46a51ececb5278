#pragma once

#include "agr/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace agr {

struct Neighbor {
  Eigen::Index index;
  double dist2;
};

/// Static 3-d tree for nearest-neighbor queries. Immutable after
/// construction; queries are const and may run concurrently.
class KdTree {
 public:
  explicit KdTree(Points points, int leaf_size = 12);

  Eigen::Index size() const { return points_.rows(); }

  /// The k closest points sorted by (distance, index). Returns fewer when the
  /// tree holds fewer than k points.
  std::vector<Neighbor> knn(const Vec3& query, int k) const;

  Neighbor nearest(const Vec3& query) const;

 private:
  struct Node {
    double split = 0;
    std::int32_t axis = -1;  // -1 marks a leaf
    std::int32_t left = -1, right = -1;
    std::int32_t begin = 0, end = 0;
    Eigen::Vector3d lo, hi;
  };

  std::int32_t build(std::int32_t begin, std::int32_t end);
  template <class Visit>
  void search(std::int32_t node, const Vec3& q, double& bound, Visit&& visit) const;

  Points points_;
  std::vector<std::int32_t> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

}  // namespace agr
