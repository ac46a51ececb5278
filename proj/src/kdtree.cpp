#include "agr/kdtree.hpp"

#include "agr/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace agr {

namespace {

double box_dist2(const Vec3& q, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  double d2 = 0;
  for (int a = 0; a < 3; ++a) {
    const double e = q[a] < lo[a] ? lo[a] - q[a] : (q[a] > hi[a] ? q[a] - hi[a] : 0.0);
    d2 += e * e;
  }
  return d2;
}

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

}  // namespace

KdTree::KdTree(Points points, int leaf_size) : points_(std::move(points)), leaf_size_(leaf_size) {
  require(points_.rows() > 0, "kd-tree needs at least one point");
  require(points_.rows() < std::numeric_limits<std::int32_t>::max(), "kd-tree size overflow");
  order_.resize(static_cast<size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * order_.size() / static_cast<size_t>(leaf_size_) + 2);
  build(0, static_cast<std::int32_t>(order_.size()));
}

std::int32_t KdTree::build(std::int32_t begin, std::int32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (std::int32_t i = begin; i < end; ++i) {
    const Eigen::Vector3d p = points_.row(order_[i]).transpose();
    node.lo = node.lo.cwiseMin(p);
    node.hi = node.hi.cwiseMax(p);
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis;
  (node.hi - node.lo).maxCoeff(&axis);
  if (node.hi[axis] == node.lo[axis]) return id;  // all coincident
  const std::int32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::int32_t a, std::int32_t b) {
                     const double pa = points_(a, axis), pb = points_(b, axis);
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_(order_[mid], axis);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

template <class Visit>
void KdTree::search(std::int32_t id, const Vec3& q, double& bound, Visit&& visit) const {
  const Node& node = nodes_[id];
  if (box_dist2(q, node.lo, node.hi) > bound) return;
  if (node.axis < 0) {
    for (std::int32_t i = node.begin; i < node.end; ++i) {
      const std::int32_t idx = order_[i];
      const double d2 = (points_.row(idx).transpose() - q).squaredNorm();
      visit(Neighbor{idx, d2}, bound);
    }
    return;
  }
  const bool go_left = q[node.axis] < node.split;
  search(go_left ? node.left : node.right, q, bound, visit);
  search(go_left ? node.right : node.left, q, bound, visit);
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, int k) const {
  require(k >= 1, "knn requires k >= 1");
  const auto kk = static_cast<size_t>(std::min<Eigen::Index>(k, size()));
  // Max-heap on (dist2, index) so that ties resolve to the lower index.
  auto cmp = [](const Neighbor& a, const Neighbor& b) { return closer(a, b); };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(cmp)> heap(cmp);
  double bound = std::numeric_limits<double>::infinity();
  search(0, query, bound, [&](const Neighbor& n, double& b) {
    if (heap.size() < kk) {
      heap.push(n);
    } else if (closer(n, heap.top())) {
      heap.pop();
      heap.push(n);
    } else {
      return;
    }
    if (heap.size() == kk) b = heap.top().dist2;
  });
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  Neighbor best{-1, std::numeric_limits<double>::infinity()};
  double bound = best.dist2;
  search(0, query, bound, [&](const Neighbor& n, double& b) {
    if (closer(n, best)) {
      best = n;
      b = n.dist2;
    }
  });
  return best;
}

}  // namespace agr
