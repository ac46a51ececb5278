#pragma once

#include "agr/field.hpp"
#include "agr/shapes.hpp"

#include <numbers>
#include <random>

namespace agr::testing {

inline Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec3 v(u(rng), u(rng), u(rng));
    if (v.squaredNorm() <= 1.0) return radius * v;
  }
}

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

// Sphere of radius 0.4 at the origin; in normalized space its radius is 0.5
// and its center is (0.5, 0.5, 0.5).
inline PointCloud sphere_cloud(int n, std::uint64_t seed = 1) {
  const ShapeSample smp = surface_samples(ShapeSpec{}, n, seed);
  return PointCloud::from_original(smp.positions, smp.normals);
}

// μ_j = n_j σ_j with σ_j = 4πr²/N, r = 0.5 in normalized space.
inline Eigen::VectorXd analytic_sphere_mu(const PointCloud& cloud) {
  const double sigma = 4 * std::numbers::pi * 0.25 / static_cast<double>(cloud.size());
  Eigen::VectorXd mu(3 * cloud.size());
  for (Eigen::Index j = 0; j < cloud.size(); ++j) mu.segment<3>(3 * j) = sigma * cloud.gt_normals()->row(j).transpose();
  return mu;
}

}  // namespace agr::testing
