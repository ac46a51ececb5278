#include "agr/adaptive.hpp"

#include "agr/error.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <random>

namespace agr {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::fixed_axes: return "fixed_axes";
    case Provenance::adaptive: return "adaptive";
    case Provenance::user: return "user";
  }
  return "unknown";
}

VelocitySet::VelocitySet(std::vector<Velocity> velocities, Provenance provenance)
    : velocities_(std::move(velocities)), provenance_(provenance) {
  require(!velocities_.empty(), "velocity set must not be empty");
  for (std::size_t i = 0; i < velocities_.size(); ++i) {
    require(velocities_[i].vector().allFinite(), "velocity has non-finite components");
    for (std::size_t j = 0; j < i; ++j) {
      require(!(velocities_[i] == velocities_[j]), "velocity set contains duplicate velocities");
    }
  }
}

namespace {

void apply_sign_convention(Vec3& v) {
  for (int a = 0; a < 3; ++a) {
    if (std::abs(v[a]) > 1e-9) {
      if (v[a] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

EigenFrame covariance_eigen(const PointCloud& cloud, std::size_t subsample_size, std::uint64_t seed) {
  require(cloud.size() > 0, "covariance_eigen: empty cloud");
  require(subsample_size >= 1, "covariance_eigen: subsample size must be >= 1");
  const auto n = static_cast<std::size_t>(cloud.size());
  std::vector<Eigen::Index> picks(n);
  std::iota(picks.begin(), picks.end(), 0);
  const std::size_t count = std::min(n, subsample_size);
  if (count < n) {
    // Partial Fisher-Yates; the first `count` entries are the sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(picks[i], picks[pick(rng)]);
    }
    picks.resize(count);
    std::sort(picks.begin(), picks.end());
  }

  Vec3 mean = Vec3::Zero();
  for (auto i : picks) mean += cloud.point(i);
  mean /= static_cast<double>(count);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : picks) {
    const Vec3 d = cloud.point(i) - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(count);

  EigenFrame frame;
  if (cov.cwiseAbs().maxCoeff() == 0.0) return frame;  // all points coincide

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  struct Pair {
    double lambda;
    Vec3 v;
  };
  std::array<Pair, 3> pairs;
  for (int k = 0; k < 3; ++k) {
    pairs[k] = {std::max(0.0, eig.eigenvalues()[2 - k]), eig.eigenvectors().col(2 - k).normalized()};
    apply_sign_convention(pairs[k].v);
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (std::abs(a.lambda - b.lambda) > 1e-12) return a.lambda > b.lambda;
    return std::lexicographical_compare(b.v.data(), b.v.data() + 3, a.v.data(), a.v.data() + 3);
  });
  for (int k = 0; k < 3; ++k) {
    frame.lambdas[k] = pairs[k].lambda;
    frame.vectors[k] = pairs[k].v;
  }
  return frame;
}

double thin_direction_modulus(double lambda3, double L, double epsilon) {
  return std::min(2.0 * epsilon * L / (std::max(lambda3, 0.0) + 0.1 * epsilon), 20.0 * L);
}

VelocitySet select_velocities(const EigenFrame& frame, double L, double epsilon) {
  require(L > 0, "select_velocities: L must be positive");
  require(epsilon > 0, "select_velocities: epsilon must be positive");
  const double third = frame.lambdas[2] <= epsilon ? thin_direction_modulus(frame.lambdas[2], L, epsilon) : L;
  return VelocitySet({Velocity(L * frame.vectors[0]), Velocity(L * frame.vectors[1]),
                      Velocity(third * frame.vectors[2])},
                     Provenance::adaptive);
}

VelocitySet default_velocities(double L) { return fixed_velocities(L, 3); }

VelocitySet fixed_velocities(double L, int m) {
  require(L > 0, "velocity modulus L must be positive");
  const double s = 1.0 / std::sqrt(3.0);
  const std::array<Vec3, 7> dirs = {Vec3::UnitX(),    Vec3::UnitY(),     Vec3::UnitZ(),
                                    Vec3(s, s, s),    Vec3(s, -s, s),    Vec3(-s, s, s),
                                    Vec3(s, s, -s)};
  require(m >= 1 && m <= static_cast<int>(dirs.size()),
          "fixed velocity count must be in [1, 7]; pass explicit velocities for more");
  std::vector<Velocity> v;
  for (int i = 0; i < m; ++i) v.emplace_back(L * dirs[static_cast<size_t>(i)]);
  return VelocitySet(std::move(v), Provenance::fixed_axes);
}

VelocitySet isotropic_velocities() { return VelocitySet({Velocity(Vec3::Zero())}, Provenance::fixed_axes); }

}  // namespace agr
