#pragma once

// Velocity selection. The covariance of a subsample of the cloud gives three
// principal directions; a cloud whose smallest eigenvalue falls at or below
// ε is treated as thin and its thickness direction gets a boosted modulus.

#include "agr/kernel.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace agr {

enum class Provenance { fixed_axes, adaptive, user };

std::string_view to_string(Provenance p);

class VelocitySet {
 public:
  /// Throws ErrorKind::precondition if empty, non-finite, or with duplicates.
  VelocitySet(std::vector<Velocity> velocities, Provenance provenance);

  std::size_t size() const { return velocities_.size(); }
  const Velocity& operator[](std::size_t i) const { return velocities_[i]; }
  std::span<const Velocity> span() const { return velocities_; }
  auto begin() const { return velocities_.begin(); }
  auto end() const { return velocities_.end(); }
  Provenance provenance() const { return provenance_; }

 private:
  std::vector<Velocity> velocities_;
  Provenance provenance_;
};

struct EigenFrame {
  std::array<double, 3> lambdas{};  // descending, clamped at 0
  std::array<Vec3, 3> vectors{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
};

inline constexpr std::size_t kDefaultSubsample = 5000;
inline constexpr double kDefaultEpsilon = 0.001;

/// Eigen-decomposition of the covariance of min(N, subsample_size) points
/// drawn uniformly without replacement. Each eigenvector's first component
/// with magnitude above 1e-9 is made positive.
EigenFrame covariance_eigen(const PointCloud& cloud, std::size_t subsample_size, std::uint64_t seed);

/// (Lv₁, Lv₂, Lv₃), with the third modulus replaced by 2εL/(λ₃ + 0.1ε)
/// (capped at 20L) when λ₃ <= ε.
VelocitySet select_velocities(const EigenFrame& frame, double L, double epsilon);

/// (Le₁, Le₂, Le₃).
VelocitySet default_velocities(double L);

/// The first m of: the three axes, then the four body diagonals, scaled by L.
VelocitySet fixed_velocities(double L, int m);

/// The isotropic configuration, a single zero velocity.
VelocitySet isotropic_velocities();

/// Modulus the thin-structure rule assigns to the third direction.
double thin_direction_modulus(double lambda3, double L, double epsilon);

}  // namespace agr
