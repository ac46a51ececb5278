#pragma once

// Orientation and reconstruction quality: PGP90, Chamfer distance, normal
// consistency, and area-uniform mesh sampling.

#include "agr/field.hpp"

#include <optional>

namespace agr {

inline constexpr int kSurfaceSamples = 20000;

struct MetricReport {
  double pgp90 = 0;
  double nc_points = 0;             // N_p
  std::optional<double> chamfer;    // evaluation-frame squared-distance units
  std::optional<double> nc_surface; // N_s

  std::optional<double> chamfer_x1e5() const {
    if (!chamfer) return std::nullopt;
    return *chamfer * 1e5;
  }
};

/// Fraction of points with estimated·truth > 0.
double pgp90(const Points& estimated, const Points& truth);

/// Mean squared nearest-neighbor distance, summed over both directions.
double chamfer(const Points& s1, const Points& s2);

/// Symmetric mean of n(p)·n(closest(p)) over both clouds.
double normal_consistency(const Points& p1, const Points& n1, const Points& p2, const Points& n2);

/// Area-weighted uniform samples with face normals.
OrientedCloud sample_mesh(const TriangleMesh& mesh, int n, std::uint64_t seed);

/// Similarity frame in which the ground-truth bounding box has unit diagonal
/// and is centered at the origin. Chamfer values are measured here.
struct EvalFrame {
  Vec3 center = Vec3::Zero();
  double diagonal = 1.0;

  static EvalFrame of(const Points& truth);
  Points apply(const Points& p) const;
};

struct EvalInputs {
  const Points* positions = nullptr;      // estimated oriented cloud
  const Points* normals = nullptr;
  const Points* truth_positions = nullptr;
  const Points* truth_normals = nullptr;
  const TriangleMesh* mesh = nullptr;     // optional reconstruction
  const OrientedCloud* truth_surface = nullptr;  // optional dense truth samples
  int samples = kSurfaceSamples;
  std::uint64_t seed = 0;
};

/// PGP90 and N_p always; Chamfer and N_s when both a mesh and truth-surface
/// samples are given. All inputs in the same (original) coordinates.
MetricReport evaluate(const EvalInputs& in);

}  // namespace agr
