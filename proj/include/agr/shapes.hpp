#pragma once

// Analytic test shapes with exact normals, optionally corrupted by Gaussian
// noise. All shapes are centered at the origin.

#include "agr/field.hpp"

#include <string_view>

namespace agr {

enum class ShapeKind { sphere, torus, plate, plate_with_hole };

std::string_view to_string(ShapeKind k);
ShapeKind parse_shape_kind(std::string_view s);

struct ShapeSpec {
  ShapeKind kind = ShapeKind::sphere;
  double radius = 0.4;        // sphere
  double major = 0.3;         // torus
  double minor = 0.1;
  double length = 0.5;        // plate extent along x
  double width = 0.5;         // along y
  double thickness = 0.015;   // along z
  double hole_radius = 0.1;   // cylindrical hole through the plate center
  int n_points = 5000;
  double noise_sigma = 0.0;   // fraction of the bounding-box diagonal
  std::uint64_t seed = 1;

  void validate() const;
};

/// Surface samples in original coordinates with exact unit normals,
/// recorded before the noise is applied.
struct ShapeSample {
  Points positions;
  Points normals;
};

/// Area-uniform samples; per-coordinate N(0, (noise_sigma·diag)²) displacement.
ShapeSample generate(const ShapeSpec& spec);

/// Same shape, `n` noise-free samples from an independent stream. Used as
/// the ground-truth surface for Chamfer and N_s.
ShapeSample surface_samples(const ShapeSpec& spec, int n, std::uint64_t seed);

/// Diagonal of the analytic bounding box.
double bounding_diagonal(const ShapeSpec& spec);

/// Distance-like residual of the shape's defining equation; 0 on the surface.
double implicit_residual(const ShapeSpec& spec, const Vec3& p);

/// 1 inside the solid, 0 outside.
bool inside(const ShapeSpec& spec, const Vec3& p);

}  // namespace agr
