#include "agr/shapes.hpp"

#include "agr/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace agr {

namespace {

using std::numbers::pi;

struct Sampler {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  double operator()() { return unit(rng); }
};

void sample_sphere(const ShapeSpec& s, Sampler& u, Vec3& p, Vec3& n) {
  const double z = 2 * u() - 1;
  const double phi = 2 * pi * u();
  const double r = std::sqrt(std::max(0.0, 1 - z * z));
  n = Vec3(r * std::cos(phi), r * std::sin(phi), z);
  p = s.radius * n;
}

void sample_torus(const ShapeSpec& s, Sampler& u, Vec3& p, Vec3& n) {
  // Area density is proportional to R + r cos v.
  for (;;) {
    const double a = 2 * pi * u();
    const double b = 2 * pi * u();
    if (u() * (s.major + s.minor) > s.major + s.minor * std::cos(b)) continue;
    n = Vec3(std::cos(b) * std::cos(a), std::cos(b) * std::sin(a), std::sin(b));
    p = Vec3((s.major + s.minor * std::cos(b)) * std::cos(a), (s.major + s.minor * std::cos(b)) * std::sin(a),
             s.minor * std::sin(b));
    return;
  }
}

// Closed box, optionally pierced along z by a cylinder at the center.
void sample_plate(const ShapeSpec& s, bool hole, Sampler& u, Vec3& p, Vec3& n) {
  const double hx = 0.5 * s.length, hy = 0.5 * s.width, hz = 0.5 * s.thickness;
  const double cap = s.length * s.width - (hole ? pi * s.hole_radius * s.hole_radius : 0.0);
  const std::array<double, 5> area = {2 * cap, 2 * s.width * s.thickness, 2 * s.length * s.thickness,
                                      hole ? 2 * pi * s.hole_radius * s.thickness : 0.0, 0.0};
  const double total = area[0] + area[1] + area[2] + area[3];
  double pick = u() * total;
  int part = 0;
  while (part < 3 && pick >= area[static_cast<size_t>(part)]) pick -= area[static_cast<size_t>(part++)];
  const double side = u() < 0.5 ? -1.0 : 1.0;
  switch (part) {
    case 0:
      for (;;) {
        p = Vec3((2 * u() - 1) * hx, (2 * u() - 1) * hy, side * hz);
        if (!hole || p.head<2>().norm() >= s.hole_radius) break;
      }
      n = Vec3(0, 0, side);
      return;
    case 1:
      p = Vec3(side * hx, (2 * u() - 1) * hy, (2 * u() - 1) * hz);
      n = Vec3(side, 0, 0);
      return;
    case 2:
      p = Vec3((2 * u() - 1) * hx, side * hy, (2 * u() - 1) * hz);
      n = Vec3(0, side, 0);
      return;
    default: {
      const double a = 2 * pi * u();
      p = Vec3(s.hole_radius * std::cos(a), s.hole_radius * std::sin(a), (2 * u() - 1) * hz);
      n = Vec3(-std::cos(a), -std::sin(a), 0);
      return;
    }
  }
}

ShapeSample draw(const ShapeSpec& spec, int n, std::uint64_t seed) {
  Sampler u{std::mt19937_64(seed)};
  ShapeSample out;
  out.positions.resize(n, 3);
  out.normals.resize(n, 3);
  Vec3 p, nn;
  for (int i = 0; i < n; ++i) {
    switch (spec.kind) {
      case ShapeKind::sphere: sample_sphere(spec, u, p, nn); break;
      case ShapeKind::torus: sample_torus(spec, u, p, nn); break;
      case ShapeKind::plate: sample_plate(spec, false, u, p, nn); break;
      case ShapeKind::plate_with_hole: sample_plate(spec, true, u, p, nn); break;
    }
    out.positions.row(i) = p.transpose();
    out.normals.row(i) = nn.transpose();
  }
  return out;
}

Vec3 half_extent(const ShapeSpec& s) {
  switch (s.kind) {
    case ShapeKind::sphere: return Vec3::Constant(s.radius);
    case ShapeKind::torus: return Vec3(s.major + s.minor, s.major + s.minor, s.minor);
    default: return Vec3(0.5 * s.length, 0.5 * s.width, 0.5 * s.thickness);
  }
}

}  // namespace

std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::torus: return "torus";
    case ShapeKind::plate: return "plate";
    case ShapeKind::plate_with_hole: return "plate_with_hole";
  }
  return "?";
}

ShapeKind parse_shape_kind(std::string_view s) {
  for (auto k : {ShapeKind::sphere, ShapeKind::torus, ShapeKind::plate, ShapeKind::plate_with_hole}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::parse, "unknown shape '" + std::string(s) + "'");
}

void ShapeSpec::validate() const {
  require(n_points >= 100, "shape: n_points must be >= 100");
  require(noise_sigma >= 0, "shape: noise_sigma must be >= 0");
  switch (kind) {
    case ShapeKind::sphere: require(radius > 0, "shape: radius must be > 0"); break;
    case ShapeKind::torus: require(minor > 0 && major > minor, "shape: torus needs major > minor > 0"); break;
    case ShapeKind::plate_with_hole:
      require(hole_radius > 0 && 2 * hole_radius < std::min(length, width), "shape: hole must fit in the plate");
      [[fallthrough]];
    case ShapeKind::plate:
      require(thickness > 0 && length > 0 && width > 0, "shape: plate dimensions must be > 0");
      break;
  }
}

double bounding_diagonal(const ShapeSpec& spec) { return 2 * half_extent(spec).norm(); }

ShapeSample generate(const ShapeSpec& spec) {
  spec.validate();
  ShapeSample out = draw(spec, spec.n_points, spec.seed);
  if (spec.noise_sigma > 0) {
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma * bounding_diagonal(spec));
    for (Eigen::Index i = 0; i < out.positions.rows(); ++i) {
      for (int a = 0; a < 3; ++a) out.positions(i, a) += gauss(rng);
    }
  }
  return out;
}

ShapeSample surface_samples(const ShapeSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, "surface_samples: n must be >= 1");
  return draw(spec, n, seed);
}

double implicit_residual(const ShapeSpec& s, const Vec3& p) {
  switch (s.kind) {
    case ShapeKind::sphere: return p.norm() - s.radius;
    case ShapeKind::torus: return std::hypot(p.head<2>().norm() - s.major, p.z()) - s.minor;
    default: break;
  }
  // Signed distance to the box, then to the hole wall.
  const Vec3 q = p.cwiseAbs() - half_extent(s);
  double d = q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  if (s.kind == ShapeKind::plate_with_hole) d = std::max(d, s.hole_radius - p.head<2>().norm());
  return d;
}

bool inside(const ShapeSpec& spec, const Vec3& p) { return implicit_residual(spec, p) < 0; }

}  // namespace agr
