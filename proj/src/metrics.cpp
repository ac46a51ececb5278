#include "agr/metrics.hpp"

#include "agr/error.hpp"
#include "agr/kdtree.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <random>

namespace agr {

namespace {

double mean_nearest_sq(const Points& from, const KdTree& to) {
  double sum = 0;
  for (Eigen::Index i = 0; i < from.rows(); ++i) sum += to.nearest(from.row(i).transpose()).dist2;
  return sum / static_cast<double>(from.rows());
}

double mean_closest_dot(const Points& p, const Points& n, const KdTree& tree, const Points& tree_normals) {
  double sum = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const auto j = tree.nearest(p.row(i).transpose()).index;
    sum += n.row(i).dot(tree_normals.row(j));
  }
  return sum / static_cast<double>(p.rows());
}

}  // namespace

double pgp90(const Points& estimated, const Points& truth) {
  require(estimated.rows() == truth.rows(), "pgp90: point counts differ");
  require(estimated.rows() > 0, "pgp90: empty input");
  Eigen::Index good = 0;
  for (Eigen::Index i = 0; i < estimated.rows(); ++i) {
    if (estimated.row(i).dot(truth.row(i)) > 0) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(estimated.rows());
}

double chamfer(const Points& s1, const Points& s2) {
  require(s1.rows() > 0 && s2.rows() > 0, "chamfer: empty point set");
  const KdTree t1(s1), t2(s2);
  return mean_nearest_sq(s1, t2) + mean_nearest_sq(s2, t1);
}

double normal_consistency(const Points& p1, const Points& n1, const Points& p2, const Points& n2) {
  require(p1.rows() > 0 && p2.rows() > 0, "normal_consistency: empty point set");
  require(n1.rows() == p1.rows() && n2.rows() == p2.rows(), "normal_consistency: missing normals");
  const KdTree t1(p1), t2(p2);
  return 0.5 * mean_closest_dot(p1, n1, t2, n2) + 0.5 * mean_closest_dot(p2, n2, t1, n1);
}

OrientedCloud sample_mesh(const TriangleMesh& mesh, int n, std::uint64_t seed) {
  require(n >= 1, "sample_mesh: n must be >= 1");
  require(!mesh.triangles.empty(), "sample_mesh: empty mesh");
  std::vector<double> cumulative(mesh.triangle_count());
  std::vector<Vec3> face_normals(mesh.triangle_count());
  double total = 0;
  for (size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3 a = mesh.vertices.row(tri[0]).transpose();
    const Vec3 cross = (Vec3(mesh.vertices.row(tri[1]).transpose()) - a)
                           .cross(Vec3(mesh.vertices.row(tri[2]).transpose()) - a);
    const double area = 0.5 * cross.norm();
    face_normals[t] = area > 0 ? Vec3(cross.normalized()) : Vec3::Zero();
    total += area;
    cumulative[t] = total;
  }
  require(total > 0, "sample_mesh: zero total area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OrientedCloud out;
  out.positions.resize(n, 3);
  out.normals.resize(n, 3);
  out.flags.assign(static_cast<size_t>(n), NormalFlag::ok);
  for (int i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    auto t = static_cast<size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    t = std::min(t, mesh.triangle_count() - 1);
    double u = unit(rng), v = unit(rng);
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
    const auto& tri = mesh.triangles[t];
    const Vec3 a = mesh.vertices.row(tri[0]).transpose();
    const Vec3 b = mesh.vertices.row(tri[1]).transpose();
    const Vec3 c = mesh.vertices.row(tri[2]).transpose();
    out.positions.row(i) = (a + u * (b - a) + v * (c - a)).transpose();
    out.normals.row(i) = face_normals[t].transpose();
  }
  return out;
}

EvalFrame EvalFrame::of(const Points& truth) {
  require(truth.rows() > 0, "evaluation frame: empty truth");
  const Vec3 lo = truth.colwise().minCoeff().transpose();
  const Vec3 hi = truth.colwise().maxCoeff().transpose();
  EvalFrame f;
  f.center = 0.5 * (lo + hi);
  f.diagonal = (hi - lo).norm();
  require(f.diagonal > 0, "evaluation frame: degenerate truth");
  return f;
}

Points EvalFrame::apply(const Points& p) const {
  return (p.rowwise() - center.transpose()) / diagonal;
}

MetricReport evaluate(const EvalInputs& in) {
  require(in.positions && in.normals && in.truth_positions && in.truth_normals,
          "evaluate: estimated and truth clouds with normals are required");
  MetricReport report;
  report.pgp90 = pgp90(*in.normals, *in.truth_normals);
  report.nc_points = normal_consistency(*in.truth_positions, *in.truth_normals, *in.positions, *in.normals);
  if (in.mesh && in.truth_surface) {
    const EvalFrame frame = EvalFrame::of(in.truth_surface->positions);
    const OrientedCloud pred = sample_mesh(*in.mesh, in.samples, in.seed);
    const Points a = frame.apply(pred.positions);
    const Points b = frame.apply(in.truth_surface->positions);
    report.chamfer = chamfer(a, b);
    report.nc_surface = normal_consistency(b, in.truth_surface->normals, a, pred.normals);
  }
  return report;
}

}  // namespace agr
