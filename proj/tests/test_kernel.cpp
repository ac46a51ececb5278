#include "agr/error.hpp"
#include "agr/kernel.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace agr;
using agr::testing::random_in_ball;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 central_gradient(const Velocity& c, const Vec3& x, double h) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = h;
    g[a] = (fundamental_solution(c, x + e) - fundamental_solution(c, x - e)) / (2 * h);
  }
  return g;
}

// Block j of the truncated row, evaluated independently in long double.
std::array<long double, 3> row_block_ld(const Vec3& cv, const Vec3& x, const Vec3& p, double w) {
  using ld = long double;
  const ld r[3] = {ld(x[0]) - p[0], ld(x[1]) - p[1], ld(x[2]) - p[2]};
  const ld c[3] = {cv[0], cv[1], cv[2]};
  const ld rn = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  const ld cm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  const ld d = std::max<ld>(rn, w);
  const ld s = std::exp(0.5L * (c[0] * r[0] + c[1] * r[1] + c[2] * r[2] - cm * d)) / (8 * std::numbers::pi_v<ld> * d);
  std::array<ld, 3> out;
  for (int a = 0; a < 3; ++a) out[a] = s * (-2 * r[a] / (d * d) - c[a] - cm * r[a] / d);
  return out;
}

}  // namespace

TEST_CASE("fundamental solution closed-form values") {
  CHECK(fundamental_solution(Velocity(0, 0, 0), Vec3(0, 0, 2)) == doctest::Approx(1 / (8 * kPi)).epsilon(1e-15));
  CHECK(fundamental_solution(Velocity(3, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(1 / (4 * kPi)).epsilon(1e-15));
  // exp(-1/2)/(4π), evaluated at 30 digits.
  CHECK(fundamental_solution(Velocity(1, 0, 0), Vec3(0, 1, 0)) ==
        doctest::Approx(0.0482661763150269537709862990049).epsilon(1e-14));
  CHECK_THROWS_AS(fundamental_solution(Velocity(1, 0, 0), Vec3::Zero()), Error);
}

TEST_CASE("gradient and Gauss kernel closed-form values") {
  const Vec3 g0 = fundamental_gradient(Velocity(0, 0, 0), Vec3(0, 0, 1));
  CHECK(g0.x() == 0.0);
  CHECK(g0.y() == 0.0);
  CHECK(g0.z() == doctest::Approx(-1 / (4 * kPi)).epsilon(1e-15));

  const Vec3 ga = fundamental_gradient(Velocity(2, 0, 0), Vec3(1, 0, 0));
  CHECK(ga.y() == 0.0);
  CHECK(ga.z() == 0.0);

  const Vec3 k = gauss_kernel(Velocity(1, 0, 0), Vec3(0, 1, 0));
  CHECK(k.x() == doctest::Approx(-0.0241330881575134768854931495025).epsilon(1e-14));
  CHECK(k.y() == doctest::Approx(-0.0723992644725404306564794485074).epsilon(1e-14));
  CHECK(k.z() == 0.0);

  // c = (2,1,0), x = (0.3,-0.2,0.5), 30-digit references.
  const Velocity c(2, 1, 0);
  const Vec3 x(0.3, -0.2, 0.5);
  CHECK(fundamental_solution(c, x) == doctest::Approx(0.0791480862720789073381131789833).epsilon(1e-14));
  const Vec3 g = fundamental_gradient(c, x);
  CHECK(g.x() == doctest::Approx(-0.0264022876193904330109197251268566).epsilon(1e-13));
  CHECK(g.y() == doctest::Approx(0.109940959063685680568411858898414).epsilon(1e-13));
  CHECK(g.z() == doctest::Approx(-0.175917289819115567248388173516897).epsilon(1e-13));
  const Vec3 kk = gauss_kernel(c, x);
  CHECK(kk.x() == doctest::Approx(-0.184698460163548247687146083093439).epsilon(1e-13));
  CHECK(kk.y() == doctest::Approx(0.0307928727916067732302986799151091).epsilon(1e-13));
  CHECK(kk.z() == doctest::Approx(-0.175917289819115567248388173516897).epsilon(1e-13));
}

TEST_CASE("isotropic kernel degenerates exactly") {
  std::mt19937_64 rng(3);
  const Velocity zero(0, 0, 0);
  for (int t = 0; t < 200; ++t) {
    const Vec3 x = random_in_ball(rng, 1.0);
    if (x.norm() < 1e-3) continue;
    const double r = x.norm();
    CHECK(fundamental_solution(zero, x) == doctest::Approx(1 / (4 * kPi * r)).epsilon(1e-15));
    const Vec3 iso = -x / (4 * kPi * r * r * r);
    CHECK((fundamental_gradient(zero, x) - iso).norm() <= 1e-15 * iso.norm());
    CHECK(gauss_kernel(zero, x) == fundamental_gradient(zero, x));
  }
}

TEST_CASE("gradient matches central differences on 1000 samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const Velocity c(random_in_ball(rng, 8.0));
    const Vec3 fd = central_gradient(c, x, 1e-5);
    const Vec3 g = fundamental_gradient(c, x);
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("Gauss kernel equals gradient minus c times Φ") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 1000; ++t) {
    const Vec3 x = random_in_ball(rng, 1.0);
    const Velocity c(random_in_ball(rng, 8.0));
    const Vec3 expect = fundamental_gradient(c, x) - c.vector() * fundamental_solution(c, x);
    CHECK((gauss_kernel(c, x) - expect).norm() <= 1e-12 * expect.norm());
  }
}

TEST_CASE("exponent is nonpositive so Φ_c <= Φ_0") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const Vec3 x = random_in_ball(rng, 1.0);
    const Velocity c(random_in_ball(rng, 8.0));
    CHECK(fundamental_solution(c, x) <= fundamental_solution(Velocity(0, 0, 0), x) * (1 + 1e-15));
  }
}

TEST_CASE("PDE residual") {
  const Velocity zero(0, 0, 0);
  CHECK(std::abs(pde_residual(zero, Vec3(0, 0, 1), 1e-3)) < 1e-4);

  const Velocity c(2, 1, 0);
  const Vec3 x(0.5, 0.5, 0.5);
  const double scale = fundamental_solution(c, x) / x.squaredNorm();
  const double r1 = std::abs(pde_residual(c, x, 1e-3));
  CHECK(r1 < 1e-3 * scale);
  const double r2 = std::abs(pde_residual(c, x, 5e-4));
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(pde_residual(c, Vec3(0.005, 0, 0), 1e-3), Error);
}

TEST_CASE("widths on a regular grid equal the spacing") {
  const double s = 0.1;
  Points grid(125, 3);
  int k = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int l = 0; l < 5; ++l) grid.row(k++) = Vec3(i * s, j * s, l * s).transpose();
  const PointCloud cloud = PointCloud::from_normalized(grid);
  WidthParams p;
  p.k_w = 6;
  Points q(1, 3);
  q.row(0) = Vec3(0.2, 0.2, 0.2).transpose();
  CHECK(compute_widths(q, cloud, p)[0] == doctest::Approx(s).epsilon(1e-12));

  // Everything within w_min: the clamp decides.
  p.w_min = 10.0;
  CHECK(compute_widths(q, cloud, p)[0] == 10.0);

  p.w_min = 0.0015;
  p.w_max = 0.05;
  CHECK(compute_widths(q, cloud, p)[0] == 0.05);
}

TEST_CASE("indexed widths equal a brute-force scan") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points pts(400, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) = Vec3(u(rng), u(rng), u(rng)).transpose();
  const PointCloud cloud = PointCloud::from_normalized(pts);
  Points q(100, 3);
  for (Eigen::Index i = 0; i < 50; ++i) q.row(i) = Vec3(u(rng), u(rng), u(rng)).transpose();
  for (Eigen::Index i = 50; i < 100; ++i) q.row(i) = pts.row(i);  // members exclude themselves
  WidthParams p;
  p.w_min = 1e-6;
  const WidthField w = compute_widths(q, cloud, p);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    std::vector<double> d2;
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
      const double d = (pts.row(j) - q.row(i)).squaredNorm();
      if (d > 0) d2.push_back(d);
    }
    std::sort(d2.begin(), d2.end());
    double sum = 0;
    for (int k = 0; k < p.k_w; ++k) sum += d2[static_cast<size_t>(k)];
    CHECK(w[i] == std::max(p.w_min, std::sqrt(sum / p.k_w)));
  }
}

TEST_CASE("phi_row coincident point and isotropic far field") {
  Points pts(3, 3);
  pts << 0.2, 0.3, 0.4, 0.7, 0.6, 0.5, 0.9, 0.1, 0.2;
  const PointCloud cloud = PointCloud::from_normalized(pts);
  const Velocity c(1.5, -2.0, 0.5);
  const double w = 0.01;
  const Eigen::VectorXd row = phi_row(c, cloud.point(0), cloud, w);
  REQUIRE(row.allFinite());
  const Vec3 expect = std::exp(-0.5 * c.modulus() * w) / (8 * kPi * w) * -c.vector();
  CHECK((row.head<3>() - expect).norm() <= 1e-14 * expect.norm());

  const Velocity zero(0, 0, 0);
  const Vec3 x(0.25, 0.9, 0.1);
  const Eigen::VectorXd iso = phi_row(zero, x, cloud, 1e-4);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const Vec3 r = x - cloud.point(j);
    const Vec3 pgr = -r / (4 * kPi * std::pow(r.norm(), 3));
    CHECK((iso.segment<3>(3 * j) - pgr).norm() <= 1e-13 * pgr.norm());
  }
}

TEST_CASE("phi_row matches an extended-precision evaluation") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points pts(50, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) = Vec3(u(rng), u(rng), u(rng)).transpose();
  const PointCloud cloud = PointCloud::from_normalized(pts);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const Velocity c(random_in_ball(rng, 8.0));
    const Vec3 x(u(rng), u(rng), u(rng));
    const double w = 0.002 + 0.05 * u(rng);
    const Eigen::VectorXd row = phi_row(c, x, cloud, w);
    for (Eigen::Index j = 0; j < cloud.size(); ++j) {
      const auto ref = row_block_ld(c.vector(), x, cloud.point(j), w);
      const long double norm = std::sqrt(ref[0] * ref[0] + ref[1] * ref[1] + ref[2] * ref[2]);
      for (int a = 0; a < 3; ++a) {
        worst = std::max(worst, static_cast<double>(std::abs(row[3 * j + a] - ref[a]) / norm));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("phi_row is continuous across the truncation radius") {
  Points pts(1, 3);
  pts << 0.5, 0.5, 0.5;
  const PointCloud cloud = PointCloud::from_normalized(pts);
  const Velocity c(1, 2, -1);
  const Vec3 dir = Vec3(1, 1, 0.5).normalized();
  const double w = 0.01;
  const Eigen::VectorXd lo = phi_row(c, cloud.point(0) + w * (1 - 1e-9) * dir, cloud, w);
  const Eigen::VectorXd hi = phi_row(c, cloud.point(0) + w * (1 + 1e-9) * dir, cloud, w);
  CHECK((lo - hi).norm() < 1e-6 * hi.norm());
}

TEST_CASE("velocity caches its modulus") {
  const Velocity c(3, 4, 12);
  CHECK(c.modulus() == doctest::Approx(13.0).epsilon(1e-12));
}
