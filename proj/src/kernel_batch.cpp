// Vectorized row evaluation. This translation unit is compiled with
// -ffast-math so that the exp/sqrt in the inner loops map onto the SIMD math
// library; all inputs here are finite by construction.

#include "agr/kernel.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace agr::detail {

namespace {

constexpr double kInv8Pi = 0.125 * std::numbers::inv_pi;

}  // namespace

void fill_phi_rows(const Velocity& c, const Eigen::Ref<const Points>& queries,
                   const Eigen::Ref<const Eigen::VectorXd>& widths, const Points& cloud,
                   Eigen::Ref<RowMatrix> out) {
  const Eigen::Index n = cloud.rows();
  const double* px = cloud.col(0).data();
  const double* py = cloud.col(1).data();
  const double* pz = cloud.col(2).data();
  const double cx = c.vector().x(), cy = c.vector().y(), cz = c.vector().z();
  const double cm = c.modulus();

  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const double x = queries(q, 0), y = queries(q, 1), z = queries(q, 2);
    const double w = widths[q];
    double* row = out.row(q).data();
#pragma omp simd
    for (Eigen::Index j = 0; j < n; ++j) {
      const double rx = x - px[j], ry = y - py[j], rz = z - pz[j];
      double d = std::sqrt(rx * rx + ry * ry + rz * rz);
      d = d < w ? w : d;
      const double inv = 1.0 / d;
      const double s = kInv8Pi * inv * std::exp(0.5 * (cx * rx + cy * ry + cz * rz - cm * d));
      const double radial = s * (-2.0 * inv * inv - cm * inv);
      row[3 * j + 0] = radial * rx - s * cx;
      row[3 * j + 1] = radial * ry - s * cy;
      row[3 * j + 2] = radial * rz - s * cz;
    }
  }
}

namespace {

// Sum over a group of G velocities; distance terms are shared.
template <int G>
void accumulate_group(const Velocity* c, const Eigen::Ref<const Points>& queries,
                      const Eigen::Ref<const Eigen::VectorXd>& widths, const Points& cloud,
                      const double* mx, const double* my, const double* mz, double scale,
                      Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = cloud.rows();
  const double* px = cloud.col(0).data();
  const double* py = cloud.col(1).data();
  const double* pz = cloud.col(2).data();
  double cx[G], cy[G], cz[G], cm[G];
  std::vector<double> cmu(static_cast<size_t>(n) * G);
  for (int g = 0; g < G; ++g) {
    cx[g] = c[g].vector().x();
    cy[g] = c[g].vector().y();
    cz[g] = c[g].vector().z();
    cm[g] = c[g].modulus();
    for (Eigen::Index j = 0; j < n; ++j) cmu[g * n + j] = cx[g] * mx[j] + cy[g] * my[j] + cz[g] * mz[j];
  }
  const double* cmu_p = cmu.data();

  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const double x = queries(q, 0), y = queries(q, 1), z = queries(q, 2);
    const double w = widths[q];
    double acc = 0;
#pragma omp simd reduction(+ : acc)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double rx = x - px[j], ry = y - py[j], rz = z - pz[j];
      double d = std::sqrt(rx * rx + ry * ry + rz * rz);
      d = d < w ? w : d;
      const double inv = 1.0 / d;
      const double rmu = rx * mx[j] + ry * my[j] + rz * mz[j];
      double sum = 0;
      for (int g = 0; g < G; ++g) {
        const double e = std::exp(0.5 * (cx[g] * rx + cy[g] * ry + cz[g] * rz - cm[g] * d));
        sum += e * ((-2.0 * inv * inv - cm[g] * inv) * rmu - cmu_p[g * n + j]);
      }
      acc += kInv8Pi * inv * sum;
    }
    out[q] += scale * acc;
  }
}

}  // namespace

void apply_mean_rows(std::span<const Velocity> velocities, const Eigen::Ref<const Points>& queries,
                     const Eigen::Ref<const Eigen::VectorXd>& widths, const Points& cloud,
                     const Eigen::Ref<const Eigen::VectorXd>& mu, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = cloud.rows();
  std::vector<double> mx(static_cast<size_t>(n)), my(mx.size()), mz(mx.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    mx[j] = mu[3 * j];
    my[j] = mu[3 * j + 1];
    mz[j] = mu[3 * j + 2];
  }
  out.setZero();
  const double inv_m = 1.0 / static_cast<double>(velocities.size());
  size_t v = 0;
  while (v < velocities.size()) {
    const size_t left = velocities.size() - v;
    const Velocity* c = velocities.data() + v;
    if (left >= 3) {
      accumulate_group<3>(c, queries, widths, cloud, mx.data(), my.data(), mz.data(), inv_m, out);
      v += 3;
    } else if (left == 2) {
      accumulate_group<2>(c, queries, widths, cloud, mx.data(), my.data(), mz.data(), inv_m, out);
      v += 2;
    } else {
      accumulate_group<1>(c, queries, widths, cloud, mx.data(), my.data(), mz.data(), inv_m, out);
      v += 1;
    }
  }
}

}  // namespace agr::detail
