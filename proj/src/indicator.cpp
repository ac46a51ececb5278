#include "agr/error.hpp"
#include "agr/field.hpp"

#include <algorithm>

namespace agr {

IndicatorEvaluator::IndicatorEvaluator(Eigen::VectorXd mu, const VelocitySet& velocities, const PointCloud& cloud,
                                       const WidthParams& width_params, int batch_size)
    : mu_(std::move(mu)),
      velocities_(velocities.begin(), velocities.end()),
      cloud_(cloud),
      widths_(cloud, width_params),
      batch_(batch_size) {
  require(mu_.size() == 3 * cloud.size(), "indicator: mu must have length 3N");
  require(batch_size > 0, "indicator: batch size must be positive");
}

Eigen::VectorXd IndicatorEvaluator::operator()(const Points& queries) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(queries.rows());
  for (Eigen::Index start = 0; start < queries.rows(); start += batch_) {
    const Eigen::Index n = std::min(batch_, queries.rows() - start);
    const Points q = queries.middleRows(start, n);
    const WidthField w = widths_(q);
    detail::apply_mean_rows(velocities_, q, w, cloud_.positions(), mu_, out.segment(start, n));
  }
  return out;
}

double IndicatorEvaluator::isovalue() const { return (*this)(cloud_.positions()).mean(); }

IndicatorField evaluate_indicator(const Eigen::VectorXd& mu, const VelocitySet& velocities,
                                  const QueryGrid& grid, const PointCloud& cloud,
                                  const WidthParams& width_params, int batch_size) {
  const IndicatorEvaluator eval(mu, velocities, cloud, width_params, batch_size);
  return {eval(grid.corners), eval.isovalue()};
}

double compute_isovalue(const Eigen::VectorXd& mu, const VelocitySet& velocities, const PointCloud& cloud,
                        const WidthParams& width_params, int batch_size) {
  return IndicatorEvaluator(mu, velocities, cloud, width_params, batch_size).isovalue();
}

}  // namespace agr
