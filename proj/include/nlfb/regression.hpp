#pragma once

#include <Eigen/Dense>

namespace nlfb {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;              // 1 when y is fitted exactly, including constant y
  double slope_stderr = 0.0;
  Eigen::Index n = 0;
};

/// Least-squares y ~ intercept + slope x. Needs at least two distinct x.
LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace nlfb
