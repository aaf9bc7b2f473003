#include "nlfb/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlfb {

LineFit fit_line(const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = x.size();
  if (n != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  // centre x for conditioning
  const double xm = x.mean();
  Eigen::MatrixXd A(n, 2);
  A.col(0).setOnes();
  A.col(1) = x.array() - xm;
  const double sxx = A.col(1).squaredNorm();
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values are all equal");
  const Eigen::Vector2d beta = A.colPivHouseholderQr().solve(y);

  LineFit f;
  f.n = n;
  f.slope = beta[1];
  f.intercept = beta[0] - beta[1] * xm;
  const Eigen::VectorXd res = y - A * beta;
  const double ss_res = res.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (ss_tot <= 1e-28 * scale * scale * n)
    f.r2 = 1.0;
  else
    f.r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  f.slope_stderr = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
  return f;
}

}  // namespace nlfb
