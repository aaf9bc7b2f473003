#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "nlfb/kernels.hpp"

namespace nlfb {

/// Symmetric Toeplitz convolution on a uniform lattice with exact hat
/// weights w_n = hat_weight(n dx, dx):
///   y_j = sum_k w_|j-k| x_k,   0 <= j, k < n.
/// Applied to the nodal values of a piecewise-linear function this is the
/// exact integral of J against it on the lattice span.
class LatticeConvolution {
public:
  enum class Path { Auto, Direct, Fft };

  LatticeConvolution(Kernel kernel, double dx, Eigen::Index fft_threshold = 128);

  const Kernel& kernel() const { return kernel_; }
  double dx() const { return dx_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x, Path path = Path::Auto) const;

  /// Weight of a constant extension beyond a lattice end, seen from the node
  /// j cells inside: sum_{n > j} w_n = int_{j dx}^{(j+1) dx} T / dx.
  double extension(Eigen::Index j) const;

  /// w_0 .. w_{n-1}.
  const Eigen::VectorXd& weights(Eigen::Index n) const;

  LatticeConvolution(const LatticeConvolution&) = delete;
  LatticeConvolution& operator=(const LatticeConvolution&) = delete;
  ~LatticeConvolution();

private:
  struct FftState;
  void ensure(Eigen::Index n) const;
  const std::vector<std::complex<double>>& spectrum(Eigen::Index size) const;

  Kernel kernel_;
  double dx_;
  Eigen::Index fft_threshold_;
  mutable Eigen::VectorXd weights_;
  mutable Eigen::VectorXd extension_;
  mutable std::map<Eigen::Index, std::vector<std::complex<double>>> spectra_;
  std::unique_ptr<FftState> fft_;
};

}  // namespace nlfb
