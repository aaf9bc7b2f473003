#include "nlfb/convolution.hpp"

#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace nlfb {

namespace {

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

struct LatticeConvolution::FftState {
  FftState() { fft.SetFlag(Eigen::FFT<double>::HalfSpectrum); }
  Eigen::FFT<double> fft;
  std::vector<double> buf;
  std::vector<std::complex<double>> spec;
};

LatticeConvolution::~LatticeConvolution() = default;

LatticeConvolution::LatticeConvolution(Kernel kernel, double dx, Eigen::Index fft_threshold)
    : kernel_(kernel), dx_(dx), fft_threshold_(fft_threshold), fft_(std::make_unique<FftState>()) {
  if (!(dx > 0.0)) throw std::invalid_argument("LatticeConvolution: dx must be positive");
}

void LatticeConvolution::ensure(Eigen::Index n) const {
  const Eigen::Index have = weights_.size();
  if (have >= n) return;
  const Eigen::Index want = std::max(n, 2 * have);
  weights_.conservativeResize(want);
  extension_.conservativeResize(want);
  for (Eigen::Index k = have; k < want; ++k) {
    weights_[k] = hat_weight(kernel_, static_cast<double>(k) * dx_, dx_);
    extension_[k] = extension_weight(kernel_, static_cast<double>(k) * dx_, dx_);
  }
}

const Eigen::VectorXd& LatticeConvolution::weights(Eigen::Index n) const {
  ensure(n);
  return weights_;
}

double LatticeConvolution::extension(Eigen::Index j) const {
  ensure(j + 1);
  return extension_[j];
}

const std::vector<std::complex<double>>& LatticeConvolution::spectrum(Eigen::Index size) const {
  auto it = spectra_.find(size);
  if (it != spectra_.end()) return it->second;
  // circulant embedding of the symmetric Toeplitz matrix
  const Eigen::Index half = size / 2;
  ensure(half + 1);
  std::vector<double> col(size, 0.0);
  for (Eigen::Index k = 0; k <= half; ++k) col[k] = weights_[k];
  for (Eigen::Index k = 1; k < half; ++k) col[size - k] = weights_[k];
  std::vector<std::complex<double>> spec;
  fft_->fft.fwd(spec, col);
  return spectra_.emplace(size, std::move(spec)).first->second;
}

Eigen::VectorXd LatticeConvolution::apply(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          Path path) const {
  const Eigen::Index n = x.size();
  Eigen::VectorXd y(n);
  if (n == 0) return y;
  if (path == Path::Auto) path = n > fft_threshold_ ? Path::Fft : Path::Direct;

  if (path == Path::Direct) {
    ensure(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) s += weights_[std::abs(j - k)] * x[k];
      y[j] = s;
    }
    return y;
  }

  const Eigen::Index size = next_pow2(2 * n);
  const auto& spec = spectrum(size);
  auto& buf = fft_->buf;
  auto& xs = fft_->spec;
  buf.assign(size, 0.0);
  for (Eigen::Index k = 0; k < n; ++k) buf[k] = x[k];
  fft_->fft.fwd(xs, buf);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= spec[k];
  fft_->fft.inv(buf, xs);
  for (Eigen::Index j = 0; j < n; ++j) y[j] = buf[j];
  return y;
}

}  // namespace nlfb
