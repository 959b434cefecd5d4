#pragma once

#include <complex>
#include <memory>

#include <Eigen/Core>

namespace rjpo {

/// Two-dimensional real-to-complex FFT on row-major images.
///
/// The spectrum holds rows * (cols / 2 + 1) coefficients (Hermitian half).
/// Both directions are unscaled; callers divide by rows * cols after the inverse.
/// Plans are created once; `forward`/`inverse` are safe to call concurrently.
class RealFft2 {
 public:
  RealFft2(Eigen::Index rows, Eigen::Index cols);
  ~RealFft2();
  RealFft2(const RealFft2&) = delete;
  RealFft2& operator=(const RealFft2&) = delete;

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index size() const { return rows_ * cols_; }
  Eigen::Index spectrum_size() const { return rows_ * (cols_ / 2 + 1); }

  void forward(const double* image, std::complex<double>* spectrum) const;
  /// Overwrites `spectrum`.
  void inverse(std::complex<double>* spectrum, double* image) const;

 private:
  struct Plans;
  Eigen::Index rows_;
  Eigen::Index cols_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace rjpo
