#include "rjpo/fft2.hpp"

#include <mutex>
#include <vector>

#include <fftw3.h>

#include "rjpo/errors.hpp"

namespace rjpo {
namespace {

// The FFTW planner is not re-entrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft2::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft2::RealFft2(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), plans_(std::make_unique<Plans>()) {
  if (rows <= 0 || cols <= 0) throw ConfigError("FFT dimensions must be positive");
  std::vector<double> real(static_cast<std::size_t>(size()));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(spectrum_size()));
  auto* cspec = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols),
                                         real.data(), cspec, flags);
  plans_->inverse = fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols), cspec,
                                         real.data(), flags);
  if (plans_->forward == nullptr || plans_->inverse == nullptr)
    throw ConfigError("failed to create FFT plans");
}

RealFft2::~RealFft2() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
}

void RealFft2::forward(const double* image, std::complex<double>* spectrum) const {
  // Out-of-place r2c leaves the input untouched.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(image),
                       reinterpret_cast<fftw_complex*>(spectrum));
}

void RealFft2::inverse(std::complex<double>* spectrum, double* image) const {
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(spectrum), image);
}

}  // namespace rjpo
