#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "rjpo/adapt.hpp"
#include "rjpo/linop.hpp"
#include "rjpo/rng.hpp"
#include "rjpo/sampler.hpp"

namespace rjpo {

struct SuperResConfig {
  ImageDims hi_res{64, 64};
  int frames = 2;
  int factor = 2;
  /// Full width at half maximum of the Laplace-shaped PSF, in pixels.
  double fwhm = 4.0;
  /// Synthesis only; +inf disables the noise.
  double snr_db = 20.0;
};

/// Separable Laplace PSF exp(-(|i| + |j|) 2 ln2 / fwhm), truncated once the
/// discarded mass falls below 1e-4 (or at the image size), normalized to sum 1.
/// The returned kernel has odd sides with its peak at the centre.
Eigen::MatrixXd laplace_psf(double fwhm, ImageDims max_dims);

/// 3x3 five-point Laplacian, origin at the centre.
Eigen::MatrixXd laplacian_stencil();

/// Decimation offset for frame f: (f mod factor, floor(f / factor) mod factor).
PixelOffset frame_offset(int frame, int factor);

/// Observation model y = H x + n with H = [P_0; ...; P_{F-1}] B (blur then
/// per-frame decimation) and the Laplacian prior operator D. Matrix-free.
class SuperResModel {
 public:
  explicit SuperResModel(const SuperResConfig& config);

  const SuperResConfig& config() const { return config_; }
  ImageDims hi_dims() const { return config_.hi_res; }
  ImageDims low_dims() const;
  Index n() const { return config_.hi_res.size(); }
  Index m() const { return forward_->out_dim(); }

  const OperatorPtr<double>& forward() const { return forward_; }
  const OperatorPtr<double>& blur() const { return blur_; }
  const OperatorPtr<double>& laplacian() const { return laplacian_; }
  const Eigen::MatrixXd& psf_kernel() const { return psf_; }
  const Eigen::MatrixXd& laplacian_kernel() const { return stencil_; }

  /// Posterior conditional of x: Q = gy H'H + gx D'D, Q mu = gy H'y.
  GaussianTarget<double> conditional(const Eigen::VectorXd& y, double gamma_y,
                                     double gamma_x) const;

 private:
  SuperResConfig config_;
  Eigen::MatrixXd psf_;
  Eigen::MatrixXd stencil_;
  OperatorPtr<double> blur_;
  OperatorPtr<double> laplacian_;
  OperatorPtr<double> forward_;
};

/// Piecewise-constant test image with values in roughly [20, 270].
Eigen::VectorXd phantom(ImageDims dims);

struct Observations {
  Eigen::VectorXd y;
  Eigen::VectorXd noise;
  double noise_std = 0.0;
};

/// y = H x + n with white noise scaled so that 10 log10(||Hx||^2 / E||n||^2) = snr_db.
Observations synthesize(const SuperResModel& model, const Eigen::VectorXd& truth,
                        RngStream& stream);

/// 10 log10(||Hx||^2 / ||n||^2) for the stored noise realization.
double empirical_snr_db(const SuperResModel& model, const Eigen::VectorXd& truth,
                        const Observations& obs);

/// Exact draw of x: dense Cholesky when N <= dense_limit, CG to `tolerance` otherwise.
struct ExactSampler {
  double tolerance = 1e-12;
  Index dense_limit = 1024;
};

struct TpoSampler {
  double epsilon = 1e-4;
  int max_iters = 0;
};

/// RJPO with the threshold tuned towards a target acceptance probability.
struct AdaptiveRjpoSampler {
  double alpha_t = 0.99;
  double initial_epsilon = 1e-4;
  double k0 = 1.0;
  double kappa = 0.5;
  int max_iters = 0;
};

using XSampler = std::variant<ExactSampler, TpoSampler, AdaptiveRjpoSampler>;

struct GibbsState {
  Eigen::VectorXd x;
  double gamma_y = 1.0;
  double gamma_x = 1.0;
  /// Owned by the adaptive sampler; empty for the other choices.
  std::optional<AdaptController> controller;
  double epsilon = 0.0;
};

/// gamma_y ~ G(1 + M/2, 2 / ||y - Hx||^2) (shape, scale).
double sample_gamma_y(const GibbsState& state, const SuperResModel& model,
                      const Eigen::VectorXd& y, RngStream& stream);

/// gamma_x ~ G(1 + (N-1)/2, 2 / ||Dx||^2).
double sample_gamma_x(const GibbsState& state, const SuperResModel& model, RngStream& stream);

/// Draws x from its Gaussian conditional with the chosen kernel. Updates the
/// adaptive controller (created on first use) but not state.x.
KernelOutcome<double> sample_x(GibbsState& state, const SuperResModel& model,
                               const Eigen::VectorXd& y, RngStream& stream,
                               const XSampler& sampler);

/// Nearest-neighbour upsampling of the first observed frame.
Eigen::VectorXd initial_image(const SuperResModel& model, const Eigen::VectorXd& y);

struct GibbsOptions {
  long iterations = 1000;
  long burn_in = 100;
  /// Pixel whose chain is kept in full; defaults to the image centre.
  std::optional<Index> tracked_pixel;
};

struct GibbsResult {
  std::vector<double> gamma_y;
  std::vector<double> gamma_x;
  std::vector<double> alpha;
  std::vector<int> cg_iterations;
  std::vector<double> epsilon;
  std::vector<char> accepted;
  std::vector<double> pixel;
  Index tracked_pixel = 0;

  double gamma_y_mean = 0, gamma_y_std = 0;
  double gamma_x_mean = 0, gamma_x_std = 0;
  double pixel_mean = 0, pixel_std = 0;
  Eigen::VectorXd posterior_mean;
  Eigen::VectorXd posterior_std;
  int peak_cg_iterations = 0;
  double mean_acceptance = 0;
};

/// Cycles gamma_y, gamma_x, x for `iterations` sweeps; summaries use the sweeps
/// after `burn_in`. Sweep k draws from stream.split(k).
GibbsResult run_gibbs(const SuperResModel& model, const Eigen::VectorXd& y,
                      const GibbsOptions& options, const XSampler& sampler, RngStream& stream);

}  // namespace rjpo
