#include "rjpo/superres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rjpo {

namespace {

// Smallest half-width whose square window keeps all but `tol` of the mass of the
// separable kernel q^(|i|+|j|).
Index psf_half_width(double q, double tol) {
  const double total = (1.0 + q) / (1.0 - q);
  double inside = 1.0;
  double qh = 1.0;
  for (Index h = 0;; ++h) {
    const double frac = inside / total;
    if (1.0 - frac * frac < tol) return h;
    qh *= q;
    inside += 2.0 * qh;
    if (h > 100000) return h;
  }
}

double sum_sq(const Eigen::VectorXd& v) { return v.squaredNorm(); }

}  // namespace

Eigen::MatrixXd laplace_psf(double fwhm, ImageDims max_dims) {
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw ConfigError("psf: FWHM must be positive");
  if (max_dims.rows < 1 || max_dims.cols < 1) throw ConfigError("psf: empty image");
  const double a = 2.0 * std::log(2.0) / fwhm;
  const double q = std::exp(-a);
  const Index h = psf_half_width(q, 1e-4);
  const Index hr = std::min(h, (max_dims.rows - 1) / 2);
  const Index hc = std::min(h, (max_dims.cols - 1) / 2);
  Eigen::MatrixXd k(2 * hr + 1, 2 * hc + 1);
  for (Index i = -hr; i <= hr; ++i)
    for (Index j = -hc; j <= hc; ++j)
      k(i + hr, j + hc) = std::exp(-a * static_cast<double>(std::abs(i) + std::abs(j)));
  return k / k.sum();
}

Eigen::MatrixXd laplacian_stencil() {
  Eigen::MatrixXd k(3, 3);
  k << 0, -1, 0, -1, 4, -1, 0, -1, 0;
  return k;
}

PixelOffset frame_offset(int frame, int factor) {
  if (frame < 0 || factor < 1) throw ArgumentError("frame_offset: invalid frame or factor");
  return {frame % factor, (frame / factor) % factor};
}

SuperResModel::SuperResModel(const SuperResConfig& config) : config_(config) {
  const ImageDims d = config.hi_res;
  if (d.rows < 3 || d.cols < 3) throw ConfigError("superres: image must be at least 3x3");
  if (config.frames < 1) throw ConfigError("superres: need at least one frame");
  if (config.factor < 1) throw ConfigError("superres: decimation factor must be positive");
  if (d.rows % config.factor != 0 || d.cols % config.factor != 0)
    throw ConfigError("superres: decimation factor must divide the image dimensions");

  psf_ = laplace_psf(config.fwhm, d);
  stencil_ = laplacian_stencil();
  blur_ = circulant_operator<double>(psf_, d, {psf_.rows() / 2, psf_.cols() / 2});
  laplacian_ = circulant_operator<double>(stencil_, d, {1, 1});

  std::vector<WeightedOperator<double>> frames;
  for (int f = 0; f < config.frames; ++f)
    frames.push_back({1.0, decimation_operator<double>(d, config.factor,
                                                       frame_offset(f, config.factor))});
  forward_ = compose<double>(stacked_factor<double>(std::move(frames)), blur_);
}

ImageDims SuperResModel::low_dims() const {
  return {config_.hi_res.rows / config_.factor, config_.hi_res.cols / config_.factor};
}

GaussianTarget<double> SuperResModel::conditional(const Eigen::VectorXd& y, double gamma_y,
                                                  double gamma_x) const {
  if (y.size() != m()) throw ArgumentError("superres: observation size mismatch");
  if (!(gamma_y > 0.0) || !(gamma_x > 0.0) || !std::isfinite(gamma_y) || !std::isfinite(gamma_x))
    throw NumericalError("superres: precisions must be positive and finite");
  auto factor = stacked_factor<double>({{gamma_y, forward_}, {gamma_x, laplacian_}});
  Eigen::VectorXd potential = gamma_y * forward_->apply_transpose(y);
  return GaussianTarget<double>(FactoredPrecision<double>(std::move(factor)), std::move(potential));
}

Eigen::VectorXd phantom(ImageDims dims) {
  if (dims.rows < 1 || dims.cols < 1) throw ConfigError("phantom: empty image");
  Eigen::VectorXd img(dims.size());
  auto in_ellipse = [](double u, double v, double cu, double cv, double ru, double rv) {
    const double a = (u - cu) / ru, b = (v - cv) / rv;
    return a * a + b * b <= 1.0;
  };
  for (Index r = 0; r < dims.rows; ++r) {
    for (Index c = 0; c < dims.cols; ++c) {
      const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(dims.rows);
      const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(dims.cols);
      double val = 20.0 + 20.0 * u;
      if (in_ellipse(u, v, 0.5, 0.5, 0.38, 0.3)) val = 100.0;
      if (in_ellipse(u, v, 0.4, 0.45, 0.12, 0.18)) val = 180.0;
      if (u >= 0.6 && u <= 0.78 && v >= 0.25 && v <= 0.4) val = 220.0;
      if (in_ellipse(u, v, 0.65, 0.68, 0.08, 0.08)) val = 60.0;
      if (in_ellipse(u, v, 0.3, 0.72, 0.045, 0.045)) val = 250.0;
      img[r * dims.cols + c] = val;
    }
  }
  return img;
}

Observations synthesize(const SuperResModel& model, const Eigen::VectorXd& truth,
                        RngStream& stream) {
  if (truth.size() != model.n()) throw ArgumentError("synthesize: image size mismatch");
  const Eigen::VectorXd clean = model.forward()->apply(truth);
  Observations obs;
  const double snr = model.config().snr_db;
  if (std::isinf(snr) && snr > 0) {
    obs.noise = Eigen::VectorXd::Zero(clean.size());
  } else {
    if (!std::isfinite(snr)) throw ConfigError("synthesize: SNR must be finite or +inf");
    const double var = sum_sq(clean) / (static_cast<double>(clean.size()) * std::pow(10.0, snr / 10.0));
    obs.noise_std = std::sqrt(var);
    obs.noise = obs.noise_std * stream.standard_normal_vector<double>(clean.size());
  }
  obs.y = clean + obs.noise;
  return obs;
}

double empirical_snr_db(const SuperResModel& model, const Eigen::VectorXd& truth,
                        const Observations& obs) {
  const double noise = sum_sq(obs.noise);
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sum_sq(model.forward()->apply(truth)) / noise);
}

double sample_gamma_y(const GibbsState& state, const SuperResModel& model,
                      const Eigen::VectorXd& y, RngStream& stream) {
  const double rss = (y - model.forward()->apply(state.x)).squaredNorm();
  if (!(rss > 0.0) || !std::isfinite(rss))
    throw NumericalError("gamma_y: data residual norm is zero or not finite");
  return stream.gamma(1.0 + 0.5 * static_cast<double>(model.m()), 2.0 / rss);
}

double sample_gamma_x(const GibbsState& state, const SuperResModel& model, RngStream& stream) {
  const double roughness = model.laplacian()->apply(state.x).squaredNorm();
  if (!(roughness > 0.0) || !std::isfinite(roughness))
    throw NumericalError("gamma_x: image roughness is zero or not finite");
  return stream.gamma(1.0 + 0.5 * static_cast<double>(model.n() - 1), 2.0 / roughness);
}

KernelOutcome<double> sample_x(GibbsState& state, const SuperResModel& model,
                               const Eigen::VectorXd& y, RngStream& stream,
                               const XSampler& sampler) {
  const auto target = model.conditional(y, state.gamma_y, state.gamma_x);
  if (state.x.size() != model.n()) throw ArgumentError("sample_x: state image size mismatch");

  if (const auto* e = std::get_if<ExactSampler>(&sampler)) {
    if (model.n() <= e->dense_limit) {
      const Eigen::LLT<Eigen::MatrixXd> llt(target.precision.to_dense());
      if (llt.info() != Eigen::Success) throw NumericalError("sample_x: Cholesky failed");
      KernelOutcome<double> out;
      const Eigen::VectorXd eta = perturb(target, stream);
      out.proposal = llt.solve(eta);
      out.next_sample = out.proposal;
      return out;
    }
    return epo_step(target, stream, EpoKernel{e->tolerance, 0});
  }
  if (const auto* t = std::get_if<TpoSampler>(&sampler)) {
    state.epsilon = t->epsilon;
    return tpo_step<double>(target, state.x, stream, t->epsilon, t->max_iters);
  }
  const auto& a = std::get<AdaptiveRjpoSampler>(sampler);
  if (!state.controller)
    state.controller.emplace(a.initial_epsilon, a.k0, a.kappa, TargetRate{a.alpha_t});
  state.epsilon = state.controller->epsilon();
  auto out = rjpo_step<double>(target, state.x, stream, state.epsilon, a.max_iters);
  state.controller->update_target_rate(out.acceptance_probability);
  return out;
}

Eigen::VectorXd initial_image(const SuperResModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.m()) throw ArgumentError("initial_image: observation size mismatch");
  const ImageDims hi = model.hi_dims();
  const ImageDims lo = model.low_dims();
  const Index d = model.config().factor;
  Eigen::VectorXd x(hi.size());
  for (Index r = 0; r < hi.rows; ++r)
    for (Index c = 0; c < hi.cols; ++c) x[r * hi.cols + c] = y[(r / d) * lo.cols + c / d];
  return x;
}

GibbsResult run_gibbs(const SuperResModel& model, const Eigen::VectorXd& y,
                      const GibbsOptions& options, const XSampler& sampler, RngStream& stream) {
  if (options.iterations < 2) throw ArgumentError("run_gibbs: need at least two iterations");
  if (options.burn_in < 0 || options.burn_in >= options.iterations - 1)
    throw ArgumentError("run_gibbs: burn-in must leave at least two samples");

  GibbsResult res;
  res.tracked_pixel = options.tracked_pixel.value_or(
      (model.hi_dims().rows / 2) * model.hi_dims().cols + model.hi_dims().cols / 2);
  if (res.tracked_pixel < 0 || res.tracked_pixel >= model.n())
    throw ArgumentError("run_gibbs: tracked pixel outside image");

  const auto iters = static_cast<std::size_t>(options.iterations);
  res.gamma_y.reserve(iters);
  res.gamma_x.reserve(iters);
  res.alpha.reserve(iters);
  res.cg_iterations.reserve(iters);
  res.epsilon.reserve(iters);
  res.accepted.reserve(iters);
  res.pixel.reserve(iters);

  GibbsState state;
  state.x = initial_image(model, y);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.n());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(model.n());
  long kept = 0;

  for (long it = 0; it < options.iterations; ++it) {
    // One child stream per sweep, so that samplers run on the same seed see the
    // same gamma variates and perturbations sweep by sweep.
    RngStream sweep = stream.split(static_cast<std::uint64_t>(it));
    try {
      state.gamma_y = sample_gamma_y(state, model, y, sweep);
      state.gamma_x = sample_gamma_x(state, model, sweep);
      auto step = sample_x(state, model, y, sweep, sampler);
      res.alpha.push_back(step.acceptance_probability);
      res.cg_iterations.push_back(step.cg_iterations);
      res.accepted.push_back(step.accepted ? 1 : 0);
      state.x = std::move(step.next_sample);
    } catch (const NumericalError& e) {
      throw NumericalError("gibbs sweep " + std::to_string(it + 1) + ": " + e.what());
    }
    res.gamma_y.push_back(state.gamma_y);
    res.gamma_x.push_back(state.gamma_x);
    res.epsilon.push_back(state.epsilon);
    res.pixel.push_back(state.x[res.tracked_pixel]);

    if (it >= options.burn_in) {
      ++kept;
      const Eigen::VectorXd delta = state.x - mean;
      mean += delta / static_cast<double>(kept);
      m2.array() += delta.array() * (state.x - mean).array();
    }
  }

  res.posterior_mean = mean;
  res.posterior_std = (m2 / static_cast<double>(kept - 1)).cwiseSqrt();

  auto summarize = [&](const std::vector<double>& v, double& mu, double& sd) {
    const auto first = v.begin() + options.burn_in;
    const double n = static_cast<double>(v.end() - first);
    mu = 0;
    for (auto i = first; i != v.end(); ++i) mu += *i;
    mu /= n;
    double s = 0;
    for (auto i = first; i != v.end(); ++i) s += (*i - mu) * (*i - mu);
    sd = std::sqrt(s / (n - 1.0));
  };
  summarize(res.gamma_y, res.gamma_y_mean, res.gamma_y_std);
  summarize(res.gamma_x, res.gamma_x_mean, res.gamma_x_std);
  summarize(res.pixel, res.pixel_mean, res.pixel_std);
  res.peak_cg_iterations = *std::max_element(res.cg_iterations.begin(), res.cg_iterations.end());
  double a = 0;
  for (double v : res.alpha) a += v;
  res.mean_acceptance = a / static_cast<double>(res.alpha.size());
  return res;
}

}  // namespace rjpo
