#include "rjpo/adapt.hpp"

#include <algorithm>
#include <cmath>

namespace rjpo {

double step_size(double k0, double kappa, long n) {
  if (n < 1) throw ArgumentError("step_size: n must be >= 1");
  return k0 / std::pow(static_cast<double>(n), kappa);
}

double essr_from_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ArgumentError("essr_from_alpha: alpha must lie in (0, 1]; the chain never moves at 0");
  return alpha / (2.0 - alpha);
}

double cces_gradient_term(double j, double dalpha_dj, double alpha) {
  return j * dalpha_dj - alpha + 0.5 * alpha * alpha;
}

std::optional<double> least_squares_slope(const std::vector<double>& j,
                                          const std::vector<double>& alpha) {
  if (j.size() != alpha.size()) throw ArgumentError("least_squares_slope: size mismatch");
  const std::size_t n = j.size();
  if (n < 2) return std::nullopt;
  double mj = 0, ma = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mj += j[i];
    ma += alpha[i];
  }
  mj /= static_cast<double>(n);
  ma /= static_cast<double>(n);
  double sjj = 0, sja = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sjj += (j[i] - mj) * (j[i] - mj);
    sja += (j[i] - mj) * (alpha[i] - ma);
  }
  if (sjj == 0.0) return std::nullopt;
  return sja / sjj;
}

AdaptController::AdaptController(double initial_epsilon, double k0, double kappa, AdaptMode mode)
    : log_epsilon_(0.0), k0_(k0), kappa_(kappa), mode_(mode) {
  if (!(initial_epsilon > 0.0) || !std::isfinite(initial_epsilon))
    throw ConfigError("adapt: initial epsilon must be positive");
  if (!(k0 > 0.0)) throw ConfigError("adapt: K0 must be positive");
  if (!(kappa > 0.0) || kappa > 1.0) throw ConfigError("adapt: kappa must lie in (0, 1]");
  if (const auto* t = std::get_if<TargetRate>(&mode_)) {
    if (!(t->alpha_t > 0.0) || !(t->alpha_t < 1.0))
      throw ConfigError("adapt: target acceptance must lie in (0, 1)");
  } else {
    const auto& m = std::get<MinCces>(mode_);
    if (m.window_size < 2) throw ConfigError("adapt: window size must be at least 2");
    if (!(m.probe >= 0.0)) throw ConfigError("adapt: probe width must be nonnegative");
  }
  log_epsilon_ = std::log(initial_epsilon);
}

double AdaptController::epsilon() const { return std::exp(log_epsilon_); }

double AdaptController::epsilon_for_step(RngStream& stream) const {
  if (const auto* m = std::get_if<MinCces>(&mode_); m && m->probe > 0.0)
    return std::exp(log_epsilon_ + m->probe * (2.0 * stream.uniform() - 1.0));
  return epsilon();
}

void AdaptController::update_target_rate(double alpha_n) {
  const auto* t = std::get_if<TargetRate>(&mode_);
  if (t == nullptr) throw ArgumentError("update_target_rate: controller is not in target-rate mode");
  last_correction_ = alpha_n - t->alpha_t;
  log_epsilon_ += current_step_size() * last_correction_;
  ++step_index_;
}

void AdaptController::update_min_cces(int j_n, double alpha_n) {
  const auto* m = std::get_if<MinCces>(&mode_);
  if (m == nullptr) throw ArgumentError("update_min_cces: controller is not in min-CCES mode");
  const double a = std::clamp(alpha_n, 1e-6, 1.0);
  history_.emplace_back(static_cast<double>(j_n), a);
  while (history_.size() > m->window_size) history_.pop_front();

  std::vector<double> js, as;
  js.reserve(history_.size());
  as.reserve(history_.size());
  for (const auto& [j, al] : history_) {
    js.push_back(j);
    as.push_back(al);
  }
  const auto slope = least_squares_slope(js, as);
  degenerate_ = !slope.has_value();
  last_derivative_ = slope.value_or(0.0);
  last_correction_ = cces_gradient_term(static_cast<double>(j_n), last_derivative_, alpha_n);
  // Descent direction: a positive bracket means J / ESSR still falls as J grows,
  // so the threshold must shrink.
  log_epsilon_ -= current_step_size() * last_correction_;
  ++step_index_;
}

void AdaptController::update(int j_n, double alpha_n) {
  if (std::holds_alternative<TargetRate>(mode_))
    update_target_rate(alpha_n);
  else
    update_min_cces(j_n, alpha_n);
}

AdaptiveRun run_adaptive_chain(const GaussianTarget<double>& target, AdaptController controller,
                               const ChainOptions& opts, RngStream& stream,
                               const Vector<double>& x_init, int max_iters) {
  if (x_init.size() != target.dim()) throw ArgumentError("run_adaptive_chain: initial point size");
  AdaptiveRun run{make_chain_state(x_init, opts), {}, std::move(controller)};
  const auto reserve = static_cast<std::size_t>(opts.n_max);
  run.trace.epsilon.reserve(reserve);
  run.trace.alpha.reserve(reserve);
  run.trace.cg_iterations.reserve(reserve);
  for (long n = 1; n <= opts.n_max; ++n) {
    const double eps = run.controller.epsilon_for_step(stream);
    KernelOutcome<double> step;
    try {
      step = rjpo_step<double>(target, run.chain.x, stream, eps, max_iters);
    } catch (const NumericalError& e) {
      throw NumericalError("adaptive chain iteration " + std::to_string(n) + ": " + e.what());
    }
    const double alpha = step.acceptance_probability;
    const int j = step.cg_iterations;
    record_step(run.chain, std::move(step), opts);
    run.trace.epsilon.push_back(eps);
    run.trace.alpha.push_back(alpha);
    run.trace.cg_iterations.push_back(j);
    run.controller.update(j, alpha);
    run.trace.derivative.push_back(run.controller.last_derivative());
    run.chain.epsilon = run.controller.epsilon();
  }
  return run;
}

FixedPointEstimate estimate_fixed_point(const AdaptiveTrace& trace, std::size_t tail) {
  const std::size_t n = trace.alpha.size();
  if (n == 0 || trace.cg_iterations.size() != n)
    throw ArgumentError("estimate_fixed_point: empty or inconsistent trace");
  tail = std::min(tail, n);
  if (tail < 2) throw ArgumentError("estimate_fixed_point: need at least two steps");
  FixedPointEstimate fp;
  fp.samples = tail;
  std::vector<double> js, as;
  js.reserve(tail);
  as.reserve(tail);
  for (std::size_t i = n - tail; i < n; ++i) {
    js.push_back(static_cast<double>(trace.cg_iterations[i]));
    as.push_back(std::clamp(trace.alpha[i], 1e-6, 1.0));
    fp.mean_j += js.back();
    fp.mean_alpha += trace.alpha[i];
  }
  fp.mean_j /= static_cast<double>(tail);
  fp.mean_alpha /= static_cast<double>(tail);
  const auto slope = least_squares_slope(js, as);
  fp.degenerate = !slope.has_value();
  fp.dalpha_dj = slope.value_or(0.0);
  fp.residual = cces_gradient_term(fp.mean_j, fp.dalpha_dj, fp.mean_alpha);
  return fp;
}

}  // namespace rjpo
