#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rjpo/sampler.hpp"

namespace rjpo {

/// Robbins-Monro step size K_n = k0 / n^kappa.
double step_size(double k0, double kappa, long n);

/// Effective-sample-size ratio when rejections are the only source of
/// correlation (rho = 1 - alpha): alpha / (2 - alpha).
double essr_from_alpha(double alpha);

/// J dalpha/dJ - alpha + alpha^2 / 2; zero where J / ESSR is stationary in J.
double cces_gradient_term(double j, double dalpha_dj, double alpha);

/// Least-squares slope of alpha against J. Returns nullopt when every J is equal.
std::optional<double> least_squares_slope(const std::vector<double>& j,
                                          const std::vector<double>& alpha);

struct TargetRate {
  double alpha_t = 0.8;
};

struct MinCces {
  std::size_t window_size = 50;
  /// Half-width of a uniform log-space jitter applied to epsilon when a step is
  /// run, so that the window sees a spread of truncation levels. 0 disables it.
  double probe = 0.0;
};

using AdaptMode = std::variant<TargetRate, MinCces>;

/// Online tuning of the CG truncation threshold, updated on log(epsilon).
class AdaptController {
 public:
  AdaptController(double initial_epsilon, double k0, double kappa, AdaptMode mode);

  double epsilon() const;
  double log_epsilon() const { return log_epsilon_; }
  double k0() const { return k0_; }
  double kappa() const { return kappa_; }
  /// Index n of the next update (starts at 1).
  long step_index() const { return step_index_; }
  /// K_n for the next update.
  double current_step_size() const { return step_size(k0_, kappa_, step_index_); }
  const AdaptMode& mode() const { return mode_; }

  /// Threshold to use for the next step; draws the probe jitter in MinCces mode.
  double epsilon_for_step(RngStream& stream) const;

  /// log eps += K_n (alpha_n - alpha_t). `alpha_n` is the acceptance probability.
  void update_target_rate(double alpha_n);

  /// log eps -= K_n (J_n dalpha/dJ - alpha_n + alpha_n^2 / 2), with dalpha/dJ the
  /// least-squares slope over the trailing window of (J, alpha) pairs.
  void update_min_cces(int j_n, double alpha_n);

  /// Dispatches on the mode.
  void update(int j_n, double alpha_n);

  double last_derivative() const { return last_derivative_; }
  bool last_derivative_degenerate() const { return degenerate_; }
  /// Value of the bracket applied at the last update (before multiplying by K_n).
  double last_correction() const { return last_correction_; }
  const std::deque<std::pair<double, double>>& history() const { return history_; }

 private:
  double log_epsilon_;
  double k0_;
  double kappa_;
  long step_index_ = 1;
  AdaptMode mode_;
  std::deque<std::pair<double, double>> history_;
  double last_derivative_ = 0.0;
  double last_correction_ = 0.0;
  bool degenerate_ = false;
};

/// One row per adaptive step.
struct AdaptiveTrace {
  std::vector<double> epsilon;  // threshold used at the step
  std::vector<double> alpha;
  std::vector<int> cg_iterations;
  std::vector<double> derivative;  // MinCces only
};

struct AdaptiveRun {
  ChainState<double> chain;
  AdaptiveTrace trace;
  AdaptController controller;
};

/// RJPO chain whose threshold is tuned by `controller` after every step.
AdaptiveRun run_adaptive_chain(const GaussianTarget<double>& target, AdaptController controller,
                               const ChainOptions& opts, RngStream& stream,
                               const Vector<double>& x_init, int max_iters = 0);

/// Operating point of a min-CCES run measured over its last `tail` steps.
struct FixedPointEstimate {
  std::size_t samples = 0;
  double mean_j = 0;
  double mean_alpha = 0;
  double dalpha_dj = 0;  // least-squares slope, alpha clamped to [1e-6, 1]
  bool degenerate = false;
  double residual = 0;  // J dalpha/dJ - alpha + alpha^2 / 2 at the means
};

FixedPointEstimate estimate_fixed_point(const AdaptiveTrace& trace, std::size_t tail);

}  // namespace rjpo
