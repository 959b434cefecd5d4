#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "rjpo/cg.hpp"
#include "rjpo/linop.hpp"
#include "rjpo/rng.hpp"

namespace rjpo {

template <typename Scalar>
struct KernelOutcome {
  Vector<Scalar> next_sample;
  Vector<Scalar> proposal;
  Scalar acceptance_probability = 1;
  bool accepted = true;
  int cg_iterations = 0;
  Scalar relative_residual = 0;
};

/// eta = Q mu + F' omega with a caller-supplied omega of size N'.
template <typename Scalar>
Vector<Scalar> perturb_with(const GaussianTarget<Scalar>& target,
                            const Eigen::Ref<const Vector<Scalar>>& omega) {
  return target.potential + target.precision.factor().apply_transpose(omega);
}

/// One draw of eta ~ N(Q mu, Q).
template <typename Scalar>
Vector<Scalar> perturb(const GaussianTarget<Scalar>& target, RngStream& stream) {
  const Vector<Scalar> omega =
      stream.standard_normal_vector<Scalar>(target.precision.factor_rows());
  return perturb_with<Scalar>(target, omega);
}

/// log of min(1, exp(-r'(previous - proposal))).
template <typename Scalar>
Scalar log_acceptance(const Eigen::Ref<const Vector<Scalar>>& residual,
                      const Eigen::Ref<const Vector<Scalar>>& previous,
                      const Eigen::Ref<const Vector<Scalar>>& proposal) {
  const Scalar exponent = -residual.dot(previous - proposal);
  if (std::isnan(exponent)) throw NumericalError("acceptance exponent is NaN");
  return std::min(Scalar(0), exponent);
}

struct EpoKernel {
  /// Relative residual used when no dense mirror is available. 0 runs CG to max_iters.
  double tolerance = 0.0;
  int max_iters = 0;
};

struct TpoKernel {
  double epsilon = 1e-3;
  int max_iters = 0;
};

struct RjpoKernel {
  double epsilon = 1e-3;
  int max_iters = 0;
};

using KernelChoice = std::variant<EpoKernel, TpoKernel, RjpoKernel>;

/// Exact perturbation-optimization: x = Q^-1 eta, always accepted.
///
/// Uses the dense Cholesky factor when the target carries a mirror, otherwise CG
/// at the kernel's tolerance.
template <typename Scalar>
KernelOutcome<Scalar> epo_step(const GaussianTarget<Scalar>& target, RngStream& stream,
                               const EpoKernel& kernel = {}) {
  const Vector<Scalar> eta = perturb(target, stream);
  KernelOutcome<Scalar> out;
  if (target.mirror) {
    out.proposal = target.mirror->cholesky.solve(eta);
    const Vector<Scalar> r = eta - target.precision.apply(out.proposal);
    out.relative_residual = eta.norm() > 0 ? r.norm() / eta.norm() : Scalar(0);
  } else {
    auto cg = cg_solve<Scalar>(target.precision, eta, Vector<Scalar>::Zero(target.dim()),
                               static_cast<Scalar>(kernel.tolerance), kernel.max_iters);
    out.proposal = std::move(cg.solution);
    out.cg_iterations = cg.iterations;
    out.relative_residual = cg.relative_residual;
  }
  out.next_sample = out.proposal;
  out.acceptance_probability = 1;
  out.accepted = true;
  return out;
}

/// Truncated perturbation-optimization: CG from x0 = 0, always accepted.
///
/// The acceptance probability the reversible-jump test would have used against
/// `previous` is recorded for diagnostics only.
template <typename Scalar>
KernelOutcome<Scalar> tpo_step(const GaussianTarget<Scalar>& target,
                               const Eigen::Ref<const Vector<Scalar>>& previous,
                               RngStream& stream, Scalar epsilon, int max_iters = 0) {
  if (!(epsilon > Scalar(0))) throw ArgumentError("tpo_step: epsilon must be positive");
  const Vector<Scalar> eta = perturb(target, stream);
  auto cg = cg_solve<Scalar>(target.precision, eta, Vector<Scalar>::Zero(target.dim()), epsilon,
                             max_iters);
  KernelOutcome<Scalar> out;
  out.acceptance_probability = std::exp(log_acceptance<Scalar>(cg.residual, previous, cg.solution));
  out.cg_iterations = cg.iterations;
  out.relative_residual = cg.relative_residual;
  out.proposal = std::move(cg.solution);
  out.next_sample = out.proposal;
  out.accepted = true;
  return out;
}

/// Reversible-jump perturbation-optimization step.
///
/// CG on Q x = eta starts from x0 = -previous so that the solver output, seen as
/// a function of the auxiliary variable, does not depend on the chain state.
/// The proposal is accepted with probability min(1, exp(-r'(previous - x))),
/// where r is the recomputed residual. One uniform is consumed per step.
template <typename Scalar>
KernelOutcome<Scalar> rjpo_step(const GaussianTarget<Scalar>& target,
                                const Eigen::Ref<const Vector<Scalar>>& previous,
                                RngStream& stream, Scalar epsilon, int max_iters = 0) {
  if (!(epsilon >= Scalar(0))) throw ArgumentError("rjpo_step: epsilon must be nonnegative");
  if (previous.size() != target.dim()) throw ArgumentError("rjpo_step: dimension mismatch");
  const Vector<Scalar> eta = perturb(target, stream);
  const Vector<Scalar> x0 = -previous;
  auto cg = cg_solve<Scalar>(target.precision, eta, x0, epsilon, max_iters);

  KernelOutcome<Scalar> out;
  const Scalar log_alpha = log_acceptance<Scalar>(cg.residual, previous, cg.solution);
  out.acceptance_probability = std::exp(log_alpha);
  out.cg_iterations = cg.iterations;
  out.relative_residual = cg.relative_residual;
  out.proposal = std::move(cg.solution);
  const double u = stream.uniform();
  out.accepted = std::log(u) < static_cast<double>(log_alpha);
  out.next_sample = out.accepted ? out.proposal : Vector<Scalar>(previous);
  return out;
}

template <typename Scalar>
KernelOutcome<Scalar> kernel_step(const GaussianTarget<Scalar>& target, const KernelChoice& kernel,
                                  const Eigen::Ref<const Vector<Scalar>>& previous,
                                  RngStream& stream) {
  return std::visit(
      [&](const auto& k) -> KernelOutcome<Scalar> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, EpoKernel>) {
          return epo_step(target, stream, k);
        } else if constexpr (std::is_same_v<K, TpoKernel>) {
          return tpo_step<Scalar>(target, previous, stream, static_cast<Scalar>(k.epsilon),
                                  k.max_iters);
        } else {
          return rjpo_step<Scalar>(target, previous, stream, static_cast<Scalar>(k.epsilon),
                                   k.max_iters);
        }
      },
      kernel);
}

// ---------------------------------------------------------------------------
// Chains

/// Running state of one chain and the statistics accumulated past burn-in.
///
/// Iterations are numbered 1..n_max; samples with index >= n_min enter the
/// empirical mean (1 / (n_max - n_min + 1)) and covariance (1 / (n_max - n_min)).
template <typename Scalar>
struct ChainState {
  Vector<Scalar> x;
  long iteration = 0;
  double epsilon = 0.0;
  long n_min = 1;

  long post_burn_in = 0;
  Vector<Scalar> running_mean;
  Matrix<Scalar> running_m2;  // sum of centred outer products (Welford)

  std::vector<double> acceptance;
  std::vector<char> accepted;
  std::vector<int> cg_iterations;
  std::vector<double> relative_residual;

  /// Post-burn-in samples, one row per iteration, when recording is enabled.
  Matrix<Scalar> trace;

  Vector<Scalar> mean() const { return running_mean; }
  Matrix<Scalar> covariance() const {
    if (post_burn_in < 2) throw ArgumentError("covariance needs at least two samples");
    return running_m2 / static_cast<Scalar>(post_burn_in - 1);
  }
  double mean_acceptance() const {
    if (acceptance.empty()) return 0.0;
    double s = 0;
    for (double a : acceptance) s += a;
    return s / static_cast<double>(acceptance.size());
  }
  double mean_cg_iterations() const {
    if (cg_iterations.empty()) return 0.0;
    double s = 0;
    for (int j : cg_iterations) s += j;
    return s / static_cast<double>(cg_iterations.size());
  }
  long total_cg_iterations() const {
    long s = 0;
    for (int j : cg_iterations) s += j;
    return s;
  }
};

struct ChainOptions {
  long n_max = 1000;
  /// First iteration entering the estimators; <= 0 selects 10% of n_max.
  long n_min = 0;
  bool track_covariance = true;
  bool record_trace = false;
};

inline long resolve_burn_in(const ChainOptions& opts) {
  return opts.n_min > 0 ? opts.n_min : std::max<long>(1, opts.n_max / 10);
}

template <typename Scalar>
ChainState<Scalar> make_chain_state(const Vector<Scalar>& x_init, const ChainOptions& opts) {
  if (opts.n_max < 2) throw ArgumentError("run_chain: n_max must be at least 2");
  const long n_min = resolve_burn_in(opts);
  if (n_min >= opts.n_max)
    throw ArgumentError("run_chain: empty post-burn-in window (n_min >= n_max)");
  ChainState<Scalar> s;
  s.x = x_init;
  s.n_min = n_min;
  const Index n = x_init.size();
  s.running_mean = Vector<Scalar>::Zero(n);
  if (opts.track_covariance) s.running_m2 = Matrix<Scalar>::Zero(n, n);
  if (opts.record_trace) s.trace.resize(opts.n_max - n_min + 1, n);
  s.acceptance.reserve(static_cast<std::size_t>(opts.n_max));
  s.accepted.reserve(static_cast<std::size_t>(opts.n_max));
  s.cg_iterations.reserve(static_cast<std::size_t>(opts.n_max));
  s.relative_residual.reserve(static_cast<std::size_t>(opts.n_max));
  return s;
}

/// Records one kernel outcome and advances the chain.
template <typename Scalar>
void record_step(ChainState<Scalar>& s, KernelOutcome<Scalar>&& step, const ChainOptions& opts) {
  s.iteration += 1;
  s.acceptance.push_back(static_cast<double>(step.acceptance_probability));
  s.accepted.push_back(step.accepted ? 1 : 0);
  s.cg_iterations.push_back(step.cg_iterations);
  s.relative_residual.push_back(static_cast<double>(step.relative_residual));
  s.x = std::move(step.next_sample);
  if (s.iteration < s.n_min) return;

  s.post_burn_in += 1;
  const Vector<Scalar> delta = s.x - s.running_mean;
  s.running_mean += delta / static_cast<Scalar>(s.post_burn_in);
  if (opts.track_covariance) s.running_m2.noalias() += delta * (s.x - s.running_mean).transpose();
  if (opts.record_trace) s.trace.row(s.post_burn_in - 1) = s.x.transpose();
}

/// Iterates `kernel` n_max times from x_init.
template <typename Scalar>
ChainState<Scalar> run_chain(const GaussianTarget<Scalar>& target, const KernelChoice& kernel,
                             const ChainOptions& opts, RngStream& stream,
                             const Vector<Scalar>& x_init) {
  if (x_init.size() != target.dim()) throw ArgumentError("run_chain: initial point size");
  ChainState<Scalar> s = make_chain_state(x_init, opts);
  if (const auto* r = std::get_if<RjpoKernel>(&kernel)) s.epsilon = r->epsilon;
  if (const auto* t = std::get_if<TpoKernel>(&kernel)) s.epsilon = t->epsilon;
  for (long n = 1; n <= opts.n_max; ++n) {
    try {
      record_step(s, kernel_step<Scalar>(target, kernel, s.x, stream), opts);
    } catch (const NumericalError& e) {
      throw NumericalError("chain iteration " + std::to_string(n) + ": " + e.what());
    }
  }
  return s;
}

template <typename Scalar>
ChainState<Scalar> run_chain(const GaussianTarget<Scalar>& target, const KernelChoice& kernel,
                             const ChainOptions& opts, RngStream& stream) {
  return run_chain(target, kernel, opts, stream, Vector<Scalar>(Vector<Scalar>::Zero(target.dim())));
}

inline std::string kernel_name(const KernelChoice& kernel) {
  switch (kernel.index()) {
    case 0:
      return "epo";
    case 1:
      return "tpo";
    default:
      return "rjpo";
  }
}

}  // namespace rjpo
