#include "rjpo/diag.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "rjpo/fft2.hpp"

namespace rjpo {

RmsePair rmse(const Eigen::VectorXd& mean_hat, const Eigen::MatrixXd& cov_hat,
              const Eigen::VectorXd& true_mean, const Eigen::MatrixXd& true_cov) {
  if (mean_hat.size() != true_mean.size() || cov_hat.rows() != true_cov.rows() ||
      cov_hat.cols() != true_cov.cols())
    throw ArgumentError("rmse: dimension mismatch");
  const double mu_norm = true_mean.norm();
  const double r_norm = true_cov.norm();
  if (mu_norm == 0.0 || r_norm == 0.0) throw ArgumentError("rmse: reference has zero norm");
  return {(true_mean - mean_hat).norm() / mu_norm, (true_cov - cov_hat).norm() / r_norm};
}

RmsePair rmse(const ChainState<double>& chain, const Eigen::VectorXd& true_mean,
              const Eigen::MatrixXd& true_cov) {
  if (chain.post_burn_in < 2) throw ArgumentError("rmse: chain has no post-burn-in samples");
  return rmse(chain.mean(), chain.covariance(), true_mean, true_cov);
}

namespace {

// Biased autocovariance at every lag via a zero-padded FFT.
std::vector<double> autocovariance(const std::vector<double>& series) {
  const std::size_t n = series.size();
  double mean = 0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  const RealFft2 fft(1, static_cast<Index>(len));
  std::vector<double> padded(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = series[i] - mean;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.spectrum_size()));
  fft.forward(padded.data(), spec.data());
  for (auto& c : spec) c = std::norm(c);
  fft.inverse(spec.data(), padded.data());
  std::vector<double> acov(n);
  for (std::size_t k = 0; k < n; ++k)
    acov[k] = padded[k] / static_cast<double>(len) / static_cast<double>(n);
  return acov;
}

bool is_constant(const std::vector<double>& series) {
  return std::all_of(series.begin(), series.end(),
                     [&](double v) { return v == series.front(); });
}

}  // namespace

std::vector<double> autocorrelation(const std::vector<double>& series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < 2) throw ArgumentError("autocorrelation: series too short");
  if (is_constant(series)) throw ArgumentError("autocorrelation: constant series");
  max_lag = std::min(max_lag, n - 1);
  const auto acov = autocovariance(series);
  std::vector<double> rho(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = acov[k] / acov[0];
  return rho;
}

double ess(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 10) throw ArgumentError("ess: series must have at least 10 entries");
  if (is_constant(series)) throw ArgumentError("ess: constant series has no autocorrelation");
  const auto acov = autocovariance(series);
  double sum = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double rho = acov[k] / acov[0];
    if (rho <= 0.0) break;
    sum += rho;
  }
  const double n_eff = static_cast<double>(n) / (1.0 + 2.0 * sum);
  return std::clamp(n_eff, 1.0, static_cast<double>(n));
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw ArgumentError("gelman_rubin: needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw ArgumentError("gelman_rubin: chains must have at least 10 entries");
  for (const auto& c : chains)
    if (c.size() != n) throw ArgumentError("gelman_rubin: chains differ in length");

  std::vector<double> means(m);
  double w = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double mu = 0;
    for (double v : chains[j]) mu += v;
    mu /= static_cast<double>(n);
    double s2 = 0;
    for (double v : chains[j]) s2 += (v - mu) * (v - mu);
    means[j] = mu;
    w += s2 / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  if (w == 0.0) throw ArgumentError("gelman_rubin: zero within-chain variance");

  double grand = 0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double b = 0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);

  const double nd = static_cast<double>(n);
  const double v = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(v / w);
}

double trace_essr(const Eigen::MatrixXd& trace) {
  if (trace.rows() < 10) throw ArgumentError("trace_essr: trace too short");
  double total = 0;
  int counted = 0;
  std::vector<double> column(static_cast<std::size_t>(trace.rows()));
  for (Index j = 0; j < trace.cols(); ++j) {
    for (Index i = 0; i < trace.rows(); ++i) column[static_cast<std::size_t>(i)] = trace(i, j);
    try {
      total += ess(column) / static_cast<double>(trace.rows());
    } catch (const ArgumentError&) {
      // A frozen coordinate (no accepted move) carries one effective sample.
      total += 1.0 / static_cast<double>(trace.rows());
    }
    ++counted;
  }
  return total / counted;
}

DiagnosticsReport make_report(const ChainState<double>& chain, const Eigen::VectorXd& true_mean,
                              const Eigen::MatrixXd& true_cov) {
  DiagnosticsReport r;
  const auto e = rmse(chain, true_mean, true_cov);
  r.rmse_mean = e.mean;
  r.rmse_cov = e.cov;
  r.mean_acceptance = chain.mean_acceptance();
  r.mean_cg_iters = chain.mean_cg_iterations();
  if (chain.trace.rows() >= 10) {
    r.essr = trace_essr(chain.trace);
    r.cces = r.mean_cg_iters / r.essr;
  }
  return r;
}

std::vector<AcceptanceRow> acceptance_curve(const GaussianTarget<double>& target,
                                            const std::vector<double>& epsilons, long n_max,
                                            const RngStream& stream) {
  if (epsilons.empty()) throw ArgumentError("acceptance_curve: empty threshold list");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw ArgumentError("acceptance_curve: thresholds must be positive");
    if (i > 0 && epsilons[i] < epsilons[i - 1])
      throw ArgumentError("acceptance_curve: thresholds must be sorted");
  }
  if (n_max < 1) throw ArgumentError("acceptance_curve: n_max must be positive");

  std::vector<AcceptanceRow> rows;
  rows.reserve(epsilons.size());
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    RngStream child = stream.split(i);
    Vector<double> x = epo_step(target, child).next_sample;
    double alpha_sum = 0;
    long j_sum = 0;
    for (long n = 0; n < n_max; ++n) {
      auto step = rjpo_step<double>(target, x, child, epsilons[i]);
      alpha_sum += step.acceptance_probability;
      j_sum += step.cg_iterations;
      x = std::move(step.next_sample);
    }
    rows.push_back({epsilons[i], alpha_sum / static_cast<double>(n_max),
                    static_cast<double>(j_sum) / static_cast<double>(n_max)});
  }
  return rows;
}

}  // namespace rjpo
