#pragma once

#include <optional>
#include <vector>

#include "rjpo/sampler.hpp"

namespace rjpo {

struct RmsePair {
  double mean = 0;
  double cov = 0;
};

/// Relative errors ||mu - mu_hat|| / ||mu|| and ||R - R_hat||_F / ||R||_F.
RmsePair rmse(const Eigen::VectorXd& mean_hat, const Eigen::MatrixXd& cov_hat,
              const Eigen::VectorXd& true_mean, const Eigen::MatrixXd& true_cov);
RmsePair rmse(const ChainState<double>& chain, const Eigen::VectorXd& true_mean,
              const Eigen::MatrixXd& true_cov);

/// Biased (1/n) autocorrelation at lags 0..max_lag.
std::vector<double> autocorrelation(const std::vector<double>& series, std::size_t max_lag);

/// Effective sample size n / (1 + 2 sum rho_k), summing lags until the first
/// nonpositive rho_k, clamped to [1, n].
double ess(const std::vector<double>& series);

/// Potential scale reduction factor sqrt(V / W), V = (n-1)/n W + B/n.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

struct DiagnosticsReport {
  double rmse_mean = 0;
  double rmse_cov = 0;
  double essr = 0;
  double cces = 0;
  double mean_acceptance = 0;
  double mean_cg_iters = 0;
  std::optional<double> psrf;
};

/// Mean ESS ratio over the coordinates of a recorded trace.
double trace_essr(const Eigen::MatrixXd& trace);

/// Builds a report from a chain that recorded its trace.
DiagnosticsReport make_report(const ChainState<double>& chain, const Eigen::VectorXd& true_mean,
                              const Eigen::MatrixXd& true_cov);

struct AcceptanceRow {
  double epsilon = 0;
  double mean_alpha = 0;
  double mean_j = 0;
};

/// One RJPO chain of n_max steps per threshold, each on its own child stream
/// and started from an exact draw. Rows follow the input order.
std::vector<AcceptanceRow> acceptance_curve(const GaussianTarget<double>& target,
                                            const std::vector<double>& epsilons, long n_max,
                                            const RngStream& stream);

}  // namespace rjpo
