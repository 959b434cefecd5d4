#pragma once

#include <set>
#include <string>
#include <vector>

#include "rjpo/io.hpp"

namespace rjpo {

/// Key-value run configuration with typed lookups.
///
/// Every lookup records the effective value (supplied or default), so the
/// resolved configuration can be written next to the results and fed back in.
class RunConfig {
 public:
  RunConfig(std::string command, KeyValues values);

  const std::string& command() const { return command_; }

  double number(const std::string& key, double fallback);
  long integer(const std::string& key, long fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);

  /// Throws ConfigError naming the first supplied key that no lookup asked for.
  void reject_unknown() const;

  const KeyValues& resolved() const { return resolved_; }

 private:
  const std::string* find(const std::string& key);

  std::string command_;
  KeyValues values_;
  KeyValues resolved_;
  std::set<std::string> used_;
};

/// `count` points spaced evenly in log10 between lo and hi, ascending.
std::vector<double> log_grid(double lo, double hi, int count);

/// AR(1) toy problem (default N = 20, sigma2 = 1, rho = 0.8): chains for E-PO,
/// T-PO and RJPO with RMSE tables at logarithmic checkpoints.
nlohmann::ordered_json cmd_toy(RunConfig& config);

/// Threshold sweep on the N = 16 problem: acceptance curve, RMSE, ESSR and CCES
/// per threshold, and optionally iterations to Gelman-Rubin convergence.
nlohmann::ordered_json cmd_curve(RunConfig& config);

/// Adaptive RJPO, either towards target acceptance rates or towards minimal CCES.
nlohmann::ordered_json cmd_adapt(RunConfig& config);

/// Unsupervised super-resolution by Gibbs sampling.
nlohmann::ordered_json cmd_superres(RunConfig& config);

/// Dispatches on config.command().
nlohmann::ordered_json run_command(RunConfig& config);

}  // namespace rjpo
