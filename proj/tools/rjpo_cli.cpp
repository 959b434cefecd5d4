#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rjpo/errors.hpp"
#include "rjpo/experiments.hpp"
#include "rjpo/io.hpp"

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

// Flags shared by every subcommand.
const std::vector<FlagSpec> kCommon = {
    {"--seed", "seed", "RNG seed (default 1)"},
    {"--out", "out", "output directory, created if missing"},
};

const std::map<std::string, std::vector<FlagSpec>> kFlags = {
    {"toy",
     {{"--n", "n", "dimension (default 20)"},
      {"--sigma2", "sigma2", "marginal variance (default 1)"},
      {"--rho", "rho", "AR(1) correlation (default 0.8)"},
      {"--n-max", "n_max", "iterations per chain"},
      {"--n-min", "n_min", "first iteration entering the estimators (default n_max/10)"},
      {"--sampler", "sampler", "epo, tpo, rjpo or all"},
      {"--epsilon", "epsilon", "CG relative residual threshold"}}},
    {"curve",
     {{"--n", "n", "dimension (default 16)"},
      {"--sigma2", "sigma2", "marginal variance (default 1e-3)"},
      {"--rho", "rho", "AR(1) correlation (default 0.5)"},
      {"--n-max", "n_max", "iterations per chain"},
      {"--n-min", "n_min", "first iteration entering the estimators"},
      {"--epsilon-grid", "epsilon_grid", "comma-separated thresholds"},
      {"--gelman-rubin", "gelman_rubin", "true to run the PSRF convergence experiment"},
      {"--chains", "chains", "chains for the PSRF experiment (default 10)"},
      {"--psrf-threshold", "psrf_threshold", "PSRF convergence threshold (default 1.1)"},
      {"--check-every", "check_every", "iterations between PSRF checks"}}},
    {"adapt",
     {{"--mode", "mode", "target_rate or min_cces"},
      {"--n", "n", "dimension (default 16, or 128 for min_cces)"},
      {"--sigma2", "sigma2", "marginal variance"},
      {"--rho", "rho", "AR(1) correlation"},
      {"--n-max", "n_max", "adaptive steps"},
      {"--epsilon", "epsilon", "initial threshold"},
      {"--alpha-t", "alpha_t", "comma-separated target acceptance rates"},
      {"--k0", "k0", "step size scale"},
      {"--kappa", "kappa", "step size decay exponent in (0, 1]"},
      {"--window", "window", "pairs in the dalpha/dJ window"},
      {"--probe", "probe", "log-threshold jitter half-width"},
      {"--eval-window", "eval_window", "trailing steps used for the fixed-point estimate"},
      {"--tail", "tail", "trailing steps summarized per target rate"}}},
    {"superres",
     {{"--input", "input", "ground-truth PGM (default: built-in phantom)"},
      {"--dims", "dims", "high-resolution size, e.g. 64x64"},
      {"--frames", "frames", "number of low-resolution frames"},
      {"--factor", "factor", "decimation factor"},
      {"--fwhm", "fwhm", "PSF full width at half maximum"},
      {"--snr-db", "snr_db", "observation SNR in dB"},
      {"--iterations", "iterations", "Gibbs sweeps"},
      {"--burn-in", "burn_in", "sweeps discarded from the summaries"},
      {"--n-max", "iterations", "alias of --iterations"},
      {"--n-min", "burn_in", "alias of --burn-in"},
      {"--sampler", "sampler", "arjpo, tpo or epo"},
      {"--epsilon", "epsilon", "T-PO threshold or initial A-RJPO threshold"},
      {"--alpha-t", "alpha_t", "A-RJPO target acceptance rate"},
      {"--tolerance", "tolerance", "CG tolerance of the exact sampler"},
      {"--pixel", "pixel", "tracked pixel index"},
      {"--reference", "reference", "true to add an exact-sampler reference run"}}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reversible-jump perturbation-optimization samplers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rjpo::build_id());

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_files;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, flags] : kFlags) {
    CLI::App* sub = app.add_subcommand(name);
    subs[name] = sub;
    sub->add_option("--config", config_files[name], "key = value file; flags override it");
    auto add = [&](const FlagSpec& f) {
      sub->add_option(f.flag, values[name][f.flag], f.help);
    };
    for (const auto& f : kCommon) add(f);
    for (const auto& f : flags) add(f);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      rjpo::KeyValues kv;
      if (!config_files[name].empty()) kv = rjpo::read_key_values(config_files[name]);
      std::vector<FlagSpec> flags = kCommon;
      flags.insert(flags.end(), kFlags.at(name).begin(), kFlags.at(name).end());
      for (const auto& f : flags)
        if (sub->count(f.flag) > 0) kv[f.key] = values[name][f.flag];
      rjpo::RunConfig config(name, kv);
      const auto summary = rjpo::run_command(config);
      std::cout << summary.dump(2) << '\n';
    }
  } catch (const rjpo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const rjpo::ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const rjpo::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const rjpo::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
