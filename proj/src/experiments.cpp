#include "rjpo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <sstream>

#include "rjpo/adapt.hpp"
#include "rjpo/diag.hpp"
#include "rjpo/problems.hpp"
#include "rjpo/superres.hpp"

namespace rjpo {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// RunConfig

RunConfig::RunConfig(std::string command, KeyValues values)
    : command_(std::move(command)), values_(std::move(values)) {
  // A saved run.cfg carries its subcommand; it has to agree with the one requested.
  if (auto it = values_.find("command"); it != values_.end()) {
    if (it->second != command_)
      throw ConfigError("config was written by '" + it->second + "', not '" + command_ + "'");
    values_.erase(it);
  }
}

const std::string* RunConfig::find(const std::string& key) {
  used_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double RunConfig::number(const std::string& key, double fallback) {
  const std::string* v = find(key);
  if (!v) {
    resolved_[key] = format_double(fallback);
    return fallback;
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    resolved_[key] = *v;
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + *v + "'");
  }
}

long RunConfig::integer(const std::string& key, long fallback) {
  const std::string* v = find(key);
  if (!v) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  try {
    std::size_t pos = 0;
    const long n = std::stol(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    resolved_[key] = *v;
    return n;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + *v + "'");
  }
}

bool RunConfig::flag(const std::string& key, bool fallback) {
  const std::string* v = find(key);
  if (!v) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
    resolved_[key] = "true";
    return true;
  }
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
    resolved_[key] = "false";
    return false;
  }
  throw ConfigError("'" + key + "' expects true or false, got '" + *v + "'");
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) {
  const std::string* v = find(key);
  resolved_[key] = v ? *v : fallback;
  return resolved_[key];
}

std::vector<double> RunConfig::numbers(const std::string& key,
                                       const std::vector<double>& fallback) {
  const std::string* v = find(key);
  if (!v) {
    std::string joined;
    for (std::size_t i = 0; i < fallback.size(); ++i)
      joined += (i ? "," : "") + format_double(fallback[i]);
    resolved_[key] = joined;
    return fallback;
  }
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t pos = 0;
      const std::string t = item.substr(b, item.find_last_not_of(" \t") - b + 1);
      out.push_back(std::stod(t, &pos));
      if (pos != t.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' expects a comma-separated list of numbers, got '" + *v + "'");
    }
  }
  resolved_[key] = *v;
  return out;
}

void RunConfig::reject_unknown() const {
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' for subcommand " + command_);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ConfigError("log_grid: invalid range");
  if (count == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(count));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return g;
}

// ---------------------------------------------------------------------------
// Shared plumbing

namespace {

std::uint64_t read_seed(RunConfig& c) {
  const long seed = c.integer("seed", 1);
  if (seed < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(seed);
}

fs::path read_out(RunConfig& c) { return fs::path(c.text("out", "rjpo_out/" + c.command())); }

long positive(RunConfig& c, const std::string& key, long fallback) {
  const long v = c.integer(key, fallback);
  if (v < 1) throw ConfigError("'" + key + "' must be positive");
  return v;
}

void write_metadata(const fs::path& dir, const RunConfig& c, std::uint64_t seed,
                    const Json& extra = Json::object()) {
  Json meta;
  meta["command"] = c.command();
  meta["seed"] = seed;
  meta["build_id"] = build_id();
  meta["generator"] = std::string(RngStream::kGeneratorName);
  meta["config"] = Json::object();
  for (const auto& [k, v] : c.resolved()) meta["config"][k] = v;
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  write_json(dir / "metadata.json", meta);

  KeyValues kv = c.resolved();
  kv["command"] = c.command();
  write_key_values(dir / "run.cfg", kv);
}

std::string fmt(double v) { return format_double(v); }

ToyParameters read_toy(RunConfig& c, long n, double sigma2, double rho) {
  ToyParameters p;
  p.n = c.integer("n", n);
  p.sigma2 = c.number("sigma2", sigma2);
  p.rho = c.number("rho", rho);
  return p;
}

std::vector<long> checkpoints(long n_max) {
  std::vector<long> out;
  for (long k = 10; k < n_max; k *= 10) out.push_back(k);
  out.push_back(n_max);
  return out;
}

KernelChoice toy_kernel(const std::string& name, double eps) {
  if (name == "epo") return EpoKernel{};
  if (name == "tpo") return TpoKernel{eps, 0};
  return RjpoKernel{eps, 0};
}

// E-PO draw spread out by `scale` about the mean, for overdispersed starts.
Eigen::VectorXd dispersed_start(const ToyProblem& p, RngStream& s, double scale) {
  return p.mean + scale * (epo_step(p.target, s).next_sample - p.mean);
}

struct Convergence {
  bool converged = false;
  long iterations = 0;
  double mean_cg_iterations = 0;
  double psrf = 0;
};

// Runs m RJPO chains in lockstep until the largest per-coordinate PSRF over the
// second half of the chains drops below `threshold`.
Convergence gelman_rubin_convergence(const ToyProblem& p, double eps, long chains, long n_max,
                                     double threshold, long check_every, const RngStream& parent) {
  const Index n = p.target.dim();
  std::vector<RngStream> streams;
  std::vector<Eigen::VectorXd> x;
  std::vector<std::vector<std::vector<double>>> hist(static_cast<std::size_t>(chains));
  std::vector<long> cg(static_cast<std::size_t>(chains), 0);
  for (long c = 0; c < chains; ++c) {
    streams.push_back(parent.split(static_cast<std::uint64_t>(c)));
    x.push_back(dispersed_start(p, streams.back(), 3.0));
    hist[c].assign(static_cast<std::size_t>(n), {});
  }
  Convergence out;
  for (long it = 1; it <= n_max; ++it) {
    for (long c = 0; c < chains; ++c) {
      auto step = rjpo_step<double>(p.target, x[c], streams[c], eps);
      cg[c] += step.cg_iterations;
      x[c] = std::move(step.next_sample);
      for (Index i = 0; i < n; ++i) hist[c][i].push_back(x[c][i]);
    }
    if (it < 20 || it % check_every != 0) continue;
    double worst = 0;
    const auto half = static_cast<std::size_t>(it / 2);
    for (Index i = 0; i < n; ++i) {
      std::vector<std::vector<double>> parts;
      for (long c = 0; c < chains; ++c)
        parts.emplace_back(hist[c][i].end() - static_cast<long>(half), hist[c][i].end());
      double r;
      try {
        r = gelman_rubin(parts);
      } catch (const ArgumentError&) {
        r = std::numeric_limits<double>::infinity();  // frozen chains
      }
      worst = std::max(worst, r);
    }
    out.psrf = worst;
    out.iterations = it;
    if (worst < threshold) {
      out.converged = true;
      break;
    }
  }
  double total = 0;
  for (long v : cg) total += static_cast<double>(v);
  out.mean_cg_iterations = total / static_cast<double>(chains);
  return out;
}

ImageDims parse_dims(const std::string& s) {
  try {
    const auto x = s.find('x');
    if (x == std::string::npos) {
      const long d = std::stol(s);
      return {d, d};
    }
    return {std::stol(s.substr(0, x)), std::stol(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("dims must look like 64 or 64x48, got '" + s + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// toy

Json cmd_toy(RunConfig& c) {
  const auto seed = read_seed(c);
  const fs::path out = read_out(c);
  const ToyParameters params = read_toy(c, 20, 1.0, 0.8);
  ChainOptions opts;
  opts.n_max = positive(c, "n_max", 10000);
  opts.n_min = c.integer("n_min", 0);
  const std::string sampler = c.text("sampler", "all");
  const double eps = c.number("epsilon", 1e-3);
  c.reject_unknown();

  std::vector<std::string> names;
  if (sampler == "all")
    names = {"epo", "tpo", "rjpo"};
  else if (sampler == "epo" || sampler == "tpo" || sampler == "rjpo")
    names = {sampler};
  else
    throw ConfigError("sampler must be epo, tpo, rjpo or all");
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  if (opts.n_min < 0) throw ConfigError("n_min must be nonnegative");

  ensure_directory(out);
  write_metadata(out, c, seed);

  const RngStream root(seed);
  RngStream problem_stream = root.split(0);
  const ToyProblem p = make_ar1_problem(params, problem_stream);
  {
    std::vector<std::vector<double>> rows;
    for (Index i = 0; i < p.mean.size(); ++i) rows.push_back({static_cast<double>(i), p.mean[i]});
    write_csv(out / "problem.csv", {"index", "mu"}, rows);
  }

  std::vector<std::vector<std::string>> rmse_rows;
  Json summary;
  const auto marks = checkpoints(opts.n_max);
  for (const auto& name : names) {
    const std::uint64_t id = name == "epo" ? 1 : name == "tpo" ? 2 : 3;
    RngStream stream = root.split(id);
    const KernelChoice kernel = toy_kernel(name, eps);
    ChainState<double> st = make_chain_state(Eigen::VectorXd(Eigen::VectorXd::Zero(p.target.dim())), opts);
    std::vector<std::vector<double>> chain_rows;
    chain_rows.reserve(static_cast<std::size_t>(opts.n_max));
    std::size_t next_mark = 0;
    for (long n = 1; n <= opts.n_max; ++n) {
      try {
        record_step(st, kernel_step<double>(p.target, kernel, st.x, stream), opts);
      } catch (const NumericalError& e) {
        throw NumericalError(name + " chain iteration " + std::to_string(n) + ": " + e.what());
      }
      chain_rows.push_back({static_cast<double>(n), st.acceptance.back(),
                            static_cast<double>(st.accepted.back()),
                            static_cast<double>(st.cg_iterations.back()), st.x[0]});
      if (next_mark < marks.size() && n == marks[next_mark]) {
        ++next_mark;
        if (st.post_burn_in < 2) continue;
        const auto e = rmse(st, p.mean, p.covariance);
        rmse_rows.push_back({name, std::to_string(n), fmt(e.mean), fmt(e.cov)});
      }
    }
    write_csv(out / ("chain_" + name + ".csv"), {"iter", "alpha", "accepted", "cg_iters", "x_1"},
              chain_rows);
    const auto e = rmse(st, p.mean, p.covariance);
    summary[name] = {{"rmse_mean", e.mean},
                     {"rmse_cov", e.cov},
                     {"mean_acceptance", st.mean_acceptance()},
                     {"mean_cg_iterations", st.mean_cg_iterations()}};
  }
  write_csv(out / "rmse.csv", {"sampler", "n", "rmse_mean", "rmse_cov"}, rmse_rows);
  write_json(out / "summary.json", summary);
  return summary;
}

// ---------------------------------------------------------------------------
// curve

Json cmd_curve(RunConfig& c) {
  const auto seed = read_seed(c);
  const fs::path out = read_out(c);
  const ToyParameters params = read_toy(c, 16, 1e-3, 0.5);
  ChainOptions opts;
  opts.n_max = positive(c, "n_max", 10000);
  opts.n_min = c.integer("n_min", 0);
  opts.record_trace = true;
  std::vector<double> grid = c.numbers("epsilon_grid", log_grid(1e-6, 1e-1, 10));
  const bool with_gr = c.flag("gelman_rubin", false);
  long chains = 0, check_every = 0;
  double threshold = 0;
  if (with_gr) {
    chains = c.integer("chains", 10);
    threshold = c.number("psrf_threshold", 1.1);
    check_every = positive(c, "check_every", 50);
    if (chains < 2) throw ConfigError("chains must be at least 2");
    if (!(threshold > 1.0)) throw ConfigError("psrf_threshold must exceed 1");
  }
  c.reject_unknown();

  if (grid.empty()) throw ConfigError("epsilon grid is empty");
  for (double e : grid)
    if (!(e > 0.0)) throw ConfigError("epsilon grid values must be positive");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (opts.n_min < 0) throw ConfigError("n_min must be nonnegative");

  ensure_directory(out);
  write_metadata(out, c, seed);

  const RngStream root(seed);
  RngStream problem_stream = root.split(0);
  const ToyProblem p = make_ar1_problem(params, problem_stream);

  const auto curve = acceptance_curve(p.target, grid, opts.n_max, root.split(1));
  {
    std::vector<std::vector<double>> rows;
    for (const auto& r : curve) rows.push_back({r.epsilon, r.mean_alpha, r.mean_j});
    write_csv(out / "acceptance.csv", {"epsilon", "mean_alpha", "mean_J"}, rows);
  }

  std::vector<std::vector<std::string>> rmse_rows, eff_rows;
  Json summary;
  Json rows = Json::array();
  auto run = [&](const KernelChoice& k, RngStream s) {
    const Eigen::VectorXd x0 = epo_step(p.target, s).next_sample;
    const auto chain = run_chain<double>(p.target, k, opts, s, x0);
    return make_report(chain, p.mean, p.covariance);
  };
  const RngStream rj_parent = root.split(2), tpo_parent = root.split(3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double eps = grid[i];
    const auto rj = run(RjpoKernel{eps, 0}, rj_parent.split(i));
    const auto tp = run(TpoKernel{eps, 0}, tpo_parent.split(i));
    rmse_rows.push_back({"rjpo", fmt(eps), fmt(rj.rmse_mean), fmt(rj.rmse_cov)});
    rmse_rows.push_back({"tpo", fmt(eps), fmt(tp.rmse_mean), fmt(tp.rmse_cov)});
    eff_rows.push_back({"rjpo", fmt(eps), fmt(rj.mean_acceptance), fmt(rj.mean_cg_iters),
                        fmt(rj.essr), fmt(rj.cces)});
    rows.push_back({{"epsilon", eps}, {"rjpo_cces", rj.cces}, {"rjpo_essr", rj.essr}});
  }
  const auto ep = run(EpoKernel{}, root.split(4));
  rmse_rows.push_back({"epo", "0", fmt(ep.rmse_mean), fmt(ep.rmse_cov)});
  eff_rows.push_back({"epo", "0", fmt(ep.mean_acceptance), fmt(ep.mean_cg_iters), fmt(ep.essr),
                      fmt(ep.cces)});
  write_csv(out / "rmse.csv", {"sampler", "epsilon", "rmse_mean", "rmse_cov"}, rmse_rows);
  write_csv(out / "efficiency.csv", {"sampler", "epsilon", "mean_alpha", "mean_J", "essr", "cces"},
            eff_rows);

  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i]["rjpo_cces"].get<double>() < rows[best]["rjpo_cces"].get<double>()) best = i;
  summary["cces_argmin_epsilon"] = grid[best];
  summary["cces_min"] = rows[best]["rjpo_cces"];
  summary["cces_argmin_interior"] = best > 0 && best + 1 < grid.size();
  summary["epo_essr"] = ep.essr;

  if (with_gr) {
    std::vector<std::vector<std::string>> conv_rows;
    const RngStream gr_parent = root.split(5);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto cv = gelman_rubin_convergence(p, grid[i], chains, opts.n_max, threshold,
                                               check_every, gr_parent.split(i));
      conv_rows.push_back({fmt(grid[i]), cv.converged ? "1" : "0", std::to_string(cv.iterations),
                           fmt(cv.mean_cg_iterations), fmt(cv.psrf)});
    }
    write_csv(out / "convergence.csv",
              {"epsilon", "converged", "iterations", "mean_cg_iterations", "psrf"}, conv_rows);
  }
  write_json(out / "summary.json", summary);
  return summary;
}

// ---------------------------------------------------------------------------
// adapt

Json cmd_adapt(RunConfig& c) {
  const auto seed = read_seed(c);
  const fs::path out = read_out(c);
  const std::string mode = c.text("mode", "target_rate");
  if (mode != "target_rate" && mode != "min_cces")
    throw ConfigError("mode must be target_rate or min_cces");
  const bool target = mode == "target_rate";
  const ToyParameters params = read_toy(c, target ? 16 : 128, 1e-3, 0.5);
  ChainOptions opts;
  opts.n_max = positive(c, "n_max", target ? 1000 : 10000);
  opts.track_covariance = false;
  const double eps0 = c.number("epsilon", 1e-3);
  const double k0 = c.number("k0", 1.0);
  const double kappa = c.number("kappa", 0.5);
  std::vector<double> alpha_t;
  long window = 0, eval_window = 0, tail = 0;
  double probe = 0;
  if (target) {
    alpha_t = c.numbers("alpha_t", {0.5, 0.8, 0.99});
    tail = positive(c, "tail", 200);
    if (alpha_t.empty()) throw ConfigError("alpha_t list is empty");
  } else {
    window = c.integer("window", 50);
    probe = c.number("probe", 1.0);
    eval_window = positive(c, "eval_window", 2000);
  }
  c.reject_unknown();
  if (opts.n_max < 2) throw ConfigError("n_max must be at least 2");
  // Builds the controllers up front so that bad parameters fail before any output.
  std::vector<AdaptController> controllers;
  if (target) {
    for (double a : alpha_t) controllers.emplace_back(eps0, k0, kappa, TargetRate{a});
  } else {
    if (window < 2) throw ConfigError("window must be at least 2");
    controllers.emplace_back(eps0, k0, kappa, MinCces{static_cast<std::size_t>(window), probe});
  }

  ensure_directory(out);
  write_metadata(out, c, seed);

  const RngStream root(seed);
  RngStream problem_stream = root.split(0);
  const ToyProblem p = make_ar1_problem(params, problem_stream);

  Json summary;
  if (target) {
    std::vector<std::vector<double>> rows;
    Json runs = Json::array();
    for (std::size_t i = 0; i < controllers.size(); ++i) {
      RngStream s = root.split(1 + i);
      const Eigen::VectorXd x0 = epo_step(p.target, s).next_sample;
      const auto run = run_adaptive_chain(p.target, controllers[i], opts, s, x0);
      const auto& t = run.trace;
      double running = 0;
      for (std::size_t n = 0; n < t.alpha.size(); ++n) {
        running += (t.alpha[n] - running) / static_cast<double>(n + 1);
        rows.push_back({alpha_t[i], static_cast<double>(n + 1), t.epsilon[n], t.alpha[n],
                        static_cast<double>(t.cg_iterations[n]), running});
      }
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(tail), t.alpha.size());
      double ta = 0, tj = 0;
      for (std::size_t n = t.alpha.size() - k; n < t.alpha.size(); ++n) {
        ta += t.alpha[n];
        tj += t.cg_iterations[n];
      }
      runs.push_back({{"alpha_t", alpha_t[i]},
                      {"final_epsilon", run.controller.epsilon()},
                      {"tail_mean_alpha", ta / static_cast<double>(k)},
                      {"tail_mean_J", tj / static_cast<double>(k)},
                      {"mean_alpha", run.chain.mean_acceptance()}});
    }
    write_csv(out / "trajectory.csv", {"alpha_t", "n", "epsilon", "alpha", "J", "running_alpha"},
              rows);
    summary["mode"] = mode;
    summary["runs"] = runs;
  } else {
    RngStream s = root.split(1);
    const Eigen::VectorXd x0 = epo_step(p.target, s).next_sample;
    const auto run = run_adaptive_chain(p.target, controllers.front(), opts, s, x0);
    const auto& t = run.trace;
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < t.alpha.size(); ++n)
      rows.push_back({static_cast<double>(n + 1), t.epsilon[n], t.alpha[n],
                      static_cast<double>(t.cg_iterations[n]), t.derivative[n]});
    write_csv(out / "trajectory.csv", {"n", "epsilon", "alpha", "J", "dalpha_dJ"}, rows);
    const auto fp = estimate_fixed_point(t, static_cast<std::size_t>(eval_window));
    summary["mode"] = mode;
    summary["final_epsilon"] = run.controller.epsilon();
    summary["eval_steps"] = fp.samples;
    summary["alpha"] = fp.mean_alpha;
    summary["J"] = fp.mean_j;
    summary["dalpha_dJ"] = fp.dalpha_dj;
    summary["fixed_point_residual"] = fp.residual;
    summary["slope_degenerate"] = fp.degenerate;
  }
  write_json(out / "summary.json", summary);
  return summary;
}

// ---------------------------------------------------------------------------
// superres

namespace {

Json gibbs_summary(const GibbsResult& r) {
  return {{"gamma_y_mean", r.gamma_y_mean}, {"gamma_y_std", r.gamma_y_std},
          {"gamma_x_mean", r.gamma_x_mean}, {"gamma_x_std", r.gamma_x_std},
          {"pixel_index", r.tracked_pixel}, {"pixel_mean", r.pixel_mean},
          {"pixel_std", r.pixel_std},       {"peak_cg_iterations", r.peak_cg_iterations},
          {"mean_acceptance", r.mean_acceptance}};
}

void write_chains(const fs::path& path, const GibbsResult& r) {
  std::vector<std::vector<double>> rows;
  rows.reserve(r.gamma_y.size());
  for (std::size_t i = 0; i < r.gamma_y.size(); ++i)
    rows.push_back({static_cast<double>(i + 1), r.gamma_y[i], r.gamma_x[i], r.alpha[i],
                    static_cast<double>(r.cg_iterations[i]), r.epsilon[i], r.pixel[i]});
  write_csv(path, {"iter", "gamma_y", "gamma_x", "alpha", "cg_iters", "epsilon", "x_i"}, rows);
}

}  // namespace

Json cmd_superres(RunConfig& c) {
  const auto seed = read_seed(c);
  const fs::path out = read_out(c);
  const std::string input = c.text("input", "");
  SuperResConfig model_cfg;
  if (input.empty()) model_cfg.hi_res = parse_dims(c.text("dims", "64x64"));
  model_cfg.frames = static_cast<int>(c.integer("frames", 2));
  model_cfg.factor = static_cast<int>(c.integer("factor", 2));
  model_cfg.fwhm = c.number("fwhm", 4.0);
  model_cfg.snr_db = c.number("snr_db", 20.0);
  GibbsOptions gopts;
  gopts.iterations = c.integer("iterations", 1000);
  gopts.burn_in = c.integer("burn_in", 100);
  const long pixel = c.integer("pixel", -1);
  const std::string sampler_name = c.text("sampler", "arjpo");
  XSampler sampler;
  if (sampler_name == "arjpo") {
    AdaptiveRjpoSampler a;
    a.alpha_t = c.number("alpha_t", 0.99);
    a.initial_epsilon = c.number("epsilon", 1e-4);
    a.k0 = c.number("k0", 1.0);
    a.kappa = c.number("kappa", 0.5);
    sampler = a;
  } else if (sampler_name == "tpo") {
    sampler = TpoSampler{c.number("epsilon", 1e-4), 0};
  } else if (sampler_name == "epo") {
    sampler = ExactSampler{c.number("tolerance", 1e-12), 1024};
  } else {
    throw ConfigError("sampler must be arjpo, tpo or epo");
  }
  const bool reference = c.flag("reference", false);
  c.reject_unknown();

  if (gopts.iterations <= gopts.burn_in)
    throw ArgumentError("iterations must exceed burn_in");
  if (gopts.burn_in < 0) throw ConfigError("burn_in must be nonnegative");
  if (const auto* a = std::get_if<AdaptiveRjpoSampler>(&sampler))
    AdaptController(a->initial_epsilon, a->k0, a->kappa, TargetRate{a->alpha_t});
  if (const auto* t = std::get_if<TpoSampler>(&sampler); t && !(t->epsilon > 0.0))
    throw ConfigError("epsilon must be positive");

  Eigen::VectorXd truth;
  if (!input.empty()) {
    const GrayImage img = read_pgm(input);
    model_cfg.hi_res = img.dims;
    truth = img.pixels;
  }
  const SuperResModel model(model_cfg);
  if (truth.size() == 0) truth = phantom(model_cfg.hi_res);
  if (pixel >= model.n()) throw ConfigError("pixel index outside the image");
  if (pixel >= 0) gopts.tracked_pixel = pixel;

  ensure_directory(out);
  Json extra;
  extra["model"] = {{"laplacian_stencil", "[[0,-1,0],[-1,4,-1],[0,-1,0]] circulant"},
                    {"psf", "separable Laplace, discarded mass < 1e-4, sum 1"},
                    {"psf_size", {model.psf_kernel().rows(), model.psf_kernel().cols()}},
                    {"frame_offsets", "(f mod factor, floor(f / factor) mod factor)"},
                    {"n", model.n()},
                    {"m", model.m()}};
  write_metadata(out, c, seed, extra);

  const RngStream root(seed);
  RngStream data_stream = root.split(0);
  const Observations obs = synthesize(model, truth, data_stream);
  write_pgm16(out / "truth.pgm", truth, model.hi_dims());
  write_pgm16(out / "observed_frame0.pgm", obs.y.head(model.low_dims().size()), model.low_dims());

  Json summary;
  summary["empirical_snr_db"] = empirical_snr_db(model, truth, obs);
  summary["noise_precision"] = obs.noise_std > 0 ? 1.0 / (obs.noise_std * obs.noise_std) : 0.0;

  // The reference run reuses the Gibbs stream, so both samplers see the same
  // gamma variates and perturbations.
  RngStream gibbs_stream = root.split(1);
  auto t0 = std::chrono::steady_clock::now();
  const GibbsResult r = run_gibbs(model, obs.y, gopts, sampler, gibbs_stream);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_chains(out / "chains.csv", r);
  write_pgm16(out / "posterior_mean.pgm", r.posterior_mean, model.hi_dims());
  summary["sampler"] = sampler_name;
  summary["run"] = gibbs_summary(r);
  summary["run"]["wall_time_s"] = wall;

  if (reference) {
    RngStream ref_stream = root.split(1);
    t0 = std::chrono::steady_clock::now();
    const GibbsResult ref = run_gibbs(model, obs.y, gopts, ExactSampler{}, ref_stream);
    const double ref_wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_chains(out / "reference_chains.csv", ref);
    write_pgm16(out / "reference_mean.pgm", ref.posterior_mean, model.hi_dims());
    summary["reference"] = gibbs_summary(ref);
    summary["reference"]["wall_time_s"] = ref_wall;
    summary["relative_deviation"] = {
        {"gamma_y", std::abs(r.gamma_y_mean - ref.gamma_y_mean) / ref.gamma_y_mean},
        {"gamma_x", std::abs(r.gamma_x_mean - ref.gamma_x_mean) / ref.gamma_x_mean}};
  }
  write_json(out / "summary.json", summary);
  return summary;
}

Json run_command(RunConfig& config) {
  const std::string& cmd = config.command();
  if (cmd == "toy") return cmd_toy(config);
  if (cmd == "curve") return cmd_curve(config);
  if (cmd == "adapt") return cmd_adapt(config);
  if (cmd == "superres") return cmd_superres(config);
  throw ConfigError("unknown subcommand '" + cmd + "'");
}

}  // namespace rjpo
