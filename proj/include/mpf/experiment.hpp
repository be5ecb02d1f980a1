#pragma once

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mpf/errors.hpp"
#include "mpf/filter.hpp"
#include "mpf/stats.hpp"

namespace mpf {

// Flat experiment configuration; file keys match the member names (with
// `threshold` and `backend` accepted as aliases). CLI flags override file
// values.
struct ExperimentConfig {
  // model
  std::string model = "ungm";
  double sigma_x = std::sqrt(10.0);
  double sigma_y = 1.0;
  double ungm_initial_mean = 0.0;
  double phi = 0.9731;
  double sigma_eta = 0.1726;
  double beta = 0.6338;
  // data
  std::string data = "synthetic";  // synthetic | file
  std::size_t t_max = 100;
  std::uint64_t data_seed = 99;
  std::string file;
  bool returns_transform = false;  // treat file rows as prices, filter log returns
  // proposal
  std::string proposal = "transition_prior";  // transition_prior | heavy_tail
  double proposal_inflation = 2.0;
  // filter
  std::vector<std::string> algorithms;
  std::size_t n_particles = 500;
  std::string resampler = "stratified";
  double resample_threshold = 1.0;
  std::string kernel_backend = "naive";
  double epsilon = 1e-3;
  std::uint64_t seed = 1;
  // harness
  std::size_t n_seeds = 1;
  std::string output_dir = "out";
  std::size_t threads = 0;  // 0: hardware concurrency
  // bench grid
  std::vector<std::size_t> bench_particles = {500, 1500, 5000};
  std::vector<double> bench_epsilons = {1e-3};
  std::vector<std::string> bench_backends = {"naive", "fgt"};
  std::size_t bench_t_max = 20;
  std::size_t bench_repeats = 3;
  std::string bench_proposal = "heavy_tail";  // keeps the two mixture sums distinct
};

namespace detail {

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "sir") return Algorithm::sir;
  if (s == "asir") return Algorithm::asir;
  if (s == "mpf") return Algorithm::mpf;
  if (s == "ampf") return Algorithm::ampf;
  throw ConfigError("algorithms", "unknown algorithm '" + s + "'");
}

inline ResampleScheme parse_resampler(const std::string& s) {
  if (s == "multinomial") return ResampleScheme::multinomial;
  if (s == "stratified") return ResampleScheme::stratified;
  throw ConfigError("resampler", "unknown scheme '" + s + "'");
}

inline KernelBackend parse_backend(const std::string& s) {
  if (s == "naive") return KernelBackend::naive;
  if (s == "dualtree") return KernelBackend::dualtree;
  if (s == "fgt") return KernelBackend::fgt;
  throw ConfigError("kernel_backend", "unknown backend '" + s + "'");
}

inline std::string fnv1a_hex(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return std::string(buf);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

template <class F>
void parallel_for(std::size_t n_jobs, std::size_t n_threads, F&& body) {
  if (n_threads <= 1 || n_jobs <= 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const std::size_t count = std::min(n_threads, n_jobs);
  workers.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.model != "ungm" && cfg.model != "stochvol")
    throw ConfigError("model", "must be 'ungm' or 'stochvol'");
  if (cfg.data != "synthetic" && cfg.data != "file")
    throw ConfigError("data", "must be 'synthetic' or 'file'");
  if (cfg.data == "synthetic" && cfg.t_max < 1) throw ConfigError("t_max", "must be >= 1");
  if (cfg.data == "file" && cfg.file.empty()) throw ConfigError("file", "path required");
  if (cfg.algorithms.empty()) throw ConfigError("algorithms", "at least one algorithm required");
  for (const auto& a : cfg.algorithms) detail::parse_algorithm(a);
  if (cfg.n_particles < 1) throw ConfigError("n_particles", "must be >= 1");
  detail::parse_resampler(cfg.resampler);
  if (cfg.resample_threshold < 0.0 || cfg.resample_threshold > 1.0)
    throw ConfigError("resample_threshold", "must be in [0, 1]");
  detail::parse_backend(cfg.kernel_backend);
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds", "must be >= 1");
  if (cfg.proposal != "transition_prior" && cfg.proposal != "heavy_tail")
    throw ConfigError("proposal", "must be 'transition_prior' or 'heavy_tail'");
  if (!(cfg.proposal_inflation > 0.0)) throw ConfigError("proposal_inflation", "must be > 0");
  if (cfg.model == "stochvol" && !(std::abs(cfg.phi) < 1.0))
    throw ConfigError("phi", "must satisfy |phi| < 1");
  if (cfg.model == "stochvol" && (!(cfg.sigma_eta > 0.0) || !(cfg.beta > 0.0)))
    throw ConfigError("sigma_eta", "sigma_eta and beta must be > 0");
  if (cfg.model == "ungm" && (!(cfg.sigma_x >= 0.0) || !(cfg.sigma_y >= 0.0)))
    throw ConfigError("sigma_x", "sigma_x and sigma_y must be >= 0");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "model") cfg.model = value.get<std::string>();
      else if (key == "sigma_x") cfg.sigma_x = value.get<double>();
      else if (key == "sigma_y") cfg.sigma_y = value.get<double>();
      else if (key == "ungm_initial_mean") cfg.ungm_initial_mean = value.get<double>();
      else if (key == "phi") cfg.phi = value.get<double>();
      else if (key == "sigma_eta") cfg.sigma_eta = value.get<double>();
      else if (key == "beta") cfg.beta = value.get<double>();
      else if (key == "data") cfg.data = value.get<std::string>();
      else if (key == "t_max") cfg.t_max = value.get<std::size_t>();
      else if (key == "data_seed") cfg.data_seed = value.get<std::uint64_t>();
      else if (key == "file") cfg.file = value.get<std::string>();
      else if (key == "returns_transform") cfg.returns_transform = value.get<bool>();
      else if (key == "proposal") cfg.proposal = value.get<std::string>();
      else if (key == "proposal_inflation") cfg.proposal_inflation = value.get<double>();
      else if (key == "algorithms") cfg.algorithms = value.get<std::vector<std::string>>();
      else if (key == "n_particles") cfg.n_particles = value.get<std::size_t>();
      else if (key == "resampler") cfg.resampler = value.get<std::string>();
      else if (key == "resample_threshold" || key == "threshold")
        cfg.resample_threshold = value.get<double>();
      else if (key == "kernel_backend" || key == "backend")
        cfg.kernel_backend = value.get<std::string>();
      else if (key == "epsilon") cfg.epsilon = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "n_seeds") cfg.n_seeds = value.get<std::size_t>();
      else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
      else if (key == "threads") cfg.threads = value.get<std::size_t>();
      else if (key == "bench_particles") cfg.bench_particles = value.get<std::vector<std::size_t>>();
      else if (key == "bench_epsilons") cfg.bench_epsilons = value.get<std::vector<double>>();
      else if (key == "bench_backends") cfg.bench_backends = value.get<std::vector<std::string>>();
      else if (key == "bench_t_max") cfg.bench_t_max = value.get<std::size_t>();
      else if (key == "bench_repeats") cfg.bench_repeats = value.get<std::size_t>();
      else if (key == "bench_proposal") cfg.bench_proposal = value.get<std::string>();
      else throw ConfigError(key, "unknown key");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, std::string("bad value: ") + e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("parse failure: ") + e.what());
  }
  return config_from_json(j);
}

using ScalarSeries = ObservationSeries<double, double>;

inline ScalarSeries build_series(const ExperimentConfig& cfg) {
  if (cfg.data == "file") {
    auto series = load_series(cfg.file);
    if (cfg.returns_transform)
      series.observations = sv_returns_transform(series.observations);
    return series;
  }
  if (cfg.model == "ungm") {
    UngmModel m{cfg.sigma_x, cfg.sigma_y, cfg.ungm_initial_mean, std::nullopt};
    return generate_synthetic(m, cfg.t_max, cfg.data_seed);
  }
  StochVolModel m{cfg.phi, cfg.sigma_eta, cfg.beta};
  return generate_synthetic(m, cfg.t_max, cfg.data_seed);
}

inline std::string series_hash(const ScalarSeries& series) {
  return detail::fnv1a_hex(series.observations.data(),
                           series.observations.size() * sizeof(double));
}

inline FilterConfig make_filter_config(const ExperimentConfig& cfg, const std::string& algo,
                                       std::uint64_t run_seed) {
  FilterConfig fc;
  fc.n_particles = cfg.n_particles;
  fc.algorithm = detail::parse_algorithm(algo);
  fc.resampler = detail::parse_resampler(cfg.resampler);
  fc.resample_threshold = cfg.resample_threshold;
  fc.kernel_backend = detail::parse_backend(cfg.kernel_backend);
  fc.epsilon = cfg.epsilon;
  fc.seed = run_seed;
  return fc;
}

// Instantiates model x proposal and runs one filter over the series.
inline FilterTrace<double> run_one(const ExperimentConfig& cfg, const ScalarSeries& series,
                                   const FilterConfig& fc, KernelSumStats* stats = nullptr) {
  auto dispatch = [&](const auto& model) {
    if (cfg.proposal == "heavy_tail") {
      ScaledTransitionProposal proposal(model, cfg.proposal_inflation);
      return run_filter(series, model, proposal, fc, stats);
    }
    TransitionPriorProposal proposal(model);
    return run_filter(series, model, proposal, fc, stats);
  };
  if (cfg.model == "ungm") {
    UngmModel m{cfg.sigma_x, cfg.sigma_y, cfg.ungm_initial_mean, std::nullopt};
    return dispatch(m);
  }
  StochVolModel m{cfg.phi, cfg.sigma_eta, cfg.beta};
  return dispatch(m);
}

inline void write_trace_csv(const std::string& path, const FilterTrace<double>& trace,
                            const std::vector<double>* truth) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "t,estimate,truth,weight_variance,unique_particles,ess,step_ms\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << s.t << ',' << detail::format_double(s.estimate) << ',';
    if (truth) out << detail::format_double((*truth)[i]);
    out << ',' << detail::format_double(s.weight_variance) << ',' << s.unique_particles << ','
        << detail::format_double(s.ess) << ',' << detail::format_double(s.step_seconds * 1e3)
        << '\n';
  }
}

struct RunRecord {
  std::string algorithm;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or the error message
  std::optional<RunSummary> summary;
  std::string trace_file;
};

struct AlgorithmSummary {
  std::optional<double> rmse_mean;
  std::optional<double> rmse_var;
  double weight_var_mean = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
};

struct ExperimentResult {
  std::string series_hash;
  std::map<std::string, AlgorithmSummary> algorithms;
  std::vector<RunRecord> runs;

  bool all_failed() const {
    for (const auto& r : runs)
      if (r.status == "ok") return false;
    return true;
  }
};

// Runs every (algorithm, seed) combination over one shared observation
// series, writes per-run trace CSVs and a summary JSON into output_dir.
// Individual filter failures are recorded, not fatal.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto series = build_series(cfg);
  const bool has_truth = series.ground_truth.has_value();
  std::filesystem::create_directories(cfg.output_dir);

  ExperimentResult result;
  result.series_hash = series_hash(series);

  const std::size_t n_jobs = cfg.algorithms.size() * cfg.n_seeds;
  result.runs.resize(n_jobs);
  const std::size_t n_threads =
      cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  detail::parallel_for(n_jobs, n_threads, [&](std::size_t job) {
    const std::size_t ai = job / cfg.n_seeds;
    const std::size_t si = job % cfg.n_seeds;
    RunRecord& rec = result.runs[job];
    rec.algorithm = cfg.algorithms[ai];
    rec.seed_index = si;
    rec.seed = splitmix64(cfg.seed + 0x1000 * ai) + si;
    rec.trace_file = rec.algorithm + "_seed" + std::to_string(si) + ".csv";
    try {
      const auto fc = make_filter_config(cfg, rec.algorithm, rec.seed);
      const auto trace = run_one(cfg, series, fc);
      rec.summary = summarize_run(trace, has_truth ? &*series.ground_truth : nullptr);
      write_trace_csv((std::filesystem::path(cfg.output_dir) / rec.trace_file).string(), trace,
                      has_truth ? &*series.ground_truth : nullptr);
    } catch (const std::exception& e) {
      rec.status = e.what();
    }
  });

  for (const auto& algo : cfg.algorithms) {
    AlgorithmSummary& summary = result.algorithms[algo];
    std::vector<double> rmses, wvars;
    for (const auto& rec : result.runs) {
      if (rec.algorithm != algo) continue;
      if (rec.status != "ok") {
        summary.failures++;
        continue;
      }
      summary.runs++;
      if (rec.summary->rmse) rmses.push_back(*rec.summary->rmse);
      wvars.push_back(rec.summary->mean_weight_variance);
    }
    if (!rmses.empty()) {
      summary.rmse_mean = mean(rmses);
      summary.rmse_var = sample_variance(rmses);
    }
    if (!wvars.empty()) summary.weight_var_mean = mean(wvars);
  }

  nlohmann::ordered_json j;
  j["series_hash"] = result.series_hash;
  nlohmann::ordered_json algos;
  for (const auto& [name, s] : result.algorithms) {
    nlohmann::ordered_json a;
    if (s.rmse_mean) a["rmse_mean"] = *s.rmse_mean; else a["rmse_mean"] = nullptr;
    if (s.rmse_var) a["rmse_var"] = *s.rmse_var; else a["rmse_var"] = nullptr;
    a["weight_var_mean"] = s.weight_var_mean;
    a["runs"] = s.runs;
    a["failures"] = s.failures;
    algos[name] = a;
  }
  j["algorithms"] = algos;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& rec : result.runs) {
    nlohmann::ordered_json r;
    r["algorithm"] = rec.algorithm;
    r["seed_index"] = rec.seed_index;
    r["seed"] = rec.seed;
    r["series_hash"] = result.series_hash;
    r["status"] = rec.status;
    r["trace_file"] = rec.trace_file;
    runs.push_back(r);
  }
  j["runs"] = runs;
  std::ofstream out(std::filesystem::path(cfg.output_dir) / "summary.json");
  out << j.dump(2) << '\n';
  return result;
}

struct BenchCell {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::string method;
  double time_s = 0.0;   // median per-step seconds, mean over repeats
  double speedup = 1.0;  // naive time / method time at the same (epsilon, n)
  double rmse = 0.0;     // mean over repeats
  std::vector<double> run_rmse;
  KernelSumStats kernel_stats;  // work counters summed over repeats
};

struct BenchResult {
  std::vector<BenchCell> cells;

  const BenchCell* find(double eps, std::size_t n, const std::string& method) const {
    for (const auto& c : cells)
      if (c.epsilon == eps && c.n == n && c.method == method) return &c;
    return nullptr;
  }
};

// MPF benchmark over the (epsilon, n_particles, backend) grid on a fixed
// synthetic series. Per-step wall clock, median over steps, first step
// excluded as warm-up; runs are sequential so timings stay clean. The same
// filter seeds are reused across backends, so RMSE differences isolate the
// kernel approximation error.
inline BenchResult run_bench(const ExperimentConfig& cfg) {
  ExperimentConfig base = cfg;
  base.algorithms = {"mpf"};
  base.t_max = cfg.bench_t_max;
  base.proposal = cfg.bench_proposal;
  validate_config(base);
  for (const auto& b : cfg.bench_backends) detail::parse_backend(b);
  if (cfg.bench_repeats < 1) throw ConfigError("bench_repeats", "must be >= 1");
  if (cfg.bench_particles.empty()) throw ConfigError("bench_particles", "must be non-empty");
  if (cfg.bench_epsilons.empty()) throw ConfigError("bench_epsilons", "must be non-empty");

  const auto series = build_series(base);
  BenchResult result;
  for (double eps : cfg.bench_epsilons) {
    for (std::size_t n : cfg.bench_particles) {
      for (const auto& method : cfg.bench_backends) {
        BenchCell cell;
        cell.epsilon = eps;
        cell.n = n;
        cell.method = method;
        std::vector<double> step_times;
        for (std::size_t rep = 0; rep < cfg.bench_repeats; ++rep) {
          ExperimentConfig rcfg = base;
          rcfg.n_particles = n;
          rcfg.epsilon = eps;
          rcfg.kernel_backend = method;
          auto fc = make_filter_config(rcfg, "mpf", splitmix64(cfg.seed ^ (n * 2654435761ULL)) + rep);
          const auto trace = run_one(rcfg, series, fc, &cell.kernel_stats);
          std::vector<double> steps;
          for (std::size_t i = 1; i < trace.steps.size(); ++i)  // skip warm-up step
            steps.push_back(trace.steps[i].step_seconds);
          std::sort(steps.begin(), steps.end());
          step_times.push_back(steps[steps.size() / 2]);
          const auto summary = summarize_run(trace, series.ground_truth ? &*series.ground_truth
                                                                        : nullptr);
          cell.run_rmse.push_back(summary.rmse.value_or(0.0));
        }
        cell.time_s = mean(step_times);
        cell.rmse = mean(cell.run_rmse);
        result.cells.push_back(std::move(cell));
      }
      const BenchCell* naive = result.find(eps, n, "naive");
      for (auto& c : result.cells) {
        if (c.epsilon == eps && c.n == n)
          c.speedup = naive && naive->time_s > 0.0 ? naive->time_s / c.time_s : 1.0;
      }
    }
  }
  return result;
}

inline void write_bench_csv(const BenchResult& bench, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bench file: " + path);
  out << "epsilon,n,method,time_s,speedup,rmse\n";
  for (const auto& c : bench.cells) {
    out << detail::format_double(c.epsilon) << ',' << c.n << ',' << c.method << ','
        << detail::format_double(c.time_s) << ',' << detail::format_double(c.speedup) << ','
        << detail::format_double(c.rmse) << '\n';
  }
}

}  // namespace mpf
