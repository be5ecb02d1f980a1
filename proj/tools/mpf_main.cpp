// Experiment runner and benchmark harness for the filtering library.
//
//   mpf run   --config cfg.json [--algo sir --algo mpf ...] [overrides]
//   mpf bench --config cfg.json [overrides]
//
// Exit codes: 0 success, 1 config error, 2 all runs failed.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpf/experiment.hpp"

namespace {

struct CliOverrides {
  std::string config;
  std::vector<std::string> algos;
  std::size_t particles = 0;
  std::size_t seeds = 0;
  std::string backend;
  double epsilon = 0.0;
  std::string out;
  std::string model;
  std::string proposal;
  std::size_t t_max = 0;
  std::uint64_t seed = 0;
  std::string data;
  std::string file;
  std::size_t threads = 0;

  CLI::App* cmd = nullptr;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config, "JSON config file");
    c->add_option("--algo", algos, "algorithm: sir|asir|mpf|ampf (repeatable)");
    c->add_option("--particles", particles, "number of particles N");
    c->add_option("--seeds", seeds, "number of independent runs");
    c->add_option("--backend", backend, "kernel backend: naive|dualtree|fgt");
    c->add_option("--epsilon", epsilon, "kernel-sum error tolerance");
    c->add_option("--out", out, "output directory");
    c->add_option("--model", model, "model: ungm|stochvol");
    c->add_option("--proposal", proposal, "proposal: transition_prior|heavy_tail");
    c->add_option("--t-max", t_max, "timesteps for synthetic data");
    c->add_option("--seed", seed, "base RNG seed");
    c->add_option("--data", data, "data source: synthetic|file");
    c->add_option("--file", file, "observation CSV (with --data file)");
    c->add_option("--threads", threads, "worker threads (0 = hardware)");
  }

  mpf::ExperimentConfig resolve() const {
    mpf::ExperimentConfig cfg;
    if (!config.empty()) cfg = mpf::load_config(config);
    if (cmd->count("--algo")) cfg.algorithms = algos;
    if (cmd->count("--particles")) cfg.n_particles = particles;
    if (cmd->count("--seeds")) cfg.n_seeds = seeds;
    if (cmd->count("--backend")) cfg.kernel_backend = backend;
    if (cmd->count("--epsilon")) cfg.epsilon = epsilon;
    if (cmd->count("--out")) cfg.output_dir = out;
    if (cmd->count("--model")) cfg.model = model;
    if (cmd->count("--proposal")) cfg.proposal = proposal;
    if (cmd->count("--t-max")) cfg.t_max = t_max;
    if (cmd->count("--seed")) cfg.seed = seed;
    if (cmd->count("--data")) cfg.data = data;
    if (cmd->count("--file")) {
      cfg.file = file;
      if (!cmd->count("--data")) cfg.data = "file";
    }
    if (cmd->count("--threads")) cfg.threads = threads;
    return cfg;
  }
};

int do_run(const mpf::ExperimentConfig& cfg) {
  const auto result = mpf::run_experiment(cfg);
  std::printf("series %s, output in %s\n", result.series_hash.c_str(), cfg.output_dir.c_str());
  std::printf("%-6s %12s %12s %16s %6s %9s\n", "algo", "rmse_mean", "rmse_var", "weight_var_mean",
              "runs", "failures");
  for (const auto& [name, s] : result.algorithms) {
    std::printf("%-6s %12s %12s %16.3e %6zu %9zu\n", name.c_str(),
                s.rmse_mean ? std::to_string(*s.rmse_mean).c_str() : "-",
                s.rmse_var ? std::to_string(*s.rmse_var).c_str() : "-", s.weight_var_mean, s.runs,
                s.failures);
  }
  for (const auto& rec : result.runs)
    if (rec.status != "ok")
      std::fprintf(stderr, "run %s seed %zu failed: %s\n", rec.algorithm.c_str(), rec.seed_index,
                   rec.status.c_str());
  return result.all_failed() ? 2 : 0;
}

int do_bench(const mpf::ExperimentConfig& cfg) {
  const auto bench = mpf::run_bench(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = (std::filesystem::path(cfg.output_dir) / "bench.csv").string();
  mpf::write_bench_csv(bench, path);
  std::printf("%10s %6s %9s %12s %8s %10s  %s\n", "epsilon", "n", "method", "time_s", "speedup",
              "rmse", "work");
  for (const auto& c : bench.cells)
    std::printf("%10.1e %6zu %9s %12.6f %8.2f %10.4f  pairs=%llu terms=%llu\n", c.epsilon, c.n,
                c.method.c_str(), c.time_s, c.speedup, c.rmse,
                static_cast<unsigned long long>(c.kernel_stats.node_pairs +
                                                c.kernel_stats.direct_pairs),
                static_cast<unsigned long long>(c.kernel_stats.expansion_terms));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal particle filtering experiments"};
  app.require_subcommand(1);

  CliOverrides run_opts, bench_opts;
  auto* run_cmd = app.add_subcommand("run", "run filtering experiments over seeds");
  run_opts.attach(run_cmd);
  auto* bench_cmd = app.add_subcommand("bench", "benchmark kernel backends on the MPF");
  bench_opts.attach(bench_cmd);

  try {
    app.parse(argc, argv);
    if (run_cmd->parsed()) return do_run(run_opts.resolve());
    return do_bench(bench_opts.resolve());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const mpf::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
