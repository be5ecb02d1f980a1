#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace mpf {

// Variance of {N w_i} across particles, population convention (divisor N).
// Zero iff the weights are uniform, regardless of N.
inline double weight_variance(std::span<const double> weights) {
  const double n = static_cast<double>(weights.size());
  double mean = 0.0;
  for (double w : weights) mean += w;  // mean of N*w_i equals sum of w_i
  double acc = 0.0;
  for (double w : weights) {
    const double dev = n * w - mean;
    acc += dev * dev;
  }
  return acc / n;
}

// ESS = 1 / sum w_i^2; equals N iff weights are uniform. Satisfies
// ess * (1 + weight_variance) = N for normalized weights.
inline double effective_sample_size(std::span<const double> weights) {
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  return 1.0 / s2;
}

// Number of distinct source components used at a step: surviving particles
// for SIR/ASIR selection, mixture components chosen for MPF/AMPF.
inline std::size_t unique_count(std::span<const std::uint32_t> ancestry) {
  std::unordered_set<std::uint32_t> seen(ancestry.begin(), ancestry.end());
  return seen.size();
}

template <class State>
double rmse(std::span<const State> estimates, std::span<const State> truth) {
  if (estimates.size() != truth.size())
    throw std::invalid_argument("rmse: estimate/truth length mismatch");
  if (estimates.empty()) throw std::invalid_argument("rmse: empty input");
  double acc = 0.0;
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    const double e = static_cast<double>(estimates[t]) - static_cast<double>(truth[t]);
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

template <class State>
struct StepDiagnostics {
  int t = 1;
  double weight_variance = 0.0;
  std::size_t unique_particles = 0;
  double ess = 0.0;
  State estimate{};
  double step_seconds = 0.0;
};

template <class State>
struct FilterTrace {
  std::vector<StepDiagnostics<State>> steps;
  double total_seconds = 0.0;
};

struct RunSummary {
  std::optional<double> rmse;  // present only with ground truth
  double mean_weight_variance = 0.0;
  double var_weight_variance = 0.0;
  double total_seconds = 0.0;
};

template <class State>
RunSummary summarize_run(const FilterTrace<State>& trace,
                         const std::vector<State>* ground_truth = nullptr) {
  RunSummary s;
  const std::size_t n = trace.steps.size();
  double mean = 0.0;
  for (const auto& step : trace.steps) mean += step.weight_variance;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& step : trace.steps) {
    const double dev = step.weight_variance - mean;
    var += dev * dev;
  }
  s.mean_weight_variance = mean;
  s.var_weight_variance = var / static_cast<double>(n);
  s.total_seconds = trace.total_seconds;
  if (ground_truth) {
    if (ground_truth->size() != n)
      throw std::invalid_argument("summarize_run: ground truth missing or wrong length");
    std::vector<State> est;
    est.reserve(n);
    for (const auto& step : trace.steps) est.push_back(step.estimate);
    s.rmse = rmse<State>(est, *ground_truth);
  }
  return s;
}

}  // namespace mpf
