#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mpf/errors.hpp"
#include "mpf/model.hpp"

namespace mpf {

// y_{1:T}, plus the true latent states when the series is synthetic.
template <class State = double, class Obs = double>
struct ObservationSeries {
  std::vector<Obs> observations;
  std::optional<std::vector<State>> ground_truth;

  std::size_t t_max() const { return observations.size(); }
};

// Simulates the generative model for t_max steps. Deterministic given seed.
template <StateSpaceModel M>
ObservationSeries<typename M::State, typename M::Obs> generate_synthetic(const M& model,
                                                                         std::size_t t_max,
                                                                         std::uint64_t seed) {
  if (t_max < 1) throw std::invalid_argument("generate_synthetic: t_max must be >= 1");
  auto rng = make_rng(seed);
  ObservationSeries<typename M::State, typename M::Obs> series;
  series.observations.reserve(t_max);
  std::vector<typename M::State> truth;
  truth.reserve(t_max);
  typename M::State x = model.sample_initial(rng);
  for (std::size_t t = 1; t <= t_max; ++t) {
    if (t > 1) x = model.sample_transition(x, static_cast<int>(t), rng);
    truth.push_back(x);
    series.observations.push_back(model.sample_observation(x, static_cast<int>(t), rng));
  }
  series.ground_truth = std::move(truth);
  return series;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Reads a scalar observation series from CSV: UTF-8, one timestep per row,
// one value per row, optional single header row. Ground truth is absent.
inline ObservationSeries<double, double> load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open series file: " + path);
  ObservationSeries<double, double> series;
  std::string line;
  std::size_t row = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++row;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (text.find(',') != std::string_view::npos)
      throw ParseError("row " + std::to_string(row) + ": expected a single column", row);
    const auto value = detail::parse_double(text);
    if (!value) {
      if (first_data_row) {  // header row
        first_data_row = false;
        continue;
      }
      throw ParseError("row " + std::to_string(row) + ": malformed numeric field '" +
                           std::string(text) + "'",
                       row);
    }
    first_data_row = false;
    series.observations.push_back(*value);
  }
  if (series.observations.empty()) throw ParseError("empty series file: " + path);
  return series;
}

// Mean-corrected log returns, r_t = 100 (log p_t - log p_{t-1}) minus their
// mean. The usual preprocessing that turns an exchange-rate close series
// into the observation series of the stochastic volatility model.
inline std::vector<double> sv_returns_transform(const std::vector<double>& prices) {
  if (prices.size() < 2)
    throw std::invalid_argument("sv_returns_transform: need at least 2 prices");
  std::vector<double> returns(prices.size() - 1);
  for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !(prices[i + 1] > 0.0))
      throw std::invalid_argument("sv_returns_transform: prices must be positive");
    returns[i] = 100.0 * (std::log(prices[i + 1]) - std::log(prices[i]));
  }
  double m = 0.0;
  for (double r : returns) m += r;
  m /= static_cast<double>(returns.size());
  for (double& r : returns) r -= m;
  return returns;
}

}  // namespace mpf
