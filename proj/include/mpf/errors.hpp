#pragma once

#include <stdexcept>
#include <string>

namespace mpf {

struct FilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every normalized weight collapsed to zero (all log weights -inf).
struct DegenerateWeightsError : FilterError {
  int time_index;
  explicit DegenerateWeightsError(int t)
      : FilterError("all importance weights are zero at t=" + std::to_string(t)),
        time_index(t) {}
};

struct DegenerateSimulationWeightsError : FilterError {
  int time_index;
  explicit DegenerateSimulationWeightsError(int t)
      : FilterError("all simulation weights are zero at t=" + std::to_string(t)),
        time_index(t) {}
};

// Requested fast backend cannot represent the kernel / density family.
struct KernelBackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  std::size_t row;  // 1-based row in the input file, 0 if not row-specific
  ParseError(std::string msg, std::size_t row_ = 0)
      : std::runtime_error(std::move(msg)), row(row_) {}
};

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& msg)
      : std::runtime_error("config field '" + field_ + "': " + msg), field(std::move(field_)) {}
};

}  // namespace mpf
