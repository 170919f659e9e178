// Exception types shared across the library.

#ifndef MOTAVG_ERRORS_HPP
#define MOTAVG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace motavg {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Rotation logarithm requested within the guard band of the pi branch cut.
struct AngleNearPiError : Error {
  explicit AngleNearPiError(const std::string& msg) : Error(msg) {}
};

struct GraphError : Error {
  explicit GraphError(const std::string& msg) : Error(msg) {}
};

struct DisconnectedError : GraphError {
  explicit DisconnectedError(const std::string& msg) : GraphError(msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

struct RankDeficientError : SolverError {
  explicit RankDeficientError(const std::string& msg) : SolverError(msg) {}
};

struct NonFiniteError : SolverError {
  explicit NonFiniteError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace motavg

#endif  // MOTAVG_ERRORS_HPP
