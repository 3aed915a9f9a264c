#pragma once

#include <stdexcept>
#include <string>

namespace pevsched {

enum class ErrorCode {
  parse,
  malformed_topology,
  capacity_infeasible,
  invalid_window,
  infeasible_scenario,
  invalid_configuration,
  no_solution,
  io,
  internal,
};

const char* to_string(ErrorCode code) noexcept;

/// Base of every exception thrown by the library. The C API maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCode::parse, what) {}
};

class TopologyError : public Error {
 public:
  explicit TopologyError(const std::string& what) : Error(ErrorCode::malformed_topology, what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ErrorCode::capacity_infeasible, what) {}
};

class WindowError : public Error {
 public:
  explicit WindowError(const std::string& what) : Error(ErrorCode::invalid_window, what) {}
};

class InfeasibleScenario : public Error {
 public:
  explicit InfeasibleScenario(const std::string& what) : Error(ErrorCode::infeasible_scenario, what) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what) : Error(ErrorCode::invalid_configuration, what) {}
};

class NoSolution : public Error {
 public:
  explicit NoSolution(const std::string& what) : Error(ErrorCode::no_solution, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorCode::internal, what) {}
};

}  // namespace pevsched
