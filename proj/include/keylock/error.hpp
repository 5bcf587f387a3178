#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace keylock {

enum class ErrorCode {
  unknown_gate,
  duplicate_driver,
  undeclared_net,
  arity_mismatch,
  cyclic_netlist,
  cycle_under_key,
  insufficient_paths,
  insufficient_nets,
  too_many_inputs,
  bad_size,
  embedding_mismatch,
  wrong_topology,
  interface_mismatch,
  malformed_header,
  literal_out_of_range,
  bound_violated,
  twisted_logic,
  match_failed,
  cycle_budget_exceeded,
  timeout,
  io,
};

inline std::string_view to_string(ErrorCode code)
{
  switch (code) {
  case ErrorCode::unknown_gate: return "UnknownGate";
  case ErrorCode::duplicate_driver: return "DuplicateDriver";
  case ErrorCode::undeclared_net: return "UndeclaredNet";
  case ErrorCode::arity_mismatch: return "ArityMismatch";
  case ErrorCode::cyclic_netlist: return "CyclicNetlist";
  case ErrorCode::cycle_under_key: return "CycleUnderKey";
  case ErrorCode::insufficient_paths: return "InsufficientPaths";
  case ErrorCode::insufficient_nets: return "InsufficientNets";
  case ErrorCode::too_many_inputs: return "TooManyInputs";
  case ErrorCode::bad_size: return "BadSize";
  case ErrorCode::embedding_mismatch: return "EmbeddingMismatch";
  case ErrorCode::wrong_topology: return "WrongTopology";
  case ErrorCode::interface_mismatch: return "InterfaceMismatch";
  case ErrorCode::malformed_header: return "MalformedHeader";
  case ErrorCode::literal_out_of_range: return "LiteralOutOfRange";
  case ErrorCode::bound_violated: return "BoundViolated";
  case ErrorCode::twisted_logic: return "TwistedLogic";
  case ErrorCode::match_failed: return "MatchFailed";
  case ErrorCode::cycle_budget_exceeded: return "CycleBudgetExceeded";
  case ErrorCode::timeout: return "Timeout";
  case ErrorCode::io: return "IoError";
  }
  return "Error";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
  {
  }

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Error raised while reading a text format; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(ErrorCode code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message), line_(line)
  {
  }

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace keylock
