#pragma once

#include "sat/external.hpp"
#include "sat/solver.hpp"

#include <cstdlib>
#include <memory>
#include <string>

namespace keylock::sat {

/// Solver selection: "builtin" (or empty) for the CDCL solver, anything else is a command
/// line for an external solver. KEYLOCK_SOLVER, when set, overrides `choice`.
inline std::unique_ptr<Session> make_session(std::string choice = "builtin")
{
  if (const char* env = std::getenv("KEYLOCK_SOLVER"); env && *env) choice = env;
  if (choice.empty() || choice == "builtin") return std::make_unique<CdclSolver>();
  return std::make_unique<ExternalSolver>(choice);
}

inline std::unique_ptr<Session> new_session(const Cnf& cnf, const std::string& choice = "builtin")
{
  auto s = make_session(choice);
  s->add_cnf(cnf);
  return s;
}

/// One-shot solve of a formula.
inline SolveResult solve(const Cnf& cnf, std::span<const Literal> assumptions = {}, Deadline deadline = {})
{
  CdclSolver s(cnf);
  s.set_deadline(deadline);
  return s.solve(assumptions);
}

} // namespace keylock::sat
