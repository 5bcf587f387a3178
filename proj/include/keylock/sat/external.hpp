#pragma once

// Bridge to an external SAT-competition style solver binary. Each solve() writes the
// accumulated clauses plus assumptions (as unit clauses) to a temporary DIMACS file,
// runs `<command> <file>`, and parses the "s" and "v" lines.

#include "solver.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace keylock::sat {

class ExternalSolver final : public Session {
public:
  using Session::add_clause;

  explicit ExternalSolver(std::string command) : command_(std::move(command)) {}

  [[nodiscard]] int num_vars() const override { return cnf_.num_vars(); }
  int new_var() override { return cnf_.new_var(); }

  void add_clause(std::span<const Literal> clause) override
  {
    cnf_.add_clause(Clause(clause.begin(), clause.end()));
  }

  void set_deadline(Deadline deadline) override { deadline_ = deadline; }

  SolveResult solve(std::span<const Literal> assumptions = {}) override
  {
    Cnf query = cnf_;
    for (Literal a : assumptions) query.add_clause({a});
    const auto path = std::filesystem::temp_directory_path() /
                      ("keylock_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
                       std::to_string(++calls_) + ".cnf");
    {
      std::ofstream out(path);
      out << to_dimacs(query);
      if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    }
    std::string cmd;
    if (deadline_) {
      const auto left = std::chrono::duration_cast<std::chrono::seconds>(*deadline_ - Clock::now()).count();
      if (left <= 0) {
        std::filesystem::remove(path);
        return SolveResult{Status::timeout, {}, {}};
      }
      cmd = "timeout -s KILL " + std::to_string(left + 1) + " ";
    }
    cmd += command_ + " '" + path.string() + "' 2>/dev/null";
    std::string output;
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
      char buf[4096];
      std::size_t got = 0;
      while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
      pclose(pipe);
    } else {
      std::filesystem::remove(path);
      throw Error(ErrorCode::io, "cannot run solver '" + command_ + "'");
    }
    std::filesystem::remove(path);
    return parse_output(output, num_vars());
  }

  /// Parses competition output; a missing "s" line is reported as Timeout.
  static SolveResult parse_output(const std::string& text, int num_vars)
  {
    SolveResult r;
    r.status = Status::timeout;
    std::istringstream in(text);
    std::string line;
    std::vector<bool> model(static_cast<std::size_t>(num_vars) + 1, false);
    while (std::getline(in, line)) {
      if (line.rfind("s ", 0) == 0) {
        if (line.find("UNSATISFIABLE") != std::string::npos) {
          r.status = Status::unsat;
        } else if (line.find("SATISFIABLE") != std::string::npos) {
          r.status = Status::sat;
        }
      } else if (line.rfind("v ", 0) == 0) {
        std::istringstream ls(line.substr(2));
        long lit = 0;
        while (ls >> lit) {
          if (lit != 0 && std::abs(lit) <= num_vars) model[static_cast<std::size_t>(std::abs(lit))] = lit > 0;
        }
      }
    }
    if (r.status == Status::sat) r.model = std::move(model);
    return r;
  }

private:
  std::string command_;
  Cnf cnf_;
  Deadline deadline_;
  std::uint64_t calls_ = 0;
};

} // namespace keylock::sat
