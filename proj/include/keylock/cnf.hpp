#pragma once

#include "error.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace keylock {

using Literal = int;
using Clause = std::vector<Literal>;

/// A named contiguous span of clauses, [begin, end).
struct CnfGroup {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const { return end - begin; }
  bool operator==(const CnfGroup&) const = default;
};

struct CnfStats {
  int vars = 0;
  std::size_t clauses = 0;
  double ratio = 0.0;
};

/// Clause database in DIMACS convention: variables 1..num_vars, negative literal = complement.
class Cnf {
public:
  explicit Cnf(int num_vars = 0) : num_vars_(num_vars) {}

  [[nodiscard]] int num_vars() const { return num_vars_; }
  [[nodiscard]] std::size_t num_clauses() const { return clauses_.size(); }
  [[nodiscard]] const std::vector<Clause>& clauses() const { return clauses_; }
  [[nodiscard]] const std::vector<CnfGroup>& groups() const { return groups_; }

  int new_var() { return ++num_vars_; }
  int new_vars(int count)
  {
    const int first = num_vars_ + 1;
    num_vars_ += count;
    return first;
  }
  void ensure_vars(int count) { num_vars_ = std::max(num_vars_, count); }

  /// Adds a clause after dropping duplicate literals. Tautologies are discarded and
  /// reported by returning false.
  bool add_clause(Clause clause)
  {
    for (Literal l : clause) {
      if (l == 0 || std::abs(l) > num_vars_) {
        throw Error(ErrorCode::literal_out_of_range,
                    "literal " + std::to_string(l) + " outside 1.." + std::to_string(num_vars_));
      }
    }
    Clause normalized;
    normalized.reserve(clause.size());
    for (Literal l : clause) {
      if (std::find(normalized.begin(), normalized.end(), -l) != normalized.end()) return false;
      if (std::find(normalized.begin(), normalized.end(), l) == normalized.end()) normalized.push_back(l);
    }
    clauses_.push_back(std::move(normalized));
    return true;
  }

  bool add_clause(std::initializer_list<Literal> lits) { return add_clause(Clause(lits)); }

  void begin_group(std::string name)
  {
    groups_.push_back(CnfGroup{std::move(name), clauses_.size(), clauses_.size()});
    open_group_ = true;
  }
  void end_group()
  {
    if (open_group_) groups_.back().end = clauses_.size();
    open_group_ = false;
  }
  void add_group(CnfGroup group) { groups_.push_back(std::move(group)); }

  [[nodiscard]] const CnfGroup* find_group(std::string_view name) const
  {
    for (const auto& g : groups_) {
      if (g.name == name) return &g;
    }
    return nullptr;
  }

  /// Appends all clauses of `other` (same variable numbering); its groups are shifted.
  void append(const Cnf& other)
  {
    ensure_vars(other.num_vars());
    const auto offset = clauses_.size();
    for (const auto& c : other.clauses_) clauses_.push_back(c);
    for (auto g : other.groups_) {
      g.begin += offset;
      g.end += offset;
      groups_.push_back(std::move(g));
    }
  }

  [[nodiscard]] CnfStats stats() const
  {
    CnfStats s;
    s.vars = num_vars_;
    s.clauses = clauses_.size();
    s.ratio = num_vars_ == 0 ? 0.0 : static_cast<double>(s.clauses) / num_vars_;
    return s;
  }

  /// Clauses of one group as a standalone formula over the same variable numbering.
  [[nodiscard]] Cnf extract(const CnfGroup& group) const
  {
    Cnf sub(num_vars_);
    sub.clauses_.assign(clauses_.begin() + static_cast<std::ptrdiff_t>(group.begin),
                        clauses_.begin() + static_cast<std::ptrdiff_t>(group.end));
    return sub;
  }

  /// Replaces the clauses of `group` with `replacement`, shifting later groups.
  void replace_group(std::size_t group_index, const std::vector<Clause>& replacement)
  {
    auto& g = groups_.at(group_index);
    const auto old_size = static_cast<std::ptrdiff_t>(g.size());
    const auto delta = static_cast<std::ptrdiff_t>(replacement.size()) - old_size;
    const auto first = clauses_.begin() + static_cast<std::ptrdiff_t>(g.begin);
    clauses_.erase(first, first + old_size);
    clauses_.insert(clauses_.begin() + static_cast<std::ptrdiff_t>(g.begin), replacement.begin(), replacement.end());
    const auto old_end = g.end;
    g.end = g.begin + replacement.size();
    for (auto& other : groups_) {
      if (&other == &g) continue;
      if (other.begin >= old_end) {
        other.begin = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(other.begin) + delta);
        other.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(other.end) + delta);
      }
    }
  }

  std::vector<Clause>& mutable_clauses() { return clauses_; }

private:
  int num_vars_ = 0;
  std::vector<Clause> clauses_;
  std::vector<CnfGroup> groups_;
  bool open_group_ = false;
};

inline CnfStats stats(const Cnf& c) { return c.stats(); }

/// DIMACS text; groups are written as "c group <name> <begin> <end>" comments.
inline std::string to_dimacs(const Cnf& c)
{
  std::ostringstream out;
  for (const auto& g : c.groups()) out << "c group " << g.name << ' ' << g.begin << ' ' << g.end << '\n';
  out << "p cnf " << c.num_vars() << ' ' << c.num_clauses() << '\n';
  for (const auto& clause : c.clauses()) {
    for (Literal l : clause) out << l << ' ';
    out << "0\n";
  }
  return out.str();
}

inline Cnf from_dimacs(std::string_view text)
{
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  long declared_clauses = 0;
  long parsed_clauses = 0;
  Cnf cnf;
  std::vector<CnfGroup> groups;
  Clause current;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "c") {
      std::string tag;
      if (ls >> tag && tag == "group") {
        CnfGroup g;
        if (!(ls >> g.name >> g.begin >> g.end) || g.end < g.begin) {
          throw ParseError(ErrorCode::malformed_header, line_no, "bad group comment");
        }
        groups.push_back(std::move(g));
      }
      continue;
    }
    if (head == "%") break;
    if (head == "p") {
      std::string fmt;
      long vars = -1;
      if (have_header || !(ls >> fmt >> vars >> declared_clauses) || fmt != "cnf" || vars < 0 || declared_clauses < 0) {
        throw ParseError(ErrorCode::malformed_header, line_no, "expected 'p cnf <vars> <clauses>'");
      }
      cnf = Cnf(static_cast<int>(vars));
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(ErrorCode::malformed_header, line_no, "clause before 'p cnf' header");
    std::istringstream lits(line);
    long lit = 0;
    while (lits >> lit) {
      if (lit == 0) {
        for (Literal l : current) {
          if (std::abs(l) > cnf.num_vars()) {
            throw ParseError(ErrorCode::literal_out_of_range, line_no, "literal " + std::to_string(l) + " out of range");
          }
        }
        ++parsed_clauses;
        cnf.add_clause(std::move(current));
        current.clear();
      } else {
        current.push_back(static_cast<Literal>(lit));
      }
    }
    if (!lits.eof()) throw ParseError(ErrorCode::malformed_header, line_no, "non-numeric token");
  }
  if (!have_header) throw ParseError(ErrorCode::malformed_header, line_no, "missing 'p cnf' header");
  if (!current.empty()) throw ParseError(ErrorCode::malformed_header, line_no, "last clause not terminated by 0");
  if (parsed_clauses != declared_clauses) {
    throw ParseError(ErrorCode::malformed_header, line_no,
                     "header declares " + std::to_string(declared_clauses) + " clauses, found " +
                         std::to_string(parsed_clauses));
  }
  for (auto& g : groups) {
    if (g.end > cnf.num_clauses()) throw ParseError(ErrorCode::malformed_header, line_no, "group exceeds clause count");
    cnf.add_group(std::move(g));
  }
  return cnf;
}

} // namespace keylock
