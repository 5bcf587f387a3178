#pragma once

// Incremental CDCL solver: two-watched-literal propagation, VSIDS branching with phase
// saving, first-UIP learning with clause minimization, Luby restarts, and activity-based
// learnt clause reduction. Assumptions follow the MiniSat convention.

#include "../cnf.hpp"
#include "../error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace keylock::sat {

enum class Status { sat, unsat, timeout };

inline std::string_view to_string(Status s)
{
  switch (s) {
  case Status::sat: return "SAT";
  case Status::unsat: return "UNSAT";
  case Status::timeout: return "TIMEOUT";
  }
  return "?";
}

struct Stats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
};

using Clock = std::chrono::steady_clock;
using Deadline = std::optional<Clock::time_point>;

struct SolveResult {
  Status status = Status::unsat;
  /// model[v] for v in 1..num_vars (index 0 unused); empty unless SAT.
  std::vector<bool> model;
  /// Counters accumulated during this call only.
  Stats stats;

  [[nodiscard]] bool value(Literal lit) const
  {
    const bool v = model.at(static_cast<std::size_t>(std::abs(lit)));
    return lit > 0 ? v : !v;
  }
};

/// Common contract of the built-in and external solvers.
class Session {
public:
  virtual ~Session() = default;

  [[nodiscard]] virtual int num_vars() const = 0;
  virtual int new_var() = 0;
  virtual void add_clause(std::span<const Literal> clause) = 0;
  virtual SolveResult solve(std::span<const Literal> assumptions = {}) = 0;
  virtual void set_deadline(Deadline deadline) = 0;

  void add_clause(std::initializer_list<Literal> clause) { add_clause(std::span<const Literal>(clause.begin(), clause.size())); }

  void ensure_vars(int count)
  {
    while (num_vars() < count) new_var();
  }

  void add_cnf(const Cnf& cnf)
  {
    ensure_vars(cnf.num_vars());
    for (const auto& c : cnf.clauses()) add_clause(std::span<const Literal>(c));
  }
};

class CdclSolver final : public Session {
public:
  using Session::add_clause;

  CdclSolver() = default;
  explicit CdclSolver(const Cnf& cnf) { add_cnf(cnf); }

  [[nodiscard]] int num_vars() const override { return static_cast<int>(assigns_.size()); }

  int new_var() override
  {
    assigns_.push_back(undef);
    level_.push_back(0);
    reason_.push_back(no_reason);
    activity_.push_back(0.0);
    polarity_.push_back(1);
    seen_.push_back(0);
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(num_vars() - 1);
    return num_vars();
  }

  void add_clause(std::span<const Literal> clause) override
  {
    for (Literal l : clause) {
      if (l == 0 || std::abs(l) > num_vars()) {
        throw Error(ErrorCode::literal_out_of_range,
                    "literal " + std::to_string(l) + " outside 1.." + std::to_string(num_vars()));
      }
    }
#ifndef NDEBUG
    original_.emplace_back(clause.begin(), clause.end());
#endif
    if (!ok_) return;
    cancel_until(0);
    std::vector<Lit> lits;
    lits.reserve(clause.size());
    for (Literal l : clause) lits.push_back(to_lit(l));
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> kept;
    Lit prev = lit_undef;
    for (Lit l : lits) {
      if (value(l) == l_true || l == (prev ^ 1U)) return;
      if (value(l) != l_false && l != prev) kept.push_back(l);
      prev = l;
    }
    if (kept.empty()) {
      ok_ = false;
      return;
    }
    if (kept.size() == 1) {
      enqueue(kept[0], no_reason);
      if (propagate() != no_reason) ok_ = false;
      return;
    }
    attach(new_clause(std::move(kept), false));
  }

  void set_deadline(Deadline deadline) override { deadline_ = deadline; }

  SolveResult solve(std::span<const Literal> assumptions = {}) override
  {
    SolveResult result;
    const Stats before = stats_;
    assumptions_.clear();
    for (Literal l : assumptions) {
      if (l == 0 || std::abs(l) > num_vars()) throw Error(ErrorCode::literal_out_of_range, "assumption out of range");
      assumptions_.push_back(to_lit(l));
    }
    Status status = Status::unsat;
    if (ok_) {
      status = Status::timeout;
      for (int restart = 0;; ++restart) {
        const auto budget = static_cast<std::uint64_t>(luby(restart) * restart_base);
        const auto s = search(budget);
        if (s) {
          status = *s;
          break;
        }
        if (expired()) break;
      }
    }
    if (status == Status::sat) {
      result.model.assign(static_cast<std::size_t>(num_vars()) + 1, false);
      for (int v = 0; v < num_vars(); ++v) result.model[static_cast<std::size_t>(v) + 1] = assigns_[v] == l_true;
#ifndef NDEBUG
      for (const auto& c : original_) {
        bool sat = false;
        for (Literal l : c) sat = sat || result.value(l);
        if (!sat) throw std::logic_error("solver returned a model violating a clause");
      }
#endif
    }
    cancel_until(0);
    result.status = status;
    result.stats.decisions = stats_.decisions - before.decisions;
    result.stats.conflicts = stats_.conflicts - before.conflicts;
    result.stats.propagations = stats_.propagations - before.propagations;
    return result;
  }

  [[nodiscard]] const Stats& total_stats() const { return stats_; }

private:
  using Lit = std::uint32_t;
  using CRef = std::uint32_t;
  static constexpr std::int8_t l_true = 1, l_false = 0, undef = -1;
  static constexpr CRef no_reason = ~CRef{0};
  static constexpr Lit lit_undef = ~Lit{0};
  static constexpr double restart_base = 100.0;

  struct ClauseData {
    std::vector<Lit> lits;
    double activity = 0.0;
    bool learnt = false;
    bool removed = false;
  };

  struct Watcher {
    CRef cref;
    Lit blocker;
  };

  static Lit to_lit(Literal l) { return (static_cast<Lit>(std::abs(l) - 1) << 1U) | (l < 0 ? 1U : 0U); }
  static int var(Lit l) { return static_cast<int>(l >> 1U); }
  static bool sign(Lit l) { return (l & 1U) != 0; }

  [[nodiscard]] std::int8_t value(Lit l) const
  {
    const auto a = assigns_[var(l)];
    if (a == undef) return undef;
    return static_cast<std::int8_t>(a ^ static_cast<std::int8_t>(sign(l)));
  }

  [[nodiscard]] int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  bool expired() const { return deadline_ && Clock::now() >= *deadline_; }

  static double luby(int x)
  {
    int size = 1, seq = 0;
    while (size < x + 1) {
      ++seq;
      size = 2 * size + 1;
    }
    while (size - 1 != x) {
      size = (size - 1) >> 1;
      --seq;
      x = x % size;
    }
    return std::pow(2.0, seq);
  }

  CRef new_clause(std::vector<Lit> lits, bool learnt)
  {
    CRef ref;
    if (!free_.empty()) {
      ref = free_.back();
      free_.pop_back();
      clauses_[ref] = ClauseData{std::move(lits), 0.0, learnt, false};
    } else {
      ref = static_cast<CRef>(clauses_.size());
      clauses_.push_back(ClauseData{std::move(lits), 0.0, learnt, false});
    }
    if (learnt) learnts_.push_back(ref);
    return ref;
  }

  void attach(CRef ref)
  {
    const auto& c = clauses_[ref].lits;
    watches_[c[0] ^ 1U].push_back({ref, c[1]});
    watches_[c[1] ^ 1U].push_back({ref, c[0]});
  }

  void enqueue(Lit l, CRef reason)
  {
    const int v = var(l);
    assigns_[v] = static_cast<std::int8_t>(!sign(l));
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(l);
  }

  CRef propagate()
  {
    CRef conflict = no_reason;
    while (qhead_ < trail_.size()) {
      const Lit p = trail_[qhead_++];
      ++stats_.propagations;
      auto& ws = watches_[p];
      std::size_t i = 0, j = 0;
      const Lit false_lit = p ^ 1U;
      while (i < ws.size()) {
        const Watcher w = ws[i];
        if (value(w.blocker) == l_true) {
          ws[j++] = ws[i++];
          continue;
        }
        auto& c = clauses_[w.cref];
        if (c.removed) {
          ++i;
          continue;
        }
        auto& lits = c.lits;
        if (lits[0] == false_lit) std::swap(lits[0], lits[1]);
        ++i;
        const Lit first = lits[0];
        if (first != w.blocker && value(first) == l_true) {
          ws[j++] = {w.cref, first};
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < lits.size(); ++k) {
          if (value(lits[k]) != l_false) {
            std::swap(lits[1], lits[k]);
            watches_[lits[1] ^ 1U].push_back({w.cref, first});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = {w.cref, first};
        if (value(first) == l_false) {
          conflict = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
      if (conflict != no_reason) break;
    }
    return conflict;
  }

  void cancel_until(int level)
  {
    if (decision_level() <= level) return;
    for (auto c = static_cast<std::ptrdiff_t>(trail_.size()) - 1; c >= trail_lim_[level]; --c) {
      const int v = var(trail_[c]);
      assigns_[v] = undef;
      reason_[v] = no_reason;
      polarity_[v] = static_cast<char>(sign(trail_[c]));
      if (heap_index_[v] < 0) heap_insert(v);
    }
    trail_.resize(trail_lim_[level]);
    trail_lim_.resize(level);
    qhead_ = trail_.size();
  }

  // VSIDS

  void bump_var(int v)
  {
    if ((activity_[v] += var_inc_) > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_index_[v] >= 0) heap_up(heap_index_[v]);
  }

  void bump_clause(ClauseData& c)
  {
    if ((c.activity += cla_inc_) > 1e20) {
      for (CRef r : learnts_) clauses_[r].activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  bool heap_less(int a, int b) const { return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b); }

  void heap_up(int i)
  {
    const int v = heap_[i];
    while (i > 0) {
      const int parent = (i - 1) >> 1;
      if (!heap_less(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_index_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  void heap_down(int i)
  {
    const int v = heap_[i];
    const int size = static_cast<int>(heap_.size());
    while (2 * i + 1 < size) {
      int child = 2 * i + 1;
      if (child + 1 < size && heap_less(heap_[child + 1], heap_[child])) ++child;
      if (!heap_less(heap_[child], v)) break;
      heap_[i] = heap_[child];
      heap_index_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  void heap_insert(int v)
  {
    heap_index_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_index_[v]);
  }

  int heap_pop()
  {
    const int top = heap_[0];
    heap_index_[top] = -1;
    const int last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_index_[last] = 0;
      heap_down(0);
    }
    return top;
  }

  Lit pick_branch()
  {
    while (!heap_.empty()) {
      const int v = heap_pop();
      if (assigns_[v] == undef) return (static_cast<Lit>(v) << 1U) | static_cast<Lit>(polarity_[v]);
    }
    return lit_undef;
  }

  // Conflict analysis

  bool redundant(Lit p, std::uint32_t abstract_levels, std::vector<Lit>& to_clear)
  {
    std::vector<Lit> stack{p};
    const auto top = to_clear.size();
    while (!stack.empty()) {
      const Lit q = stack.back();
      stack.pop_back();
      const auto& c = clauses_[reason_[var(q)]].lits;
      for (std::size_t i = 1; i < c.size(); ++i) {
        const Lit l = c[i];
        const int v = var(l);
        if (seen_[v] || level_[v] == 0) continue;
        if (reason_[v] != no_reason && ((1U << (level_[v] & 31)) & abstract_levels)) {
          seen_[v] = 1;
          stack.push_back(l);
          to_clear.push_back(l);
        } else {
          for (auto k = top; k < to_clear.size(); ++k) seen_[var(to_clear[k])] = 0;
          to_clear.resize(top);
          return false;
        }
      }
    }
    return true;
  }

  void analyze(CRef conflict, std::vector<Lit>& learnt, int& backtrack_level)
  {
    learnt.assign(1, lit_undef);
    int pending = 0;
    Lit p = lit_undef;
    auto index = static_cast<std::ptrdiff_t>(trail_.size()) - 1;
    do {
      auto& c = clauses_[conflict];
      if (c.learnt) bump_clause(c);
      for (std::size_t k = (p == lit_undef ? 0 : 1); k < c.lits.size(); ++k) {
        const Lit q = c.lits[k];
        const int v = var(q);
        if (seen_[v] || level_[v] == 0) continue;
        bump_var(v);
        seen_[v] = 1;
        if (level_[v] >= decision_level()) {
          ++pending;
        } else {
          learnt.push_back(q);
        }
      }
      while (!seen_[var(trail_[index])]) --index;
      p = trail_[index--];
      conflict = reason_[var(p)];
      seen_[var(p)] = 0;
      --pending;
    } while (pending > 0);
    learnt[0] = p ^ 1U;

    std::vector<Lit> to_clear(learnt.begin(), learnt.end());
    std::uint32_t abstract_levels = 0;
    for (std::size_t i = 1; i < learnt.size(); ++i) abstract_levels |= 1U << (level_[var(learnt[i])] & 31);
    std::size_t j = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      if (reason_[var(learnt[i])] == no_reason || !redundant(learnt[i], abstract_levels, to_clear)) {
        learnt[j++] = learnt[i];
      }
    }
    learnt.resize(j);

    if (learnt.size() == 1) {
      backtrack_level = 0;
    } else {
      std::size_t max_i = 1;
      for (std::size_t i = 2; i < learnt.size(); ++i) {
        if (level_[var(learnt[i])] > level_[var(learnt[max_i])]) max_i = i;
      }
      std::swap(learnt[1], learnt[max_i]);
      backtrack_level = level_[var(learnt[1])];
    }
    for (Lit l : to_clear) seen_[var(l)] = 0;
  }

  void reduce_learnts()
  {
    std::sort(learnts_.begin(), learnts_.end(), [&](CRef a, CRef b) {
      const auto& ca = clauses_[a];
      const auto& cb = clauses_[b];
      if ((ca.lits.size() > 2) != (cb.lits.size() > 2)) return ca.lits.size() > 2;
      return ca.activity < cb.activity;
    });
    const std::size_t half = learnts_.size() / 2;
    std::vector<CRef> kept;
    for (std::size_t i = 0; i < learnts_.size(); ++i) {
      const CRef r = learnts_[i];
      auto& c = clauses_[r];
      const bool locked = value(c.lits[0]) == l_true && reason_[var(c.lits[0])] == r;
      if (i < half && c.lits.size() > 2 && !locked) {
        c.removed = true;
        c.lits.clear();
        c.lits.shrink_to_fit();
        dead_.push_back(r);
      } else {
        kept.push_back(r);
      }
    }
    learnts_ = std::move(kept);
    for (auto& ws : watches_) {
      std::erase_if(ws, [&](const Watcher& w) { return clauses_[w.cref].removed; });
    }
    for (CRef r : dead_) free_.push_back(r);
    dead_.clear();
  }

  /// Returns a final status, or nullopt when the conflict budget for this restart ran out.
  std::optional<Status> search(std::uint64_t conflict_budget)
  {
    std::uint64_t conflicts = 0;
    std::vector<Lit> learnt;
    for (;;) {
      const CRef conflict = propagate();
      if (conflict != no_reason) {
        ++stats_.conflicts;
        ++conflicts;
        if (decision_level() == 0) {
          ok_ = false;
          return Status::unsat;
        }
        int backtrack = 0;
        analyze(conflict, learnt, backtrack);
        cancel_until(backtrack);
        if (learnt.size() == 1) {
          enqueue(learnt[0], no_reason);
        } else {
          const CRef r = new_clause(learnt, true);
          attach(r);
          bump_clause(clauses_[r]);
          enqueue(learnt[0], r);
        }
        var_inc_ /= 0.95;
        cla_inc_ /= 0.999;
        if ((stats_.conflicts & 255U) == 0 && expired()) return Status::timeout;
        continue;
      }
      if (conflicts >= conflict_budget) {
        cancel_until(0);
        return std::nullopt;
      }
      if (static_cast<double>(learnts_.size()) >= max_learnts_ + static_cast<double>(trail_.size())) {
        reduce_learnts();
        max_learnts_ *= 1.1;
      }
      Lit next = lit_undef;
      while (decision_level() < static_cast<int>(assumptions_.size())) {
        const Lit a = assumptions_[decision_level()];
        if (value(a) == l_true) {
          trail_lim_.push_back(static_cast<std::ptrdiff_t>(trail_.size()));
        } else if (value(a) == l_false) {
          return Status::unsat;
        } else {
          next = a;
          break;
        }
      }
      if (next == lit_undef) {
        ++stats_.decisions;
        if ((stats_.decisions & 1023U) == 0 && expired()) return Status::timeout;
        next = pick_branch();
        if (next == lit_undef) return Status::sat;
      }
      trail_lim_.push_back(static_cast<std::ptrdiff_t>(trail_.size()));
      enqueue(next, no_reason);
    }
  }

  std::vector<ClauseData> clauses_;
  std::vector<CRef> learnts_;
  std::vector<CRef> free_;
  std::vector<CRef> dead_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<std::int8_t> assigns_;
  std::vector<int> level_;
  std::vector<CRef> reason_;
  std::vector<double> activity_;
  std::vector<char> polarity_;
  std::vector<char> seen_;
  std::vector<int> heap_;
  std::vector<int> heap_index_;
  std::vector<Lit> trail_;
  std::vector<std::ptrdiff_t> trail_lim_;
  std::vector<Lit> assumptions_;
  std::size_t qhead_ = 0;
  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  double max_learnts_ = 2000.0;
  bool ok_ = true;
  Stats stats_;
  Deadline deadline_;
#ifndef NDEBUG
  std::vector<Clause> original_;
#endif
};

} // namespace keylock::sat
