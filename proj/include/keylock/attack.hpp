#pragma once

// Oracle-guided SAT attack, cycle-avoidance preconditioning, the CP&SAT pipeline and
// key matching.

#include "cnf.hpp"
#include "error.hpp"
#include "lock.hpp"
#include "preprocess.hpp"
#include "sat.hpp"
#include "simulate.hpp"
#include "tseitin.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace keylock {

/// Query-only access to the unlocked circuit.
class Oracle {
public:
  explicit Oracle(const Netlist& original) : netlist_(&original), sim_(original, {}) {}

  BitVector query(const BitVector& pi)
  {
    ++queries_;
    std::vector<std::uint64_t> words(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) words[i] = pi[i] ? 1 : 0;
    const auto out = sim_.run(words);
    BitVector r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) r[i] = (out[i] & 1U) != 0;
    return r;
  }

  [[nodiscard]] std::size_t queries() const { return queries_; }
  [[nodiscard]] const Netlist& netlist() const { return *netlist_; }

private:
  const Netlist* netlist_;
  Simulator sim_;
  std::size_t queries_ = 0;
};

enum class AttackMethod : std::uint8_t { sat, cpsat };
enum class AttackStatus : std::uint8_t { solved, timeout };

inline std::string_view to_string(AttackMethod m) { return m == AttackMethod::sat ? "SAT" : "CPSAT"; }
inline std::string_view to_string(AttackStatus s) { return s == AttackStatus::solved ? "Solved" : "Timeout"; }

struct IterationStats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
  double seconds = 0.0;
};

/// Clause counts of one keyRB's sub-formula before and after preprocessing.
struct KeyRbCnfStats {
  std::size_t keyrb = 0;
  std::string topology;
  bool encoded = false;
  int vars_before = 0;
  std::size_t clauses_before = 0;
  /// After one-layer encoding (or plain gate-level encoding when not encodable).
  int vars_encoded = 0;
  std::size_t clauses_encoded = 0;
  int vars_after = 0;
  std::size_t clauses_after = 0;

  [[nodiscard]] double reduction() const
  {
    return clauses_after == 0 ? 0.0 : static_cast<double>(clauses_before) / static_cast<double>(clauses_after);
  }
  [[nodiscard]] double bva_reduction() const
  {
    return clauses_after == 0 ? 0.0 : static_cast<double>(clauses_encoded) / static_cast<double>(clauses_after);
  }
};

struct AttackReport {
  AttackMethod method = AttackMethod::sat;
  AttackStatus status = AttackStatus::timeout;
  std::size_t iterations = 0;
  std::vector<BitVector> dips;
  std::vector<BitVector> responses;
  BitVector key;
  double wall_seconds = 0.0;
  std::vector<IterationStats> per_iteration;
  CnfStats cnf_before;
  CnfStats cnf_after;
  std::vector<KeyRbCnfStats> keyrb_stats;
  std::size_t cycle_clauses = 0;
  std::size_t match_retries = 0;
  std::vector<std::string> notes;
};

struct AttackBudget {
  std::chrono::milliseconds timeout{std::chrono::hours(1)};
  std::string solver = "builtin";
  std::size_t cycle_budget = 2000000;
  EncodeOptions encode;
  std::size_t max_match_retries = 64;
};

// ---------------------------------------------------------------------------------
// Cycle preconditioning

/// A conditional connection: `from` reaches `to` when `label` holds.
struct ConditionalEdge {
  NetId from = no_net;
  NetId to = no_net;
  Literal label = 0;
};

/// Clauses forbidding every cycle of conditional edges. Gates for which `skip` returns
/// true are ignored (their behaviour is described by `extra` edges instead); a MUX2
/// whose select is a key net contributes one conditional edge per data pin, labelled
/// by `key_literal(select)` or its negation. Every other gate is an unconditional edge.
inline std::vector<Clause> cycle_clauses(const Netlist& n, const std::function<bool(GateId)>& skip,
                                         std::vector<ConditionalEdge> extra,
                                         const std::function<Literal(NetId)>& key_literal, std::size_t budget)
{
  std::vector<char> is_key(n.num_nets(), 0);
  for (NetId k : n.key_inputs()) is_key[k] = 1;
  std::vector<char> conditional(n.num_gates(), 0);
  std::set<std::pair<NetId, NetId>> constant_edges;
  for (GateId g = 0; g < n.num_gates(); ++g) {
    if (skip && skip(g)) {
      conditional[g] = 1;
      continue;
    }
    const auto& gate = n.gate(g);
    if (gate.type == GateType::MUX2 && is_key[gate.inputs[0]]) {
      conditional[g] = 1;
      const Literal k = key_literal(gate.inputs[0]);
      extra.push_back({gate.inputs[1], gate.output, -k});
      extra.push_back({gate.inputs[2], gate.output, k});
    } else if (gate.type == GateType::MUX2 && n.net(gate.inputs[0]).kind == NetKind::constant) {
      conditional[g] = 1;
      constant_edges.emplace(gate.inputs[n.net(gate.inputs[0]).constant_value ? 2 : 1], gate.output);
    }
  }
  // Switch nodes are the targets of conditional edges.
  std::map<NetId, int> node_of;
  std::vector<NetId> nodes;
  for (const auto& e : extra) {
    if (node_of.emplace(e.to, static_cast<int>(nodes.size())).second) nodes.push_back(e.to);
  }
  std::vector<std::vector<std::size_t>> edges_from_net(n.num_nets());
  for (std::size_t i = 0; i < extra.size(); ++i) edges_from_net[extra[i].from].push_back(i);
  const auto fanout = n.fanouts();
  struct Arc {
    int to;
    Literal label;
  };
  std::vector<std::vector<Arc>> arcs(nodes.size());
  std::vector<int> seen(n.num_nets(), -1);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    std::vector<NetId> stack{nodes[a]};
    seen[nodes[a]] = static_cast<int>(a);
    while (!stack.empty()) {
      const NetId net = stack.back();
      stack.pop_back();
      for (std::size_t ei : edges_from_net[net]) arcs[a].push_back({node_of.at(extra[ei].to), extra[ei].label});
      for (GateId g : fanout[net]) {
        const NetId out = n.gate(g).output;
        if (conditional[g]) {
          if (!constant_edges.contains({net, out})) continue;
        }
        if (seen[out] != static_cast<int>(a)) {
          seen[out] = static_cast<int>(a);
          stack.push_back(out);
        }
      }
    }
  }
  // Simple cycles rooted at their smallest node, pruned on contradictory labels.
  std::set<Clause> found;
  std::size_t explored = 0;
  std::vector<char> on_path(nodes.size(), 0);
  std::vector<Literal> labels;
  auto consistent = [&](Literal l) { return std::find(labels.begin(), labels.end(), -l) == labels.end(); };
  std::function<void(int, int)> dfs = [&](int start, int v) {
    for (const auto& arc : arcs[static_cast<std::size_t>(v)]) {
      if (arc.to < start || !consistent(arc.label)) continue;
      if (++explored > budget) {
        throw Error(ErrorCode::cycle_budget_exceeded,
                    "more than " + std::to_string(budget) + " cycle search steps (" + std::to_string(found.size()) +
                        " cycles so far)");
      }
      labels.push_back(arc.label);
      if (arc.to == start) {
        Clause c;
        for (Literal l : labels) c.push_back(-l);
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        found.insert(std::move(c));
      } else if (!on_path[static_cast<std::size_t>(arc.to)]) {
        on_path[static_cast<std::size_t>(arc.to)] = 1;
        dfs(start, arc.to);
        on_path[static_cast<std::size_t>(arc.to)] = 0;
      }
      labels.pop_back();
    }
  };
  for (int s = 0; s < static_cast<int>(nodes.size()); ++s) {
    on_path[static_cast<std::size_t>(s)] = 1;
    dfs(s, s);
    on_path[static_cast<std::size_t>(s)] = 0;
  }
  // Drop clauses subsumed by shorter ones.
  std::vector<Clause> sorted(found.begin(), found.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Clause& a, const Clause& b) { return a.size() < b.size(); });
  std::vector<Clause> result;
  for (const auto& c : sorted) {
    const bool subsumed = std::any_of(result.begin(), result.end(), [&](const Clause& r) {
      return std::includes(c.begin(), c.end(), r.begin(), r.end());
    });
    if (!subsumed) result.push_back(c);
  }
  return result;
}

/// Cycle-avoidance clauses over the design's key bits: literal ±(i + 1) stands for key
/// bit i being 1 / 0.
inline std::vector<Clause> cycle_precondition(const LockedDesign& d, std::size_t budget = 2000000)
{
  std::vector<int> index(d.netlist.num_nets(), 0);
  const auto& keys = d.netlist.key_inputs();
  for (std::size_t i = 0; i < keys.size(); ++i) index[keys[i]] = static_cast<int>(i) + 1;
  return cycle_clauses(d.netlist, {}, {}, [&](NetId k) { return index[k]; }, budget);
}

// ---------------------------------------------------------------------------------
// Attack loop

namespace detail {

inline double seconds_since(sat::Clock::time_point t0)
{
  return std::chrono::duration<double>(sat::Clock::now() - t0).count();
}

/// Incremental miter over a circuit template. Key-copy constraints are instantiated for
/// both key copies; each DIP adds two constrained circuit copies.
class MiterSession {
public:
  MiterSession(const CircuitCnf& circuit, const std::string& solver, sat::Deadline deadline)
      : circuit_(circuit), solver_(sat::make_session(solver))
  {
    solver_->set_deadline(deadline);
    Cnf base;
    pi_ = fresh(base, circuit.pi_vars.size());
    k1_ = fresh(base, circuit.key_vars.size());
    k2_ = fresh(base, circuit.key_vars.size());
    std::vector<int> po1, po2;
    for (int copy = 0; copy < 2; ++copy) {
      const auto& keys = copy == 0 ? k1_ : k2_;
      VarRenaming r(circuit.cnf.num_vars());
      r.fix_all(circuit.pi_vars, pi_);
      r.fix_all(circuit.key_vars, keys);
      append_renamed(base, circuit.cnf, r);
      auto& po = copy == 0 ? po1 : po2;
      for (int v : circuit.po_vars) po.push_back(r.map(v, base));
      add_key_constraints(base, keys);
    }
    act_ = base.new_var();
    Clause any{-act_};
    for (std::size_t i = 0; i < po1.size(); ++i) {
      const int diff = base.new_var();
      encode_gate(base, GateType::XOR, {po1[i], po2[i]}, diff);
      any.push_back(diff);
    }
    base.add_clause(std::move(any));
    solver_->add_cnf(base);
  }

  /// Solves the miter; on SAT returns the distinguishing input.
  std::optional<BitVector> find_dip(sat::SolveResult& result)
  {
    const Literal a = act_;
    result = solver_->solve(std::span<const Literal>(&a, 1));
    if (result.status != sat::Status::sat) return std::nullopt;
    BitVector dip;
    for (int v : pi_) dip.push_back(result.value(v));
    return dip;
  }

  /// Whether two keys allowed so far still disagree on `dip`.
  bool distinguishes(const BitVector& dip)
  {
    std::vector<Literal> assume{act_};
    for (std::size_t i = 0; i < pi_.size(); ++i) assume.push_back(dip[i] ? pi_[i] : -pi_[i]);
    return solver_->solve(assume).status == sat::Status::sat;
  }

  /// Constrains both key copies to reproduce `response` on `dip`.
  void add_io_constraint(const BitVector& dip, const BitVector& response)
  {
    for (const auto& keys : {k1_, k2_}) add_copy(dip, response, keys);
  }

  /// A key (template key variable values) consistent with all I/O constraints.
  sat::SolveResult solve_key(std::span<const Literal> extra = {})
  {
    std::vector<Literal> assume{-act_};
    assume.insert(assume.end(), extra.begin(), extra.end());
    return solver_->solve(assume);
  }

  void block(const Clause& over_key1)
  {
    std::vector<Literal> c;
    for (Literal l : over_key1) c.push_back(l > 0 ? k1_[static_cast<std::size_t>(l - 1)] : -k1_[static_cast<std::size_t>(-l - 1)]);
    solver_->add_clause(std::span<const Literal>(c));
  }

  [[nodiscard]] const std::vector<int>& key1() const { return k1_; }
  [[nodiscard]] const std::vector<int>& pis() const { return pi_; }

private:
  static std::vector<int> fresh(Cnf& c, std::size_t count)
  {
    std::vector<int> v(count);
    for (auto& x : v) x = c.new_var();
    return v;
  }

  void add_key_constraints(Cnf& target, const std::vector<int>& keys)
  {
    VarRenaming rk(circuit_.key_constraints.num_vars());
    rk.fix_all(circuit_.key_vars, keys);
    append_renamed(target, circuit_.key_constraints, rk);
  }

  void add_copy(const BitVector& dip, const BitVector& response, const std::vector<int>& keys)
  {
    Cnf part(solver_->num_vars());
    VarRenaming r(circuit_.cnf.num_vars());
    r.fix_all(circuit_.key_vars, keys);
    std::vector<int> pi(circuit_.pi_vars.size()), po;
    for (auto& v : pi) v = part.new_var();
    r.fix_all(circuit_.pi_vars, pi);
    append_renamed(part, circuit_.cnf, r);
    for (int v : circuit_.po_vars) po.push_back(r.map(v, part));
    for (std::size_t i = 0; i < pi.size(); ++i) part.add_clause({dip[i] ? pi[i] : -pi[i]});
    for (std::size_t i = 0; i < po.size(); ++i) part.add_clause({response[i] ? po[i] : -po[i]});
    solver_->add_cnf(part);
  }

  const CircuitCnf& circuit_;
  std::unique_ptr<sat::Session> solver_;
  std::vector<int> pi_, k1_, k2_;
  int act_ = 0;
};

/// Runs DIP iterations until the miter is UNSAT (returns true) or time runs out.
inline bool run_dip_loop(MiterSession& miter, Oracle& oracle, AttackReport& report)
{
  for (;;) {
    const auto t0 = sat::Clock::now();
    sat::SolveResult r;
    const auto dip = miter.find_dip(r);
    IterationStats it{r.stats.decisions, r.stats.conflicts, r.stats.propagations, seconds_since(t0)};
    if (r.status == sat::Status::timeout) return false;
    if (!dip) {
      report.per_iteration.push_back(it);
      return true;
    }
    const auto response = oracle.query(*dip);
    miter.add_io_constraint(*dip, response);
    report.dips.push_back(*dip);
    report.responses.push_back(response);
    report.per_iteration.push_back(it);
    report.iterations = report.dips.size();
  }
}

inline CnfStats combined_stats(const CircuitCnf& c)
{
  CnfStats s;
  s.vars = c.cnf.num_vars();
  s.clauses = c.cnf.num_clauses() + c.key_constraints.num_clauses();
  s.ratio = s.vars == 0 ? 0.0 : static_cast<double>(s.clauses) / s.vars;
  return s;
}

} // namespace detail

/// Plain oracle-guided SAT attack on the gate-level formula.
inline AttackReport sat_attack(const LockedDesign& d, Oracle& oracle, const AttackBudget& budget = {})
{
  const auto t0 = sat::Clock::now();
  AttackReport report;
  report.method = AttackMethod::sat;
  CircuitCnf circuit = circuit_cnf(d.netlist);
  report.cnf_before = detail::combined_stats(circuit);
  if (!d.netlist.is_acyclic()) {
    std::vector<int> var_of_key(d.netlist.num_nets(), 0);
    for (std::size_t i = 0; i < circuit.key_vars.size(); ++i) var_of_key[d.netlist.key_inputs()[i]] = circuit.key_vars[i];
    const auto clauses = cycle_clauses(d.netlist, {}, {}, [&](NetId k) { return var_of_key[k]; }, budget.cycle_budget);
    for (const auto& c : clauses) circuit.key_constraints.add_clause(c);
    report.cycle_clauses = clauses.size();
  }
  report.cnf_after = detail::combined_stats(circuit);
  detail::MiterSession miter(circuit, budget.solver, t0 + budget.timeout);
  if (detail::run_dip_loop(miter, oracle, report)) {
    const auto r = miter.solve_key();
    if (r.status == sat::Status::sat) {
      for (int v : miter.key1()) report.key.push_back(r.value(v));
      report.status = AttackStatus::solved;
    } else if (r.status == sat::Status::unsat) {
      report.notes.push_back("accumulated I/O constraints admit no key");
    }
  }
  report.wall_seconds = detail::seconds_since(t0);
  return report;
}

// ---------------------------------------------------------------------------------
// Key matching

/// Key bits (in rb.key_layout order) that make each output o show the requested source
/// selection. Uses ceil(log2 n) + 1 symbolic patterns: input i carries binary(i) on the
/// code patterns and 0 on the extra one. Validated by 1,000 random simulations.
inline BitVector key_match(const KeyRB& rb, const std::vector<Selection>& selections, std::uint64_t seed = 1)
{
  if (rb.topology == Topology::interlock) throw Error(ErrorCode::wrong_topology, "InterLock blocks are not pure routing");
  if (selections.size() != rb.size) throw Error(ErrorCode::interface_mismatch, "one selection per output expected");
  const std::size_t n = rb.num_inputs;
  const std::size_t bits = log2_ceil(n);
  const auto enc = tseitin(rb.circuit);
  Cnf cnf(0);
  std::vector<int> keys;
  const auto& template_keys = rb.circuit.key_inputs();
  for (std::size_t i = 0; i < template_keys.size(); ++i) keys.push_back(cnf.new_var());
  for (std::size_t p = 0; p <= bits; ++p) {
    VarRenaming r(enc.cnf.num_vars());
    for (std::size_t i = 0; i < template_keys.size(); ++i) r.fix(enc.map.var(template_keys[i]), keys[i]);
    append_renamed(cnf, enc.cnf, r);
    auto value_of_input = [&](std::size_t i) { return p < bits && ((i >> p) & 1U) != 0; };
    for (std::size_t i = 0; i < rb.input_nets.size(); ++i) {
      const int v = r.map(enc.map.var(rb.input_nets[i]), cnf);
      cnf.add_clause({value_of_input(i) ? v : -v});
    }
    for (NetId ex : rb.ex_nets) cnf.add_clause({-r.map(enc.map.var(ex), cnf)});
    for (std::size_t o = 0; o < rb.size; ++o) {
      const auto& s = selections[o];
      if (s.input < 0 || static_cast<std::size_t>(s.input) >= n) {
        throw Error(ErrorCode::match_failed, "output " + std::to_string(o) + " has no source");
      }
      const bool want = value_of_input(static_cast<std::size_t>(s.input)) != s.inverted;
      const int v = r.map(enc.map.var(rb.output_nets[o]), cnf);
      cnf.add_clause({want ? v : -v});
    }
  }
  const auto result = sat::solve(cnf);
  if (result.status != sat::Status::sat) throw Error(ErrorCode::match_failed, "selection is not realizable");
  BitVector key;
  for (int v : keys) key.push_back(result.value(v));
  // Validation by simulation.
  const Simulator sim(rb.circuit, key);
  std::mt19937_64 rng(seed);
  const auto& pis = rb.circuit.primary_inputs();
  std::vector<std::size_t> word_of_input;
  for (NetId in : rb.input_nets) word_of_input.push_back(static_cast<std::size_t>(std::find(pis.begin(), pis.end(), in) - pis.begin()));
  std::vector<std::uint64_t> values;
  std::vector<std::uint64_t> words(pis.size());
  for (int round = 0; round < 16; ++round) {
    for (auto& w : words) w = rng();
    sim.run_into(words, values);
    for (std::size_t o = 0; o < rb.size; ++o) {
      const std::uint64_t want = words[word_of_input[static_cast<std::size_t>(selections[o].input)]] ^
                                 (selections[o].inverted ? ~std::uint64_t{0} : 0);
      if (values[rb.output_nets[o]] != want) throw Error(ErrorCode::match_failed, "matched key fails simulation on output " + std::to_string(o));
    }
  }
  return key;
}

// ---------------------------------------------------------------------------------
// CP&SAT

namespace detail {

/// A key of `n` reproducing every recorded response (gate-level formula, one circuit
/// copy per DIP).
inline std::optional<BitVector> solve_gate_level_key(const Netlist& n, const std::vector<BitVector>& dips,
                                                     const std::vector<BitVector>& responses,
                                                     const std::string& solver, sat::Deadline deadline,
                                                     std::size_t cycle_budget)
{
  const auto circuit = circuit_cnf(n);
  Cnf cnf;
  std::vector<int> keys(circuit.key_vars.size());
  for (auto& k : keys) k = cnf.new_var();
  if (!n.is_acyclic()) {
    std::vector<int> var_of_key(n.num_nets(), 0);
    for (std::size_t i = 0; i < keys.size(); ++i) var_of_key[n.key_inputs()[i]] = keys[i];
    for (const auto& c : cycle_clauses(n, {}, {}, [&](NetId k) { return var_of_key[k]; }, cycle_budget)) cnf.add_clause(c);
  }
  for (std::size_t d = 0; d < dips.size(); ++d) {
    VarRenaming r(circuit.cnf.num_vars());
    r.fix_all(circuit.key_vars, keys);
    append_renamed(cnf, circuit.cnf, r);
    for (std::size_t i = 0; i < circuit.pi_vars.size(); ++i) {
      const int v = r.map(circuit.pi_vars[i], cnf);
      cnf.add_clause({dips[d][i] ? v : -v});
    }
    for (std::size_t i = 0; i < circuit.po_vars.size(); ++i) {
      const int v = r.map(circuit.po_vars[i], cnf);
      cnf.add_clause({responses[d][i] ? v : -v});
    }
  }
  auto session = sat::make_session(solver);
  session->set_deadline(deadline);
  session->add_cnf(cnf);
  const auto res = session->solve({});
  if (res.status != sat::Status::sat) return std::nullopt;
  BitVector key;
  for (int k : keys) key.push_back(res.value(k));
  return key;
}

} // namespace detail

/// The attack formula after CP&SAT preprocessing.
struct CpSatFormula {
  LockedDesign design;
  CircuitCnf circuit;
  /// Per keyRB: one-layer encoding when encoded.
  std::vector<std::optional<OneLayerEncoding>> encodings;
  /// Per keyRB: positions of its key (or selector) variables in circuit.key_vars.
  std::vector<std::pair<std::size_t, std::size_t>> key_span;
  std::vector<KeyRbCnfStats> stats;
  std::size_t cycle_clauses = 0;
  std::vector<std::string> notes;
};

namespace detail {

inline std::pair<int, std::size_t> group_size(const Cnf& c, const std::string& name)
{
  const auto* g = c.find_group(name);
  if (!g) return {0, 0};
  std::set<int> vars;
  for (std::size_t i = g->begin; i < g->end; ++i) {
    for (Literal l : c.clauses()[i]) vars.insert(std::abs(l));
  }
  return {static_cast<int>(vars.size()), g->size()};
}

inline std::pair<int, std::size_t> groups_size(const Cnf& c, const std::vector<std::string>& names)
{
  std::set<int> vars;
  std::size_t clauses = 0;
  for (const auto& name : names) {
    const auto* g = c.find_group(name);
    if (!g) continue;
    clauses += g->size();
    for (std::size_t i = g->begin; i < g->end; ++i) {
      for (Literal l : c.clauses()[i]) vars.insert(std::abs(l));
    }
  }
  return {static_cast<int>(vars.size()), clauses};
}

} // namespace detail

/// Steps 1–4 of CP&SAT plus cycle preconditioning: detach Full-Lock inverters, encode
/// routing keyRB outputs one layer deep, run BVA per sub-formula, and split key-only
/// clauses into the key constraints.
inline CpSatFormula cpsat_prepare(const LockedDesign& d, const AttackBudget& budget = {})
{
  CpSatFormula f;
  f.design = has_full_lock(d) ? detach_inverters(d) : d;
  const auto& dn = f.design.netlist;
  const auto gate_level = tseitin(d.netlist).cnf;

  std::vector<char> encodable(f.design.keyrbs.size(), 0);
  std::map<int, std::size_t> rb_of_group;
  for (std::size_t r = 0; r < f.design.keyrbs.size(); ++r) {
    const auto& rb = f.design.keyrbs[r];
    encodable[r] = rb.topology != Topology::interlock;
    for (std::size_t g = 0; g < dn.group_names().size(); ++g) {
      if (dn.group_names()[g] == rb.placement.group) rb_of_group[static_cast<int>(g)] = r;
    }
  }
  auto skip = [&](GateId g) {
    const auto it = rb_of_group.find(dn.gate(g).group);
    return it != rb_of_group.end() && encodable[it->second];
  };
  EncodingMap map;
  Cnf cnf;
  append_tseitin(cnf, dn, map, [&](GateId g) { return !skip(g); });

  std::set<int> key_side;
  std::vector<int> aux_vars;
  f.encodings.resize(f.design.keyrbs.size());
  std::vector<std::vector<std::string>> rb_groups(f.design.keyrbs.size());
  for (std::size_t r = 0; r < f.design.keyrbs.size(); ++r) {
    const auto& rb = f.design.keyrbs[r];
    KeyRbCnfStats st;
    st.keyrb = r;
    st.topology = std::string(to_string(rb.topology));
    std::tie(st.vars_before, st.clauses_before) = detail::group_size(gate_level, rb.placement.group);
    const std::size_t first_key = f.circuit.key_vars.size();
    if (encodable[r]) {
      auto enc = one_layer_linear_encode(f.design, r, cnf, map, budget.encode);
      for (const auto& g : enc.outputs) rb_groups[r].push_back(g.group);
      for (const auto& g : enc.injectivity_groups) rb_groups[r].push_back(g);
      for (int s : enc.selector_vars) {
        f.circuit.key_vars.push_back(s);
        key_side.insert(s);
      }
      f.encodings[r] = std::move(enc);
      st.encoded = true;
    } else {
      rb_groups[r].push_back(rb.placement.group);
      f.notes.push_back("keyRB " + std::to_string(r) + ": TwistedLogic, kept gate-level encoding");
      for (NetId k : rb.placement.keys) {
        f.circuit.key_vars.push_back(map.var(k));
        key_side.insert(map.var(k));
      }
    }
    f.key_span.emplace_back(first_key, f.circuit.key_vars.size() - first_key);
    std::tie(st.vars_encoded, st.clauses_encoded) = detail::groups_size(cnf, rb_groups[r]);
    f.stats.push_back(st);
  }
  // Keys outside any keyRB (none for designs made by lock()) stay ordinary key vars.
  for (NetId k : dn.key_inputs()) {
    if (!key_side.contains(map.var(k)) && std::none_of(f.design.keyrbs.begin(), f.design.keyrbs.end(), [&](const KeyRB& rb) {
          return std::find(rb.placement.keys.begin(), rb.placement.keys.end(), k) != rb.placement.keys.end();
        })) {
      f.circuit.key_vars.push_back(map.var(k));
      key_side.insert(map.var(k));
    }
  }

  for (std::size_t r = 0; r < f.design.keyrbs.size(); ++r) {
    for (const auto& name : rb_groups[r]) {
      const int before = cnf.num_vars();
      auto res = simple_bva(cnf, name);
      cnf = std::move(res.cnf);
      for (int v = before + 1; v <= cnf.num_vars(); ++v) aux_vars.push_back(v);
    }
    std::tie(f.stats[r].vars_after, f.stats[r].clauses_after) = detail::groups_size(cnf, rb_groups[r]);
  }

  // Cycle preconditioning with one edge variable per (output, input) of encoded blocks.
  std::vector<Clause> key_only_extra;
  if (!dn.is_acyclic()) {
    std::vector<ConditionalEdge> edges;
    for (std::size_t r = 0; r < f.design.keyrbs.size(); ++r) {
      if (!f.encodings[r]) continue;
      const auto& rb = f.design.keyrbs[r];
      for (const auto& g : f.encodings[r]->outputs) {
        std::map<int, int> edge_var;
        for (std::size_t k = 0; k < g.selectors.size(); ++k) {
          const int input = g.choices[k].input;
          if (!edge_var.contains(input)) {
            edge_var[input] = cnf.new_var();
            key_side.insert(edge_var[input]);
            edges.push_back({rb.placement.inputs[static_cast<std::size_t>(input)], g.output, edge_var[input]});
          }
          key_only_extra.push_back({-g.selectors[k], edge_var[input]});
        }
      }
    }
    const auto clauses = cycle_clauses(dn, skip, edges, [&](NetId k) { return map.var(k); }, budget.cycle_budget);
    key_only_extra.insert(key_only_extra.end(), clauses.begin(), clauses.end());
    f.cycle_clauses = clauses.size();
  }

  // Key-only clauses: every variable is key-side or an auxiliary that never meets a
  // circuit variable (fixpoint).
  std::set<int> aux(aux_vars.begin(), aux_vars.end());
  auto key_only = [&](const Clause& c) {
    return std::all_of(c.begin(), c.end(), [&](Literal l) { return key_side.contains(std::abs(l)) || aux.contains(std::abs(l)); });
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& c : cnf.clauses()) {
      if (key_only(c)) continue;
      for (Literal l : c) changed |= aux.erase(std::abs(l)) > 0;
    }
  }
  f.circuit.cnf = Cnf(cnf.num_vars());
  f.circuit.key_constraints = Cnf(cnf.num_vars());
  for (const auto& c : cnf.clauses()) (key_only(c) ? f.circuit.key_constraints : f.circuit.cnf).add_clause(c);
  for (const auto& c : key_only_extra) f.circuit.key_constraints.add_clause(c);
  for (NetId pi : dn.primary_inputs()) f.circuit.pi_vars.push_back(map.var(pi));
  for (NetId po : dn.primary_outputs()) f.circuit.po_vars.push_back(map.var(po));
  return f;
}

/// CP&SAT: cpsat_prepare, the DIP loop on the reduced formula, then key matching of the
/// recovered selections. Unrealizable selections are blocked and the key solve retried.
inline AttackReport cp_sat_attack(const LockedDesign& d, Oracle& oracle, const AttackBudget& budget = {})
{
  const auto t0 = sat::Clock::now();
  AttackReport report;
  report.method = AttackMethod::cpsat;
  report.cnf_before = stats(tseitin(d.netlist).cnf);
  auto f = cpsat_prepare(d, budget);
  report.cnf_after = detail::combined_stats(f.circuit);
  report.keyrb_stats = f.stats;
  report.cycle_clauses = f.cycle_clauses;
  report.notes = f.notes;
  detail::MiterSession miter(f.circuit, budget.solver, t0 + budget.timeout);
  if (!detail::run_dip_loop(miter, oracle, report)) {
    report.wall_seconds = detail::seconds_since(t0);
    return report;
  }
  std::optional<BitVector> design_key;
  for (;;) {
    const auto r = miter.solve_key();
    if (r.status != sat::Status::sat) {
      if (r.status == sat::Status::unsat) report.notes.push_back("no realizable selection satisfies the I/O constraints");
      break;
    }
    std::map<NetId, bool> key_value;
    std::vector<Clause> blocking;
    for (std::size_t rb_i = 0; rb_i < f.design.keyrbs.size(); ++rb_i) {
      const auto [first, count] = f.key_span[rb_i];
      const auto& ks = f.design.keyrbs[rb_i].placement.keys;
      if (!f.encodings[rb_i]) {
        for (std::size_t i = 0; i < count; ++i) key_value[ks[i]] = r.value(miter.key1()[first + i]);
        continue;
      }
      std::vector<bool> model(static_cast<std::size_t>(f.circuit.cnf.num_vars()) + 1, false);
      Clause block;
      for (std::size_t i = 0; i < count; ++i) {
        const bool v = r.value(miter.key1()[first + i]);
        model[static_cast<std::size_t>(f.circuit.key_vars[first + i])] = v;
        if (v) block.push_back(-static_cast<Literal>(first + i + 1));
      }
      try {
        const auto k = key_match(f.design.keyrbs[rb_i], decode_selection(*f.encodings[rb_i], model));
        for (std::size_t i = 0; i < k.size(); ++i) key_value[ks[i]] = k[i];
      } catch (const Error& e) {
        if (e.code() != ErrorCode::match_failed) throw;
        blocking.push_back(std::move(block));
      }
    }
    if (blocking.empty()) {
      design_key.emplace();
      for (NetId k : f.design.netlist.key_inputs()) design_key->push_back(key_value.contains(k) && key_value.at(k));
      break;
    }
    if (++report.match_retries > budget.max_match_retries || sat::Clock::now() >= t0 + budget.timeout) {
      report.notes.push_back("key matching: " + std::to_string(report.match_retries - 1) +
                             " unrealizable selections, key solved on the gate-level formula");
      design_key = detail::solve_gate_level_key(f.design.netlist, report.dips, report.responses, budget.solver,
                                                t0 + budget.timeout, budget.cycle_budget);
      break;
    }
    for (const auto& c : blocking) miter.block(c);
  }
  if (design_key) {
    report.key = f.design.fixed_keys.empty() ? *design_key : expand_key(d, f.design, *design_key);
    report.status = AttackStatus::solved;
  }
  report.wall_seconds = detail::seconds_since(t0);
  return report;
}

inline AttackReport run_attack(AttackMethod method, const LockedDesign& d, Oracle& oracle, const AttackBudget& budget = {})
{
  return method == AttackMethod::sat ? sat_attack(d, oracle, budget) : cp_sat_attack(d, oracle, budget);
}

/// Replays a report's DIP trace: index of the first DIP that did not distinguish two
/// keys consistent with the DIPs before it, or nullopt when all were valid.
inline std::optional<std::size_t> first_invalid_dip(const LockedDesign& d, const AttackReport& report,
                                                    const AttackBudget& budget = {})
{
  CircuitCnf circuit;
  if (report.method == AttackMethod::sat) {
    circuit = circuit_cnf(d.netlist);
    if (!d.netlist.is_acyclic()) {
      std::vector<int> var_of_key(d.netlist.num_nets(), 0);
      for (std::size_t i = 0; i < circuit.key_vars.size(); ++i) var_of_key[d.netlist.key_inputs()[i]] = circuit.key_vars[i];
      for (const auto& c : cycle_clauses(d.netlist, {}, {}, [&](NetId k) { return var_of_key[k]; }, budget.cycle_budget)) {
        circuit.key_constraints.add_clause(c);
      }
    }
  } else {
    circuit = cpsat_prepare(d, budget).circuit;
  }
  detail::MiterSession miter(circuit, budget.solver, std::nullopt);
  for (std::size_t i = 0; i < report.dips.size(); ++i) {
    if (!miter.distinguishes(report.dips[i])) return i;
    miter.add_io_constraint(report.dips[i], report.responses[i]);
  }
  return std::nullopt;
}

/// Functional key check against the oracle's circuit.
inline EquivalenceResult verify_attack_key(const LockedDesign& d, const BitVector& key, const Oracle& oracle)
{
  if (key.size() != d.netlist.key_inputs().size()) return {false, {}};
  try {
    return verify_key(d.netlist, oracle.netlist(), key);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::cycle_under_key) return {false, {}};
    throw;
  }
}

} // namespace keylock
