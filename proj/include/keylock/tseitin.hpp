#pragma once

// Circuit-to-CNF encoding and miter construction.

#include "cnf.hpp"
#include "error.hpp"
#include "netlist.hpp"

#include <functional>
#include <unordered_map>
#include <vector>

namespace keylock {

/// Net-to-variable assignment for one encoded copy of a netlist (0 = unmapped).
struct EncodingMap {
  std::vector<int> var_of_net;
  std::unordered_map<int, NetId> net_of_var;

  [[nodiscard]] int var(NetId net) const { return var_of_net.at(net); }
  [[nodiscard]] bool mapped(NetId net) const { return net < var_of_net.size() && var_of_net[net] != 0; }

  void bind(NetId net, int v)
  {
    if (var_of_net.size() <= net) var_of_net.resize(net + 1, 0);
    var_of_net[net] = v;
    net_of_var[v] = net;
  }
};

/// Clauses for one gate; `in` holds input literals, `y` the output literal.
inline void encode_gate(Cnf& cnf, GateType type, const std::vector<Literal>& in, Literal y)
{
  switch (type) {
  case GateType::NAND: y = -y; [[fallthrough]];
  case GateType::AND:
    cnf.add_clause({-in[0], -in[1], y});
    cnf.add_clause({in[0], -y});
    cnf.add_clause({in[1], -y});
    break;
  case GateType::NOR: y = -y; [[fallthrough]];
  case GateType::OR:
    cnf.add_clause({in[0], in[1], -y});
    cnf.add_clause({-in[0], y});
    cnf.add_clause({-in[1], y});
    break;
  case GateType::XNOR: y = -y; [[fallthrough]];
  case GateType::XOR:
    cnf.add_clause({-in[0], -in[1], -y});
    cnf.add_clause({in[0], in[1], -y});
    cnf.add_clause({in[0], -in[1], y});
    cnf.add_clause({-in[0], in[1], y});
    break;
  case GateType::NOT: y = -y; [[fallthrough]];
  case GateType::BUF:
    cnf.add_clause({-in[0], y});
    cnf.add_clause({in[0], -y});
    break;
  case GateType::MUX2:
    cnf.add_clause({in[0], -in[1], y});
    cnf.add_clause({in[0], in[1], -y});
    cnf.add_clause({-in[0], -in[2], y});
    cnf.add_clause({-in[0], in[2], -y});
    break;
  }
}

/// Appends one encoded copy of `n` to `cnf`. Nets already bound in `map` reuse their
/// variable; others get fresh variables on first use (constants add a unit clause).
/// Gates for which `include` returns false are skipped. Grouped gates are emitted last,
/// one contiguous CNF group per netlist group.
inline void append_tseitin(Cnf& cnf, const Netlist& n, EncodingMap& map,
                           const std::function<bool(GateId)>& include = {})
{
  if (map.var_of_net.size() < n.num_nets()) map.var_of_net.resize(n.num_nets(), 0);
  auto lit = [&](NetId net) {
    if (!map.mapped(net)) {
      const int v = cnf.new_var();
      map.bind(net, v);
      const auto& info = n.net(net);
      if (info.kind == NetKind::constant) cnf.add_clause({info.constant_value ? v : -v});
    }
    return map.var(net);
  };
  for (NetId pi : n.primary_inputs()) lit(pi);
  for (NetId k : n.key_inputs()) lit(k);

  auto emit = [&](GateId g) {
    const auto& gate = n.gate(g);
    std::vector<Literal> in;
    in.reserve(gate.inputs.size());
    for (NetId i : gate.inputs) in.push_back(lit(i));
    encode_gate(cnf, gate.type, in, lit(gate.output));
  };
  for (GateId g = 0; g < n.num_gates(); ++g) {
    if (n.gate(g).group < 0 && (!include || include(g))) emit(g);
  }
  for (int grp = 0; grp < static_cast<int>(n.group_names().size()); ++grp) {
    bool any = false;
    for (GateId g = 0; g < n.num_gates(); ++g) {
      if (n.gate(g).group != grp || (include && !include(g))) continue;
      if (!any) cnf.begin_group(n.group_names()[grp]);
      any = true;
      emit(g);
    }
    if (any) cnf.end_group();
  }
  for (NetId po : n.primary_outputs()) lit(po);
}

struct TseitinResult {
  Cnf cnf;
  EncodingMap map;
};

inline TseitinResult tseitin(const Netlist& n)
{
  TseitinResult r;
  append_tseitin(r.cnf, n, r.map);
  return r;
}

/// A circuit formula with designated interface variables. `cnf` is instantiated once per
/// circuit copy; `key_constraints` (same numbering) only mention key variables plus their
/// own auxiliaries and are instantiated once per key copy.
struct CircuitCnf {
  Cnf cnf;
  Cnf key_constraints;
  std::vector<int> pi_vars;
  std::vector<int> key_vars;
  std::vector<int> po_vars;
  std::vector<CnfGroup> groups;
};

inline CircuitCnf circuit_cnf(const Netlist& n)
{
  CircuitCnf c;
  EncodingMap map;
  append_tseitin(c.cnf, n, map);
  for (NetId pi : n.primary_inputs()) c.pi_vars.push_back(map.var(pi));
  for (NetId k : n.key_inputs()) c.key_vars.push_back(map.var(k));
  for (NetId po : n.primary_outputs()) c.po_vars.push_back(map.var(po));
  c.key_constraints = Cnf(c.cnf.num_vars());
  return c;
}

/// Variable renaming used to instantiate a template formula.
class VarRenaming {
public:
  explicit VarRenaming(int template_vars) : to_(static_cast<std::size_t>(template_vars) + 1, 0) {}

  void fix(int template_var, int target_var) { to_.at(static_cast<std::size_t>(template_var)) = target_var; }
  void fix_all(const std::vector<int>& from, const std::vector<int>& to)
  {
    if (from.size() != to.size()) throw Error(ErrorCode::interface_mismatch, "renaming size mismatch");
    for (std::size_t i = 0; i < from.size(); ++i) fix(from[i], to[i]);
  }

  /// Maps a template literal; unmapped variables get a fresh target variable.
  Literal map(Literal lit, Cnf& target)
  {
    auto& slot = to_.at(static_cast<std::size_t>(std::abs(lit)));
    if (slot == 0) slot = target.new_var();
    return lit > 0 ? slot : -slot;
  }

  Literal map(Literal lit, int& next_var)
  {
    auto& slot = to_.at(static_cast<std::size_t>(std::abs(lit)));
    if (slot == 0) slot = ++next_var;
    return lit > 0 ? slot : -slot;
  }

private:
  std::vector<int> to_;
};

/// Appends `source` to `target` with variables renamed through `renaming`.
inline void append_renamed(Cnf& target, const Cnf& source, VarRenaming& renaming)
{
  for (const auto& clause : source.clauses()) {
    Clause mapped;
    mapped.reserve(clause.size());
    for (Literal l : clause) mapped.push_back(renaming.map(l, target));
    target.add_clause(std::move(mapped));
  }
}

struct Miter {
  Cnf cnf;
  std::vector<int> pi_vars;
  std::vector<int> key1_vars;
  std::vector<int> key2_vars;
  std::vector<int> po1_vars;
  std::vector<int> po2_vars;
  std::vector<int> diff_vars;
};

/// Two copies of `circuit` sharing primary inputs, with separate key variables, plus one
/// XOR difference bit per output and a clause demanding some difference.
inline Miter build_miter(const CircuitCnf& circuit)
{
  if (circuit.po_vars.empty()) throw Error(ErrorCode::interface_mismatch, "circuit has no outputs");
  Miter m;
  auto fresh = [&](std::size_t count) {
    std::vector<int> vars(count);
    for (auto& v : vars) v = m.cnf.new_var();
    return vars;
  };
  m.pi_vars = fresh(circuit.pi_vars.size());
  m.key1_vars = fresh(circuit.key_vars.size());
  m.key2_vars = fresh(circuit.key_vars.size());
  for (int copy = 0; copy < 2; ++copy) {
    const auto& keys = copy == 0 ? m.key1_vars : m.key2_vars;
    VarRenaming r(circuit.cnf.num_vars());
    r.fix_all(circuit.pi_vars, m.pi_vars);
    r.fix_all(circuit.key_vars, keys);
    append_renamed(m.cnf, circuit.cnf, r);
    auto& po = copy == 0 ? m.po1_vars : m.po2_vars;
    for (int v : circuit.po_vars) po.push_back(r.map(v, m.cnf));
    VarRenaming rk(circuit.key_constraints.num_vars());
    rk.fix_all(circuit.key_vars, keys);
    append_renamed(m.cnf, circuit.key_constraints, rk);
  }
  Clause any_diff;
  for (std::size_t i = 0; i < m.po1_vars.size(); ++i) {
    const int d = m.cnf.new_var();
    encode_gate(m.cnf, GateType::XOR, {m.po1_vars[i], m.po2_vars[i]}, d);
    m.diff_vars.push_back(d);
    any_diff.push_back(d);
  }
  m.cnf.add_clause(std::move(any_diff));
  return m;
}

/// Miter of two netlists with the same interface, each under a fixed key: SAT iff some
/// input vector distinguishes them.
inline Miter build_equivalence_miter(const Netlist& a, const Netlist& b, const BitVector& key_a = {},
                                     const BitVector& key_b = {})
{
  if (a.primary_inputs().size() != b.primary_inputs().size() ||
      a.primary_outputs().size() != b.primary_outputs().size() || a.primary_outputs().empty()) {
    throw Error(ErrorCode::interface_mismatch, "netlists differ in primary input/output counts");
  }
  if (key_a.size() != a.key_inputs().size() || key_b.size() != b.key_inputs().size()) {
    throw Error(ErrorCode::interface_mismatch, "key length does not match key inputs");
  }
  Miter m;
  for (std::size_t i = 0; i < a.primary_inputs().size(); ++i) m.pi_vars.push_back(m.cnf.new_var());
  auto add_copy = [&](const Netlist& n, const BitVector& key, std::vector<int>& po) {
    EncodingMap map;
    for (std::size_t i = 0; i < n.primary_inputs().size(); ++i) map.bind(n.primary_inputs()[i], m.pi_vars[i]);
    for (std::size_t i = 0; i < n.key_inputs().size(); ++i) {
      const int v = m.cnf.new_var();
      map.bind(n.key_inputs()[i], v);
      m.cnf.add_clause({key[i] ? v : -v});
    }
    append_tseitin(m.cnf, n, map);
    for (NetId o : n.primary_outputs()) po.push_back(map.var(o));
  };
  add_copy(a, key_a, m.po1_vars);
  add_copy(b, key_b, m.po2_vars);
  Clause any_diff;
  for (std::size_t i = 0; i < m.po1_vars.size(); ++i) {
    const int d = m.cnf.new_var();
    encode_gate(m.cnf, GateType::XOR, {m.po1_vars[i], m.po2_vars[i]}, d);
    m.diff_vars.push_back(d);
    any_diff.push_back(d);
  }
  m.cnf.add_clause(std::move(any_diff));
  return m;
}

} // namespace keylock
