#pragma once

// Inserting keyRBs into netlists, checking locked designs, and Full-Lock inverter
// detachment.

#include "equivalence.hpp"
#include "keyrb.hpp"
#include "netlist.hpp"
#include "sat.hpp"
#include "timing.hpp"
#include "tseitin.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace keylock {

enum class NetSelection : std::uint8_t { random, correlated };

struct LockConfig {
  Topology topology = Topology::logarithmic;
  /// Full-Lock inverters on logarithmic blocks.
  bool with_inverters = true;
  std::size_t size = 8;
  std::size_t count = 1;
  std::uint64_t seed = 1;
  NetSelection selection = NetSelection::random;
};

struct LockedDesign {
  Netlist original;
  Netlist netlist;
  std::vector<KeyRB> keyrbs;
  BitVector correct_key;
  /// keyRB output net name → name of the original net it reproduces.
  std::map<std::string, std::string> origin_map;
  /// Key inputs removed by simplification, with the value they were tied to.
  std::map<std::string, bool> fixed_keys;
  std::vector<std::string> warnings;
};

namespace detail {

/// Marks every net in the transitive fan-in of `roots` (roots included).
inline void mark_fanin(const Netlist& n, const std::vector<NetId>& roots, std::vector<char>& mark)
{
  mark.resize(n.num_nets(), 0);
  std::vector<NetId> stack;
  for (NetId r : roots) {
    if (!mark[r]) {
      mark[r] = 1;
      stack.push_back(r);
    }
  }
  while (!stack.empty()) {
    const NetId net = stack.back();
    stack.pop_back();
    const GateId g = n.driver(net);
    if (g == no_gate) continue;
    for (NetId in : n.gate(g).inputs) {
      if (!mark[in]) {
        mark[in] = 1;
        stack.push_back(in);
      }
    }
  }
}

inline void mark_fanout(const Netlist& n, const std::vector<std::vector<GateId>>& fanout,
                        const std::vector<NetId>& roots, std::vector<char>& mark)
{
  mark.resize(n.num_nets(), 0);
  std::vector<NetId> stack;
  for (NetId r : roots) {
    if (!mark[r]) {
      mark[r] = 1;
      stack.push_back(r);
    }
  }
  while (!stack.empty()) {
    const NetId net = stack.back();
    stack.pop_back();
    for (GateId g : fanout[net]) {
      const NetId out = n.gate(g).output;
      if (!mark[out]) {
        mark[out] = 1;
        stack.push_back(out);
      }
    }
  }
}

/// Adds the fan-in and fan-out cones of `roots` to `blocked`.
inline void block_cones(const Netlist& n, const std::vector<std::vector<GateId>>& fanout,
                        const std::vector<NetId>& roots, std::vector<char>& blocked)
{
  std::vector<char> in, out;
  mark_fanin(n, roots, in);
  mark_fanout(n, fanout, roots, out);
  for (std::size_t i = 0; i < blocked.size(); ++i) blocked[i] |= in[i] | out[i];
}

inline std::vector<char> primary_output_mask(const Netlist& n)
{
  std::vector<char> po(n.num_nets(), 0);
  for (NetId o : n.primary_outputs()) po[o] = 1;
  return po;
}

/// Nets that may carry a routed signal: driven internal nets that are read or observed,
/// and read primary inputs that are not also outputs. Both must reach an output.
inline std::vector<NetId> routable_nets(const Netlist& n)
{
  const auto fanout = n.fanouts();
  const auto po = primary_output_mask(n);
  std::vector<char> observable;
  mark_fanin(n, n.primary_outputs(), observable);
  std::vector<NetId> result;
  for (const auto& net : n.nets()) {
    if (!observable[net.id]) continue;
    const bool read = !fanout[net.id].empty();
    if (net.kind == NetKind::internal && n.driver(net.id) != no_gate && (read || po[net.id])) result.push_back(net.id);
    if (net.kind == NetKind::primary_input && read && !po[net.id]) result.push_back(net.id);
  }
  return result;
}

/// Random antichain under reachability: no chosen net lies in another's fan-in.
template <class Rng>
std::vector<NetId> choose_independent_nets(const Netlist& n, std::size_t count, Rng& rng)
{
  auto candidates = routable_nets(n);
  const auto fanout = n.fanouts();
  std::vector<NetId> chosen;
  for (int attempt = 0; attempt < 64 && chosen.size() < count; ++attempt) {
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::vector<char> blocked(n.num_nets(), 0);
    chosen.clear();
    for (NetId c : candidates) {
      if (chosen.size() == count) break;
      if (blocked[c]) continue;
      chosen.push_back(c);
      block_cones(n, fanout, {c}, blocked);
    }
  }
  if (chosen.size() < count) {
    throw Error(ErrorCode::insufficient_nets, "found " + std::to_string(chosen.size()) +
                                                  " mutually independent nets, need " + std::to_string(count));
  }
  return chosen;
}

/// `count` nets from the fan-in cone of one deep net (the root is included), so the
/// chosen nets feed one another.
template <class Rng>
std::vector<NetId> choose_correlated_nets(const Netlist& n, std::size_t count, const std::vector<char>& taken, Rng& rng)
{
  const auto routable = routable_nets(n);
  std::vector<char> ok(n.num_nets(), 0);
  for (NetId r : routable) ok[r] = !taken[r];
  std::vector<NetId> roots;
  for (NetId r : routable) {
    if (ok[r] && n.net(r).kind == NetKind::internal) roots.push_back(r);
  }
  std::shuffle(roots.begin(), roots.end(), rng);
  for (NetId root : roots) {
    std::vector<char> cone;
    mark_fanin(n, {root}, cone);
    std::vector<NetId> pool;
    for (NetId r : routable) {
      if (ok[r] && cone[r] && r != root) pool.push_back(r);
    }
    if (pool.size() + 1 < count) continue;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<NetId> chosen{root};
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count - 1));
    return chosen;
  }
  throw Error(ErrorCode::insufficient_nets, "no fan-in cone holds " + std::to_string(count) + " free routable nets");
}

/// Detaches the signal of `net` for a keyRB lane: returns (block input net, block output
/// net). A gate-driven net keeps its name and readers, with its driver moved to a fresh
/// "<net>_pre"; a primary input keeps its name and its readers move to "<net>_rb".
inline std::pair<NetId, NetId> split_net(Netlist& host, NetId net)
{
  if (host.net(net).kind == NetKind::primary_input) {
    const NetId out = host.add_internal(host.fresh_name(host.net(net).name + "_rb"));
    for (GateId g = 0; g < host.num_gates(); ++g) {
      const auto& ins = host.gate(g).inputs;
      for (std::size_t p = 0; p < ins.size(); ++p) {
        if (ins[p] == net) host.set_gate_input(g, p, out);
      }
    }
    return {net, out};
  }
  const NetId pre = host.add_internal(host.fresh_name(host.net(net).name + "_pre"));
  host.set_gate_output(host.driver(net), pre);
  return {pre, net};
}

inline std::size_t key_index_of(const KeyRB& rb, KeyRole role, int layer, int swb, int slot)
{
  for (std::size_t i = 0; i < rb.key_roles.size(); ++i) {
    const auto& r = rb.key_roles[i];
    if (r.role == role && r.layer == layer && r.swb == swb && r.slot == slot) return i;
  }
  throw Error(ErrorCode::wrong_topology, "keyRB has no such key bit");
}

/// Inserts a routing block (crossbar or logarithmic) over `nets`.
template <class Rng>
void insert_routing_keyrb(LockedDesign& d, const LockConfig& cfg, const std::vector<NetId>& nets, Rng& rng)
{
  const std::size_t m = cfg.size;
  auto& host = d.netlist;
  KeyRB rb = cfg.topology == Topology::crossbar ? build_crossbar(m, m) : build_logarithmic_keyrb(m, cfg.with_inverters);
  // perm[o] = lane routed to output o.
  std::vector<int> perm(m);
  BitVector key(rb.num_keys(), false);
  if (cfg.topology == Topology::crossbar) {
    for (std::size_t o = 0; o < m; ++o) perm[o] = static_cast<int>(o);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t bits = log2_ceil(m);
    for (std::size_t o = 0; o < m; ++o) {
      for (std::size_t b = 0; b < bits; ++b) {
        key[o * bits + b] = ((static_cast<std::size_t>(perm[o]) >> (bits - 1 - b)) & 1U) != 0;
      }
    }
  } else {
    const auto lines = random_route(rb, rng);
    apply_route(rb, lines, key);
    const auto outs = lane_outputs(lines);
    for (std::size_t lane = 0; lane < m; ++lane) perm[static_cast<std::size_t>(outs[lane])] = static_cast<int>(lane);
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (rb.key_roles[i].role == KeyRole::invert) key[i] = (rng() & 1U) != 0;
    }
  }

  std::vector<NetId> in(m), out_of_lane(m);
  std::vector<std::string> origin(m);
  for (std::size_t lane = 0; lane < m; ++lane) {
    origin[lane] = host.net(nets[lane]).name;
    std::tie(in[lane], out_of_lane[lane]) = split_net(host, nets[lane]);
  }

  if (rb.with_inverters) {
    // Absorb odd inversion parity into the lane's driver, or into the last inverter.
    const std::vector<std::uint64_t> zeros(rb.circuit.primary_inputs().size(), 0);
    const auto parity = keyrb_evaluate(rb, key, zeros);
    const int last = static_cast<int>(rb.layers.size()) - 1;
    for (std::size_t o = 0; o < m; ++o) {
      if ((parity[o] & 1U) == 0) continue;
      const NetId src = in[static_cast<std::size_t>(perm[o])];
      const GateId g = host.driver(src);
      const auto neg = g == no_gate ? std::nullopt : negated(host.gate(g).type);
      if (neg) {
        host.set_gate_type(g, *neg);
      } else {
        const auto k = key_index_of(rb, KeyRole::invert, last, static_cast<int>(o / 2), static_cast<int>(o % 2));
        key[k] = !key[k];
      }
    }
  }
  rb.correct_key = key;

  std::vector<NetId> outputs(m);
  for (std::size_t o = 0; o < m; ++o) outputs[o] = out_of_lane[static_cast<std::size_t>(perm[o])];
  const std::string group = "rb" + std::to_string(d.keyrbs.size());
  instantiate_keyrb(host, rb, in, {}, outputs, d.correct_key.size(), group);
  for (std::size_t o = 0; o < m; ++o) {
    d.origin_map[host.net(outputs[o]).name] = origin[static_cast<std::size_t>(perm[o])];
  }
  d.correct_key.insert(d.correct_key.end(), key.begin(), key.end());
  d.keyrbs.push_back(std::move(rb));
}

/// One gate path prepared for hosting: block input net, hosted types, side inputs.
struct HostedPath {
  GatePath gates;
  NetId entry = no_net;
  std::vector<GateType> types;
  std::vector<NetId> sides;
};

inline HostedPath host_path(Netlist& host, const GatePath& path, const TimingInfo& timing)
{
  HostedPath h;
  h.gates = path;
  NetId prev = no_net;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto& gate = host.gate(path[k]);
    NetId on = no_net, side = no_net;
    if (gate.inputs.size() == 1) {
      on = gate.inputs[0];
      side = host.constant(gate.type == GateType::NOT);
      h.types.push_back(GateType::XOR);
    } else {
      std::size_t pin = 0;
      if (k == 0) {
        pin = timing.level[gate.inputs[1]] > timing.level[gate.inputs[0]] ? 1 : 0;
      } else {
        pin = gate.inputs[0] == prev ? 0 : 1;
      }
      on = gate.inputs[pin];
      side = gate.inputs[1 - pin];
      h.types.push_back(gate.type);
    }
    if (k == 0) h.entry = on;
    h.sides.push_back(side);
    prev = gate.output;
  }
  return h;
}

/// Greedy pick of gate-disjoint, mutually independent windows: no path's end net lies in
/// the fan-in of another path's gates.
inline std::vector<GatePath> choose_independent_paths(const Netlist& n, std::size_t length, std::size_t count)
{
  const auto ranked = rank_path_windows(n, length, PathPreference::xor_rich());
  std::vector<char> used(n.num_gates(), 0);
  std::vector<char> fanin_of_chosen(n.num_nets(), 0);
  std::vector<NetId> ends;
  std::vector<GatePath> chosen;
  for (const auto& p : ranked) {
    if (chosen.size() == count) break;
    if (std::any_of(p.gates.begin(), p.gates.end(), [&](GateId g) { return used[g]; })) continue;
    const NetId end = n.gate(p.gates.back()).output;
    if (fanin_of_chosen[end]) continue;
    std::vector<NetId> reads;
    for (GateId g : p.gates) {
      for (NetId in : n.gate(g).inputs) reads.push_back(in);
    }
    std::vector<char> cone;
    mark_fanin(n, reads, cone);
    if (std::any_of(ends.begin(), ends.end(), [&](NetId e) { return cone[e] != 0; })) continue;
    for (GateId g : p.gates) used[g] = 1;
    for (std::size_t i = 0; i < cone.size(); ++i) fanin_of_chosen[i] |= cone[i];
    ends.push_back(end);
    chosen.push_back(p.gates);
  }
  return chosen;
}

template <class Rng>
void lock_interlock(LockedDesign& d, const LockConfig& cfg, Rng& rng)
{
  const std::size_t m = cfg.size;
  if (m < 4 || !is_power_of_two(m)) throw Error(ErrorCode::bad_size, "keyRB size must be a power of two >= 4");
  const std::size_t length = benes_stages(m);
  auto& host = d.netlist;
  const auto paths = choose_independent_paths(d.original, length, m * cfg.count);
  if (paths.empty()) {
    throw Error(ErrorCode::insufficient_paths, "found 0 independent paths of length " + std::to_string(length));
  }
  const auto timing = timing_analyze(d.original);
  const auto fanout = d.original.fanouts();
  const auto po = primary_output_mask(d.original);

  // Lanes without a path carry independent routable nets instead.
  const std::size_t shortage = m * cfg.count - paths.size();
  std::vector<NetId> fillers;
  if (shortage > 0) {
    d.warnings.push_back("found " + std::to_string(paths.size()) + " of " + std::to_string(m * cfg.count) +
                         " paths; " + std::to_string(shortage) + " lanes are pure routing");
    std::vector<NetId> reads, ends;
    std::vector<char> on_path(d.original.num_nets(), 0);
    for (const auto& p : paths) {
      for (GateId g : p) {
        on_path[d.original.gate(g).output] = 1;
        for (NetId in : d.original.gate(g).inputs) reads.push_back(in);
      }
      ends.push_back(d.original.gate(p.back()).output);
    }
    std::vector<char> blocked(d.original.num_nets(), 0);
    std::vector<char> cone;
    mark_fanin(d.original, reads, cone);
    for (std::size_t i = 0; i < cone.size(); ++i) blocked[i] |= cone[i];
    cone.clear();
    mark_fanout(d.original, fanout, ends, cone);
    for (std::size_t i = 0; i < cone.size(); ++i) blocked[i] |= cone[i];
    auto candidates = routable_nets(d.original);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (NetId c : candidates) {
      if (fillers.size() == shortage) break;
      if (blocked[c] || on_path[c]) continue;
      fillers.push_back(c);
      block_cones(d.original, fanout, {c}, blocked);
    }
    if (fillers.size() < shortage) {
      throw Error(ErrorCode::insufficient_paths, "found " + std::to_string(paths.size()) + " paths and " +
                                                     std::to_string(fillers.size()) + " routing nets, need " +
                                                     std::to_string(m * cfg.count) + " lanes");
    }
  }

  std::vector<GateId> doomed;
  std::size_t next_path = 0, next_filler = 0;
  for (std::size_t r = 0; r < cfg.count; ++r) {
    KeyRB shape;
    shape.size = m;
    network_shape(m, shape);
    PathEmbedding emb;
    emb.lines = random_route(shape, rng);
    std::vector<NetId> in(m), outputs(m);
    std::vector<std::string> origin(m);
    std::vector<NetId> lane_out(m);
    for (std::size_t lane = 0; lane < m; ++lane) {
      if (next_path < paths.size()) {
        const auto h = host_path(host, paths[next_path++], timing);
        emb.paths.push_back(h.gates);
        emb.gate_types.push_back(h.types);
        emb.ex_input_map.push_back(h.sides);
        in[lane] = h.entry;
        const GateId last = h.gates.back();
        const NetId end = host.gate(last).output;
        host.set_gate_output(last, host.add_internal(host.fresh_name(host.net(end).name + "_dead")));
        lane_out[lane] = end;
        origin[lane] = host.net(end).name;
        doomed.push_back(last);
        for (std::size_t k = h.gates.size() - 1; k-- > 0;) {
          const NetId net = d.original.gate(h.gates[k]).output;
          if (po[net] || fanout[net].size() != 1 || fanout[net][0] != h.gates[k + 1]) break;
          doomed.push_back(h.gates[k]);
        }
      } else {
        const NetId net = fillers[next_filler++];
        origin[lane] = host.net(net).name;
        std::tie(in[lane], lane_out[lane]) = split_net(host, net);
      }
    }
    assign_slots(emb);
    KeyRB rb = build_interlock_keyrb(m, emb);
    for (std::size_t lane = 0; lane < m; ++lane) {
      outputs[static_cast<std::size_t>(emb.lines[lane].back())] = lane_out[lane];
    }
    // ex nets were created in (layer, swb, slot) order.
    std::vector<NetId> ex;
    for (std::size_t l = 0; l < rb.layers.size(); ++l) {
      for (std::size_t s = 0; s < m / 2; ++s) {
        for (int o = 0; o < 2; ++o) {
          if (rb.layers[l][s].ex[static_cast<std::size_t>(o)] == no_net) continue;
          const int line = static_cast<int>(2 * s) + o;
          for (std::size_t p = 0; p < emb.gate_types.size(); ++p) {
            if (emb.lines[p][l] == line) ex.push_back(emb.ex_input_map[p][l]);
          }
        }
      }
    }
    rb.placement = {};
    instantiate_keyrb(host, rb, in, ex, outputs, d.correct_key.size(), "rb" + std::to_string(d.keyrbs.size()));
    for (std::size_t lane = 0; lane < m; ++lane) d.origin_map[host.net(lane_out[lane]).name] = origin[lane];
    d.correct_key.insert(d.correct_key.end(), rb.correct_key.begin(), rb.correct_key.end());
    d.keyrbs.push_back(std::move(rb));
  }
  host.remove_gates(doomed);
}

} // namespace detail

/// Locks a copy of `n` with `cfg.count` keyRBs of size `cfg.size`.
inline LockedDesign lock(const Netlist& n, const LockConfig& cfg)
{
  if (!n.key_inputs().empty()) throw Error(ErrorCode::interface_mismatch, "netlist already has key inputs");
  LockedDesign d;
  d.original = n;
  d.netlist = n;
  if (cfg.count == 0) return d;
  std::mt19937_64 rng(cfg.seed);
  if (cfg.topology == Topology::interlock) {
    detail::lock_interlock(d, cfg, rng);
  } else {
    if (cfg.topology == Topology::logarithmic && (cfg.size < 4 || !is_power_of_two(cfg.size))) {
      throw Error(ErrorCode::bad_size, "keyRB size must be a power of two >= 4");
    }
    if (cfg.selection == NetSelection::random) {
      const auto all = detail::choose_independent_nets(n, cfg.size * cfg.count, rng);
      for (std::size_t r = 0; r < cfg.count; ++r) {
        const std::vector<NetId> nets(all.begin() + static_cast<std::ptrdiff_t>(r * cfg.size),
                                      all.begin() + static_cast<std::ptrdiff_t>((r + 1) * cfg.size));
        detail::insert_routing_keyrb(d, cfg, nets, rng);
      }
    } else {
      std::vector<char> taken(n.num_nets(), 0);
      for (std::size_t r = 0; r < cfg.count; ++r) {
        const auto nets = detail::choose_correlated_nets(n, cfg.size, taken, rng);
        for (NetId net : nets) taken[net] = 1;
        detail::insert_routing_keyrb(d, cfg, nets, rng);
      }
    }
  }
  d.netlist.set_cyclic_allowed(!d.netlist.is_acyclic());
  d.netlist.validate();
  return d;
}

inline constexpr std::size_t max_exhaustive_verify_inputs = 16;
inline constexpr std::size_t random_verify_vectors = 10000;

/// Functional check of `netlist` under `key` against `original`: exhaustive up to 16
/// inputs, else random vectors followed by a SAT miter.
inline EquivalenceResult verify_key(const Netlist& netlist, const Netlist& original, const BitVector& key,
                                    std::uint64_t seed = 1)
{
  if (original.primary_inputs().size() <= max_exhaustive_verify_inputs) {
    return equivalence_exhaustive(netlist, original, key, {});
  }
  auto r = equivalence_random(netlist, original, key, {}, random_verify_vectors, seed);
  if (!r.equal) return r;
  const auto miter = build_equivalence_miter(netlist, original, key, {});
  const auto s = sat::solve(miter.cnf);
  if (s.status == sat::Status::sat) {
    BitVector cex;
    for (int v : miter.pi_vars) cex.push_back(s.value(v));
    return {false, cex};
  }
  return {};
}

inline EquivalenceResult verify_locked(const LockedDesign& d) { return verify_key(d.netlist, d.original, d.correct_key); }

inline bool has_full_lock(const LockedDesign& d)
{
  return std::any_of(d.keyrbs.begin(), d.keyrbs.end(),
                     [](const KeyRB& rb) { return rb.topology == Topology::logarithmic && rb.with_inverters; });
}

/// Ties every inverter key outside the last layer to "no inversion" and moves the
/// accumulated path parity into the last layer, for every Full-Lock keyRB.
inline LockedDesign detach_inverters(const LockedDesign& in)
{
  if (!has_full_lock(in)) throw Error(ErrorCode::wrong_topology, "design has no logarithmic keyRB with inverters");
  LockedDesign d = in;
  d.correct_key.clear();
  for (auto& rb : d.keyrbs) {
    if (rb.topology == Topology::logarithmic && rb.with_inverters && !rb.inverters_detached) {
      const std::vector<std::uint64_t> zeros(rb.circuit.primary_inputs().size(), 0);
      const auto parity = keyrb_evaluate(rb, rb.correct_key, zeros);
      const int last = static_cast<int>(rb.layers.size()) - 1;
      std::vector<NetId> layout, keys;
      std::vector<KeyBit> roles;
      BitVector key;
      for (std::size_t i = 0; i < rb.key_layout.size(); ++i) {
        const auto& role = rb.key_roles[i];
        if (role.role == KeyRole::invert && role.layer != last) {
          d.fixed_keys[d.netlist.net(rb.placement.keys[i]).name] = false;
          d.netlist.fix_key_input(rb.placement.keys[i], false);
          rb.circuit.fix_key_input(rb.key_layout[i], false);
          continue;
        }
        bool value = rb.correct_key[i];
        if (role.role == KeyRole::invert) value = (parity[static_cast<std::size_t>(2 * role.swb + role.slot)] & 1U) != 0;
        layout.push_back(rb.key_layout[i]);
        keys.push_back(rb.placement.keys[i]);
        roles.push_back(role);
        key.push_back(value);
      }
      for (auto& layer : rb.layers) {
        for (auto& swb : layer) {
          for (auto& bits : swb.key_bits) {
            std::erase_if(bits, [&](NetId k) { return rb.circuit.net(k).kind != NetKind::key_input; });
          }
        }
      }
      rb.key_layout = std::move(layout);
      rb.placement.keys = std::move(keys);
      rb.key_roles = std::move(roles);
      rb.correct_key = std::move(key);
      rb.inverters_detached = true;
    }
    d.correct_key.insert(d.correct_key.end(), rb.correct_key.begin(), rb.correct_key.end());
  }
  return d;
}

/// Key for `full` equivalent to `key` on a simplification of it (matched by key name,
/// removed keys take their tied value).
inline BitVector expand_key(const LockedDesign& full, const LockedDesign& simplified, const BitVector& key)
{
  std::map<std::string, bool> value = simplified.fixed_keys;
  const auto& keys = simplified.netlist.key_inputs();
  if (key.size() != keys.size()) throw Error(ErrorCode::interface_mismatch, "key length mismatch");
  for (std::size_t i = 0; i < keys.size(); ++i) value[simplified.netlist.net(keys[i]).name] = key[i];
  BitVector out;
  for (NetId k : full.netlist.key_inputs()) out.push_back(value.at(full.netlist.net(k).name));
  return out;
}

/// First key index of each keyRB within the design key.
inline std::vector<std::size_t> key_offsets(const LockedDesign& d)
{
  std::vector<std::size_t> off;
  std::size_t at = 0;
  for (const auto& rb : d.keyrbs) {
    off.push_back(at);
    at += rb.num_keys();
  }
  return off;
}

/// Recomputes keyRB gate groups structurally, walking back from each block's outputs to
/// its inputs, extra inputs and keys (used after reading a design back from BENCH).
inline void retag_keyrb_groups(LockedDesign& d)
{
  auto& n = d.netlist;
  n.clear_groups();
  for (auto& rb : d.keyrbs) {
    const int gid = n.add_group(rb.placement.group);
    std::set<NetId> stop(rb.placement.inputs.begin(), rb.placement.inputs.end());
    stop.insert(rb.placement.ex_inputs.begin(), rb.placement.ex_inputs.end());
    stop.insert(rb.placement.keys.begin(), rb.placement.keys.end());
    std::vector<NetId> stack(rb.placement.outputs.begin(), rb.placement.outputs.end());
    std::set<NetId> seen;
    while (!stack.empty()) {
      const NetId net = stack.back();
      stack.pop_back();
      if (stop.contains(net) || !seen.insert(net).second) continue;
      const GateId g = n.driver(net);
      if (g == no_gate) continue;
      n.set_gate_group(g, gid);
      for (NetId in : n.gate(g).inputs) stack.push_back(in);
    }
  }
}

} // namespace keylock
