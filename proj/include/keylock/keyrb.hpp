#pragma once

// Key-programmable routing blocks: crossbar, logarithmic (Beneš without its center
// stage, optionally with per-output inverters) and InterLock switch boxes that host
// logic gates. Each block is described structurally and as a standalone template
// netlist whose primary inputs are the data inputs followed by the extra inputs.

#include "error.hpp"
#include "netlist.hpp"
#include "simulate.hpp"
#include "timing.hpp"

#include <array>
#include <bit>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace keylock {

enum class Topology : std::uint8_t { crossbar, logarithmic, interlock };

inline std::string_view to_string(Topology t)
{
  switch (t) {
  case Topology::crossbar: return "crossbar";
  case Topology::logarithmic: return "logarithmic";
  case Topology::interlock: return "interlock";
  }
  return "?";
}

inline std::optional<Topology> topology_from_string(std::string_view s)
{
  if (s == "crossbar") return Topology::crossbar;
  if (s == "logarithmic" || s == "fulllock") return Topology::logarithmic;
  if (s == "interlock") return Topology::interlock;
  return std::nullopt;
}

enum class KeyRole : std::uint8_t { select, route, func, invert };

inline std::string_view to_string(KeyRole r)
{
  switch (r) {
  case KeyRole::select: return "select";
  case KeyRole::route: return "route";
  case KeyRole::func: return "func";
  case KeyRole::invert: return "invert";
  }
  return "?";
}

/// What a key bit controls. Crossbar select bits use layer = swb = -1, slot = output,
/// bit = position (MSB first).
struct KeyBit {
  KeyRole role = KeyRole::route;
  int layer = -1;
  int swb = -1;
  int slot = 0;
  int bit = 0;
  bool operator==(const KeyBit&) const = default;
};

/// 2x2 switch box. Output o (0 = O_i, 1 = O_j) takes the route bit to pick I_i (0) or
/// I_j (1); when f[o] is set, the func bit then picks between that value and
/// f[o](value, ex[o]). Per output, key bits are ordered {func, route} for InterLock and
/// {route[, invert]} for the logarithmic network.
struct SwB {
  std::array<std::optional<GateType>, 2> f{};
  bool has_ex_inputs = false;
  std::array<std::vector<NetId>, 2> key_bits;
  std::array<NetId, 2> in{no_net, no_net};
  std::array<NetId, 2> ex{no_net, no_net};
  std::array<NetId, 2> out{no_net, no_net};
  /// Previous-layer output lines feeding I_i and I_j (block inputs for layer 0).
  std::array<int, 2> in_line{0, 0};
};

/// Host nets bound to a block once it is inserted into a design.
struct KeyRbPlacement {
  std::vector<NetId> inputs;
  std::vector<NetId> ex_inputs;
  std::vector<NetId> outputs;
  std::vector<NetId> keys;
  std::string group;
};

struct KeyRB {
  Topology topology = Topology::logarithmic;
  /// m: number of outputs.
  std::size_t size = 0;
  /// n: number of data inputs (equals size except for a wider crossbar).
  std::size_t num_inputs = 0;
  bool with_inverters = false;
  bool inverters_detached = false;
  std::vector<std::vector<SwB>> layers;
  /// wiring[l][p]: layer l output line read at input position p of layer l + 1.
  std::vector<std::vector<int>> wiring;
  /// Standalone template; its nets are what the fields below refer to.
  Netlist circuit;
  std::vector<NetId> input_nets;
  std::vector<NetId> ex_nets;
  std::vector<NetId> output_nets;
  std::vector<NetId> key_layout;
  std::vector<KeyBit> key_roles;
  BitVector correct_key;
  KeyRbPlacement placement;

  [[nodiscard]] std::size_t num_keys() const { return key_layout.size(); }
};

inline bool is_power_of_two(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

inline std::size_t log2_ceil(std::size_t n) { return n <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(n - 1)); }

/// 2·log2(m) − 2.
inline std::size_t benes_stages(std::size_t m) { return 2 * static_cast<std::size_t>(std::countr_zero(m)) - 2; }

// ---------------------------------------------------------------------------------
// Crossbar

/// n-input, m-output crossbar. Output o is a MUX2 tree over ceil(log2 n) select bits
/// (MSB first); codes at or above n select input n − 1.
inline KeyRB build_crossbar(std::size_t n, std::size_t m)
{
  if (m < 2 || n < m || n > 63) {
    throw Error(ErrorCode::bad_size, "crossbar needs 2 <= m <= n <= 63, got n=" + std::to_string(n) +
                                         " m=" + std::to_string(m));
  }
  KeyRB rb;
  rb.topology = Topology::crossbar;
  rb.size = m;
  rb.num_inputs = n;
  auto& c = rb.circuit;
  for (std::size_t i = 0; i < n; ++i) rb.input_nets.push_back(c.add_input("in" + std::to_string(i)));
  const std::size_t bits = log2_ceil(n);
  for (std::size_t o = 0; o < m; ++o) {
    std::vector<NetId> sel;
    for (std::size_t b = 0; b < bits; ++b) {
      sel.push_back(c.add_key_input("keyinput_o" + std::to_string(o) + "_b" + std::to_string(b)));
      rb.key_layout.push_back(sel.back());
      rb.key_roles.push_back(KeyBit{KeyRole::select, -1, -1, static_cast<int>(o), static_cast<int>(b)});
    }
    std::vector<NetId> level(std::size_t{1} << bits);
    for (std::size_t code = 0; code < level.size(); ++code) level[code] = rb.input_nets[std::min(code, n - 1)];
    // Fold from the LSB (last select bit) up to the MSB.
    for (std::size_t b = bits; b-- > 0;) {
      std::vector<NetId> next(level.size() / 2);
      for (std::size_t t = 0; t < next.size(); ++t) {
        const NetId lo = level[2 * t];
        const NetId hi = level[2 * t + 1];
        if (lo == hi) {
          next[t] = lo;
        } else {
          next[t] = c.add_gate_net(GateType::MUX2, {sel[b], lo, hi},
                                   "o" + std::to_string(o) + "_b" + std::to_string(b) + "_" + std::to_string(t));
        }
      }
      level = std::move(next);
    }
    NetId out = level[0];
    if (c.net(out).kind != NetKind::internal || c.driver(out) == no_gate) {
      out = c.add_gate_net(GateType::BUF, {out}, "o" + std::to_string(o));
    }
    rb.output_nets.push_back(out);
    c.add_output(out);
  }
  return rb;
}

// ---------------------------------------------------------------------------------
// Logarithmic / InterLock switch networks

namespace detail {

struct Terminal {
  int layer = -1;
  int line = 0;
};

/// Recursive Beneš construction with the size-2 center removed. Appends each SwB's two
/// input terminals to `layers[depth]` and returns the subnetwork's output terminals.
inline std::vector<Terminal> benes(int depth, const std::vector<Terminal>& in,
                                   std::vector<std::vector<std::array<Terminal, 2>>>& layers)
{
  const std::size_t k = in.size();
  if (k == 2) return in;
  const int last = depth + static_cast<int>(benes_stages(k)) - 1;
  std::vector<Terminal> upper, lower;
  for (std::size_t t = 0; t < k / 2; ++t) {
    const int s = static_cast<int>(layers[depth].size());
    layers[depth].push_back({in[2 * t], in[2 * t + 1]});
    upper.push_back({depth, 2 * s});
    lower.push_back({depth, 2 * s + 1});
  }
  const auto up = benes(depth + 1, upper, layers);
  const auto lo = benes(depth + 1, lower, layers);
  std::vector<Terminal> out(k);
  for (std::size_t t = 0; t < k / 2; ++t) {
    const int s = static_cast<int>(layers[last].size());
    layers[last].push_back({up[t], lo[t]});
    out[2 * t] = {last, 2 * s};
    out[2 * t + 1] = {last, 2 * s + 1};
  }
  return out;
}

/// Shape of a network: in_line per SwB, plus inter-layer wiring.
inline void network_shape(std::size_t m, KeyRB& rb)
{
  const std::size_t stages = benes_stages(m);
  std::vector<std::vector<std::array<Terminal, 2>>> shape(stages);
  std::vector<Terminal> in(m);
  for (std::size_t i = 0; i < m; ++i) in[i] = {-1, static_cast<int>(i)};
  const auto out = benes(0, in, shape);
  for (std::size_t i = 0; i < m; ++i) {
    if (out[i].layer != static_cast<int>(stages) - 1 || out[i].line != static_cast<int>(i)) {
      throw std::logic_error("network outputs are not in line order");
    }
  }
  rb.layers.assign(stages, std::vector<SwB>(m / 2));
  rb.wiring.assign(stages - 1, std::vector<int>(m, 0));
  for (std::size_t l = 0; l < stages; ++l) {
    for (std::size_t s = 0; s < m / 2; ++s) {
      for (int q = 0; q < 2; ++q) {
        const auto& t = shape[l][s][static_cast<std::size_t>(q)];
        if (t.layer != static_cast<int>(l) - 1) throw std::logic_error("SwB input skips a layer");
        rb.layers[l][s].in_line[static_cast<std::size_t>(q)] = t.line;
        if (l > 0) rb.wiring[l - 1][2 * s + static_cast<std::size_t>(q)] = t.line;
      }
    }
  }
}

/// Builds the template netlist for a shaped network. `slot_type(l, line)` gives the
/// hosted gate of an output slot (InterLock), `inverters` adds one XOR key per output.
template <class SlotType>
void build_network_circuit(KeyRB& rb, bool interlock, bool inverters, SlotType slot_type)
{
  const std::size_t m = rb.size;
  auto& c = rb.circuit;
  for (std::size_t i = 0; i < m; ++i) rb.input_nets.push_back(c.add_input("in" + std::to_string(i)));
  std::vector<NetId> prev = rb.input_nets;
  for (std::size_t l = 0; l < rb.layers.size(); ++l) {
    std::vector<NetId> cur(m, no_net);
    for (std::size_t s = 0; s < m / 2; ++s) {
      auto& swb = rb.layers[l][s];
      const std::string tag = "l" + std::to_string(l) + "_s" + std::to_string(s);
      swb.in = {prev[static_cast<std::size_t>(swb.in_line[0])], prev[static_cast<std::size_t>(swb.in_line[1])]};
      for (int o = 0; o < 2; ++o) {
        const auto line = 2 * s + static_cast<std::size_t>(o);
        const std::string otag = tag + "_o" + std::to_string(o);
        auto key = [&](std::string_view suffix, KeyRole role) {
          const NetId k = c.add_key_input("keyinput_" + otag + std::string(suffix));
          rb.key_layout.push_back(k);
          rb.key_roles.push_back(KeyBit{role, static_cast<int>(l), static_cast<int>(s), o, 0});
          swb.key_bits[static_cast<std::size_t>(o)].push_back(k);
          return k;
        };
        std::optional<GateType> f = interlock ? slot_type(l, line) : std::nullopt;
        NetId func = no_net;
        if (interlock) func = key("_f", KeyRole::func);
        const NetId route = key("_r", KeyRole::route);
        NetId value = c.add_gate_net(GateType::MUX2, {route, swb.in[0], swb.in[1]}, otag + "_m");
        if (f) {
          swb.f[static_cast<std::size_t>(o)] = f;
          swb.has_ex_inputs = true;
          const NetId ex = c.add_input("ex_" + otag);
          swb.ex[static_cast<std::size_t>(o)] = ex;
          rb.ex_nets.push_back(ex);
          const NetId g = c.add_gate_net(*f, {value, ex}, otag + "_g");
          value = c.add_gate_net(GateType::MUX2, {func, value, g}, otag + "_y");
        }
        if (inverters) {
          const NetId inv = key("_i", KeyRole::invert);
          value = c.add_gate_net(GateType::XOR, {value, inv}, otag + "_x");
        }
        swb.out[static_cast<std::size_t>(o)] = value;
        cur[line] = value;
      }
    }
    prev = std::move(cur);
  }
  for (NetId out : prev) {
    rb.output_nets.push_back(out);
    c.add_output(out);
  }
}

} // namespace detail

/// m×m logarithmic network: 2·log2(m) − 2 stages of m/2 switch boxes.
inline KeyRB build_logarithmic_keyrb(std::size_t m, bool with_inverters)
{
  if (m < 4 || !is_power_of_two(m) || m > 32) {
    throw Error(ErrorCode::bad_size, "logarithmic keyRB size must be a power of two in [4, 32], got " + std::to_string(m));
  }
  KeyRB rb;
  rb.topology = Topology::logarithmic;
  rb.size = m;
  rb.num_inputs = m;
  rb.with_inverters = with_inverters;
  detail::network_shape(m, rb);
  detail::build_network_circuit(rb, false, with_inverters, [](std::size_t, std::size_t) { return std::nullopt; });
  return rb;
}

/// Per-lane trace through the network: lines[lane][l] is the output line of layer l that
/// carries the signal entering at block input `lane`.
using LaneRoute = std::vector<std::vector<int>>;

/// Traces lanes through `rb` for a per-SwB cross decision (cross[l][s]).
inline LaneRoute trace_route(const KeyRB& rb, const std::vector<std::vector<bool>>& cross)
{
  const std::size_t m = rb.size;
  // position p of layer l (SwB p/2, slot p%2) reads line rb.layers[l][p/2].in_line[p%2] of layer l-1
  LaneRoute lines(m, std::vector<int>(rb.layers.size()));
  std::vector<int> line_of_lane(m);
  for (std::size_t i = 0; i < m; ++i) line_of_lane[i] = static_cast<int>(i);
  for (std::size_t l = 0; l < rb.layers.size(); ++l) {
    std::vector<int> lane_at(m, -1);
    for (std::size_t lane = 0; lane < m; ++lane) lane_at[static_cast<std::size_t>(line_of_lane[lane])] = static_cast<int>(lane);
    for (std::size_t s = 0; s < m / 2; ++s) {
      for (int q = 0; q < 2; ++q) {
        const int lane = lane_at[static_cast<std::size_t>(rb.layers[l][s].in_line[static_cast<std::size_t>(q)])];
        const int out_slot = cross[l][s] ? 1 - q : q;
        line_of_lane[static_cast<std::size_t>(lane)] = static_cast<int>(2 * s) + out_slot;
        lines[static_cast<std::size_t>(lane)][l] = static_cast<int>(2 * s) + out_slot;
      }
    }
  }
  return lines;
}

/// A uniformly random straight/cross setting of every switch box, traced.
template <class Rng>
LaneRoute random_route(const KeyRB& rb, Rng& rng)
{
  std::vector<std::vector<bool>> cross(rb.layers.size(), std::vector<bool>(rb.size / 2));
  for (auto& layer : cross) {
    for (std::size_t s = 0; s < layer.size(); ++s) layer[s] = (rng() & 1U) != 0;
  }
  return trace_route(rb, cross);
}

/// Route key bits realizing `lines`: for every output slot, select the SwB input that
/// carries the same lane one layer earlier. Other key bits are left as they are in `key`.
inline void apply_route(const KeyRB& rb, const LaneRoute& lines, BitVector& key)
{
  const std::size_t m = rb.size;
  if (lines.size() != m) throw Error(ErrorCode::embedding_mismatch, "route must cover every lane");
  key.resize(rb.num_keys(), false);
  std::vector<std::size_t> key_index(rb.circuit.num_nets(), 0);
  for (std::size_t i = 0; i < rb.key_layout.size(); ++i) key_index[rb.key_layout[i]] = i;
  for (std::size_t l = 0; l < rb.layers.size(); ++l) {
    std::vector<char> used(m, 0);
    for (std::size_t lane = 0; lane < m; ++lane) {
      if (lines[lane].size() != rb.layers.size()) throw Error(ErrorCode::embedding_mismatch, "route has wrong depth");
      const int line = lines[lane][l];
      const int prev = l == 0 ? static_cast<int>(lane) : lines[lane][l - 1];
      if (line < 0 || line >= static_cast<int>(m) || used[static_cast<std::size_t>(line)]) {
        throw Error(ErrorCode::embedding_mismatch, "route is not a permutation at layer " + std::to_string(l));
      }
      used[static_cast<std::size_t>(line)] = 1;
      const auto& swb = rb.layers[l][static_cast<std::size_t>(line) / 2];
      int q = -1;
      if (swb.in_line[0] == prev) q = 0;
      if (swb.in_line[1] == prev) q = 1;
      if (q < 0) throw Error(ErrorCode::embedding_mismatch, "route uses a missing network edge");
      const auto& bits = swb.key_bits[static_cast<std::size_t>(line % 2)];
      for (NetId k : bits) {
        if (rb.key_roles[key_index[k]].role == KeyRole::route) key[key_index[k]] = q == 1;
      }
    }
  }
}

/// Block output reached by each lane at the last layer.
inline std::vector<int> lane_outputs(const LaneRoute& lines)
{
  std::vector<int> out;
  for (const auto& l : lines) out.push_back(l.back());
  return out;
}

struct SlotRef {
  int layer = 0;
  int swb = 0;
  int slot = 0;
  bool operator==(const SlotRef&) const = default;
};

/// Gate paths mapped onto a routed network. Lane p < paths.size() carries path p and
/// hosts its k-th gate at layer k; remaining lanes are pure routing.
struct PathEmbedding {
  std::vector<GatePath> paths;
  /// Hosted 2-input gate per path position.
  std::vector<std::vector<GateType>> gate_types;
  LaneRoute lines;
  std::vector<std::vector<SlotRef>> slot_assignment;
  /// Host side-input net per path position (the exI source).
  std::vector<std::vector<NetId>> ex_input_map;
};

/// Fills slot_assignment from lines.
inline void assign_slots(PathEmbedding& e)
{
  e.slot_assignment.clear();
  for (std::size_t p = 0; p < e.gate_types.size(); ++p) {
    std::vector<SlotRef> slots;
    for (std::size_t k = 0; k < e.gate_types[p].size(); ++k) {
      const int line = e.lines.at(p).at(k);
      slots.push_back(SlotRef{static_cast<int>(k), line / 2, line % 2});
    }
    e.slot_assignment.push_back(std::move(slots));
  }
}

/// InterLock block for an embedding; the correct key routes every lane along its line
/// trace and enables the hosted gate on path lanes.
inline KeyRB build_interlock_keyrb(std::size_t m, const PathEmbedding& embedding)
{
  if (m < 4 || !is_power_of_two(m) || m > 32) {
    throw Error(ErrorCode::bad_size, "InterLock keyRB size must be a power of two in [4, 32], got " + std::to_string(m));
  }
  const std::size_t stages = benes_stages(m);
  if (embedding.gate_types.size() > m || embedding.lines.size() != m) {
    throw Error(ErrorCode::embedding_mismatch, "embedding needs at most " + std::to_string(m) + " paths over " +
                                                   std::to_string(m) + " lanes");
  }
  for (const auto& types : embedding.gate_types) {
    if (types.size() != stages) {
      throw Error(ErrorCode::embedding_mismatch, "path length " + std::to_string(types.size()) + ", expected " +
                                                     std::to_string(stages));
    }
    for (GateType t : types) {
      if (!is_binary(t) || t == GateType::MUX2) throw Error(ErrorCode::embedding_mismatch, "hosted gate must be 2-input");
    }
  }
  KeyRB rb;
  rb.topology = Topology::interlock;
  rb.size = m;
  rb.num_inputs = m;
  detail::network_shape(m, rb);
  std::vector<std::vector<std::optional<GateType>>> hosted(stages, std::vector<std::optional<GateType>>(m));
  for (std::size_t p = 0; p < embedding.gate_types.size(); ++p) {
    for (std::size_t k = 0; k < stages; ++k) {
      const int line = embedding.lines.at(p).at(k);
      if (line < 0 || line >= static_cast<int>(m)) throw Error(ErrorCode::embedding_mismatch, "line out of range");
      auto& slot = hosted[k][static_cast<std::size_t>(line)];
      if (slot) throw Error(ErrorCode::embedding_mismatch, "two gates share one slot");
      slot = embedding.gate_types[p][k];
    }
  }
  detail::build_network_circuit(rb, true, false,
                                [&](std::size_t l, std::size_t line) { return hosted[l][line]; });
  BitVector key;
  apply_route(rb, embedding.lines, key);
  for (std::size_t i = 0; i < rb.key_layout.size(); ++i) {
    const auto& role = rb.key_roles[i];
    if (role.role != KeyRole::func) continue;
    const auto line = static_cast<std::size_t>(2 * role.swb + role.slot);
    key[i] = hosted[static_cast<std::size_t>(role.layer)][line].has_value();
  }
  rb.correct_key = std::move(key);
  return rb;
}

// ---------------------------------------------------------------------------------
// Evaluation

/// Evaluates the standalone block on packed words (data inputs, then extra inputs).
inline std::vector<std::uint64_t> keyrb_evaluate(const KeyRB& rb, const BitVector& key,
                                                 std::span<const std::uint64_t> inputs)
{
  return Simulator(rb.circuit, key).run(inputs);
}

/// Source of a keyRB output under a key: input index and whether it arrives inverted.
struct Selection {
  int input = -1;
  bool inverted = false;
  bool operator==(const Selection&) const = default;
};

/// Per output, the input it routes (if it is a pure selection of one input), found with
/// one-hot patterns. Extra inputs are held at 0.
inline std::vector<std::optional<Selection>> keyrb_selections(const KeyRB& rb, const BitVector& key)
{
  const std::size_t n = rb.num_inputs;
  std::vector<std::uint64_t> words(rb.circuit.primary_inputs().size(), 0);
  for (std::size_t i = 0; i < n; ++i) words[i] = std::uint64_t{1} << i;
  const std::uint64_t mask = (std::uint64_t{1} << (n + 1)) - 1;
  const std::uint64_t zero_lane = std::uint64_t{1} << n;
  const auto out = keyrb_evaluate(rb, key, words);
  std::vector<std::optional<Selection>> result;
  for (std::uint64_t w : out) {
    w &= mask;
    std::optional<Selection> sel;
    if (!(w & zero_lane) && std::popcount(w) == 1) sel = Selection{std::countr_zero(w), false};
    const std::uint64_t inv = ~w & mask;
    if ((w & zero_lane) && std::popcount(inv) == 1) sel = Selection{std::countr_zero(inv), true};
    result.push_back(sel);
  }
  return result;
}

/// Copies the template into `host`. Template data/extra inputs map to the given host
/// nets, outputs to `outputs` (undriven internal nets), and every template key to a new
/// host key input named keyinput<key_offset + i>. Created gates join `group`.
inline void instantiate_keyrb(Netlist& host, KeyRB& rb, const std::vector<NetId>& inputs,
                              const std::vector<NetId>& ex_inputs, const std::vector<NetId>& outputs,
                              std::size_t key_offset, const std::string& group)
{
  const auto& t = rb.circuit;
  if (inputs.size() != rb.input_nets.size() || ex_inputs.size() != rb.ex_nets.size() ||
      outputs.size() != rb.output_nets.size()) {
    throw Error(ErrorCode::interface_mismatch, "keyRB placement does not match its interface");
  }
  const int gid = host.add_group(group);
  std::vector<NetId> map(t.num_nets(), no_net);
  for (std::size_t i = 0; i < inputs.size(); ++i) map[rb.input_nets[i]] = inputs[i];
  for (std::size_t i = 0; i < ex_inputs.size(); ++i) map[rb.ex_nets[i]] = ex_inputs[i];
  rb.placement = KeyRbPlacement{inputs, ex_inputs, outputs, {}, group};
  for (std::size_t i = 0; i < rb.key_layout.size(); ++i) {
    const NetId k = host.add_key_input(host.fresh_name("keyinput" + std::to_string(key_offset + i)));
    map[rb.key_layout[i]] = k;
    rb.placement.keys.push_back(k);
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const NetId tout = rb.output_nets[i];
    if (map[tout] != no_net) throw Error(ErrorCode::interface_mismatch, "keyRB output aliases an input");
    map[tout] = outputs[i];
  }
  for (const auto& net : t.nets()) {
    if (map[net.id] != no_net) continue;
    if (net.kind == NetKind::constant) {
      map[net.id] = host.constant(net.constant_value);
    } else if (net.kind == NetKind::internal) {
      map[net.id] = host.add_internal(host.fresh_name(group + "_" + net.name));
    }
  }
  for (GateId g : t.topological_order()) {
    const auto& gate = t.gate(g);
    std::vector<NetId> ins;
    for (NetId in : gate.inputs) ins.push_back(map[in]);
    host.add_gate(gate.type, std::move(ins), map[gate.output], gid);
  }
}

} // namespace keylock
