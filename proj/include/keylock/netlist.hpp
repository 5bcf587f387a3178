#pragma once

#include "error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace keylock {

using NetId = std::uint32_t;
using GateId = std::uint32_t;
using BitVector = std::vector<bool>;

inline constexpr NetId no_net = ~NetId{0};
inline constexpr GateId no_gate = ~GateId{0};

enum class GateType : std::uint8_t { AND, NAND, OR, NOR, XOR, XNOR, NOT, BUF, MUX2 };

enum class NetKind : std::uint8_t { primary_input, key_input, internal, constant };

inline std::string_view to_string(GateType type)
{
  switch (type) {
  case GateType::AND: return "AND";
  case GateType::NAND: return "NAND";
  case GateType::OR: return "OR";
  case GateType::NOR: return "NOR";
  case GateType::XOR: return "XOR";
  case GateType::XNOR: return "XNOR";
  case GateType::NOT: return "NOT";
  case GateType::BUF: return "BUF";
  case GateType::MUX2: return "MUX";
  }
  return "?";
}

inline std::optional<GateType> gate_type_from_string(std::string_view name)
{
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "AND") return GateType::AND;
  if (upper == "NAND") return GateType::NAND;
  if (upper == "OR") return GateType::OR;
  if (upper == "NOR") return GateType::NOR;
  if (upper == "XOR") return GateType::XOR;
  if (upper == "XNOR") return GateType::XNOR;
  if (upper == "NOT" || upper == "INV") return GateType::NOT;
  if (upper == "BUF" || upper == "BUFF") return GateType::BUF;
  if (upper == "MUX" || upper == "MUX2") return GateType::MUX2;
  return std::nullopt;
}

/// Fan-in of a gate type: MUX2 is (select, data0, data1), NOT/BUF unary, the rest binary.
constexpr std::size_t arity(GateType type)
{
  switch (type) {
  case GateType::NOT:
  case GateType::BUF: return 1;
  case GateType::MUX2: return 3;
  default: return 2;
  }
}

constexpr bool is_binary(GateType type) { return arity(type) == 2; }

/// Evaluates one gate on 64 packed patterns.
constexpr std::uint64_t eval_gate(GateType type, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
  switch (type) {
  case GateType::AND: return a & b;
  case GateType::NAND: return ~(a & b);
  case GateType::OR: return a | b;
  case GateType::NOR: return ~(a | b);
  case GateType::XOR: return a ^ b;
  case GateType::XNOR: return ~(a ^ b);
  case GateType::NOT: return ~a;
  case GateType::BUF: return a;
  case GateType::MUX2: return (a & c) | (~a & b);
  }
  return 0;
}

/// The gate computing the complement of `type`, when one exists in the library.
constexpr std::optional<GateType> negated(GateType type)
{
  switch (type) {
  case GateType::AND: return GateType::NAND;
  case GateType::NAND: return GateType::AND;
  case GateType::OR: return GateType::NOR;
  case GateType::NOR: return GateType::OR;
  case GateType::XOR: return GateType::XNOR;
  case GateType::XNOR: return GateType::XOR;
  case GateType::NOT: return GateType::BUF;
  case GateType::BUF: return GateType::NOT;
  case GateType::MUX2: return std::nullopt;
  }
  return std::nullopt;
}

struct Net {
  NetId id = no_net;
  std::string name;
  NetKind kind = NetKind::internal;
  bool constant_value = false;
};

struct Gate {
  GateType type = GateType::BUF;
  std::vector<NetId> inputs;
  NetId output = no_net;
  /// Index into Netlist::group_names(), or -1 for ordinary circuit logic.
  int group = -1;
};

/// Single-driver gate-level netlist. Nets are dense ids; names are unique.
class Netlist {
public:
  NetId add_net(std::string name, NetKind kind, bool constant_value = false)
  {
    if (by_name_.contains(name)) {
      throw Error(ErrorCode::duplicate_driver, "net '" + name + "' declared twice");
    }
    const auto id = static_cast<NetId>(nets_.size());
    by_name_.emplace(name, id);
    nets_.push_back(Net{id, std::move(name), kind, constant_value});
    driver_.push_back(no_gate);
    if (kind == NetKind::primary_input) inputs_.push_back(id);
    if (kind == NetKind::key_input) keys_.push_back(id);
    return id;
  }

  NetId add_input(std::string name) { return add_net(std::move(name), NetKind::primary_input); }
  NetId add_key_input(std::string name) { return add_net(std::move(name), NetKind::key_input); }
  NetId add_internal(std::string name) { return add_net(std::move(name), NetKind::internal); }
  NetId add_constant(std::string name, bool value) { return add_net(std::move(name), NetKind::constant, value); }

  /// Returns the id of a constant net with the given value, creating it on first use.
  NetId constant(bool value)
  {
    for (const auto& net : nets_) {
      if (net.kind == NetKind::constant && net.constant_value == value) return net.id;
    }
    return add_constant(fresh_name(value ? "const1" : "const0"), value);
  }

  GateId add_gate(GateType type, std::vector<NetId> inputs, NetId output, int group = -1)
  {
    if (inputs.size() != arity(type)) {
      throw Error(ErrorCode::arity_mismatch, std::string(to_string(type)) + " expects " +
                                                 std::to_string(arity(type)) + " inputs, got " +
                                                 std::to_string(inputs.size()));
    }
    for (NetId in : inputs) check_net(in);
    check_net(output);
    if (nets_[output].kind != NetKind::internal) {
      throw Error(ErrorCode::duplicate_driver, "net '" + nets_[output].name + "' is an input or constant");
    }
    if (driver_[output] != no_gate) {
      throw Error(ErrorCode::duplicate_driver, "net '" + nets_[output].name + "' has two drivers");
    }
    const auto id = static_cast<GateId>(gates_.size());
    gates_.push_back(Gate{type, std::move(inputs), output, group});
    driver_[output] = id;
    return id;
  }

  /// Convenience: creates a fresh internal net named after `name` and drives it.
  NetId add_gate_net(GateType type, std::vector<NetId> inputs, std::string_view name, int group = -1)
  {
    const NetId out = add_internal(fresh_name(name));
    add_gate(type, std::move(inputs), out, group);
    return out;
  }

  void add_output(NetId net)
  {
    check_net(net);
    outputs_.push_back(net);
  }

  [[nodiscard]] std::optional<NetId> find(std::string_view name) const
  {
    const auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] const std::vector<Net>& nets() const { return nets_; }
  [[nodiscard]] const std::vector<Gate>& gates() const { return gates_; }
  [[nodiscard]] const Net& net(NetId id) const { return nets_.at(id); }
  [[nodiscard]] const Gate& gate(GateId id) const { return gates_.at(id); }
  [[nodiscard]] const std::vector<NetId>& primary_inputs() const { return inputs_; }
  [[nodiscard]] const std::vector<NetId>& primary_outputs() const { return outputs_; }
  [[nodiscard]] const std::vector<NetId>& key_inputs() const { return keys_; }
  [[nodiscard]] std::size_t num_nets() const { return nets_.size(); }
  [[nodiscard]] std::size_t num_gates() const { return gates_.size(); }

  [[nodiscard]] GateId driver(NetId net) const { return driver_.at(net); }

  [[nodiscard]] bool cyclic_allowed() const { return cyclic_allowed_; }
  void set_cyclic_allowed(bool allowed) { cyclic_allowed_ = allowed; }

  [[nodiscard]] const std::vector<std::string>& group_names() const { return group_names_; }
  int add_group(std::string name)
  {
    group_names_.push_back(std::move(name));
    return static_cast<int>(group_names_.size()) - 1;
  }
  void set_gate_group(GateId g, int group) { gates_.at(g).group = group; }
  void clear_groups()
  {
    group_names_.clear();
    for (auto& g : gates_) g.group = -1;
  }

  /// Gate readers of each net (a gate appears once per input pin).
  [[nodiscard]] std::vector<std::vector<GateId>> fanouts() const
  {
    std::vector<std::vector<GateId>> result(nets_.size());
    for (GateId g = 0; g < gates_.size(); ++g) {
      for (NetId in : gates_[g].inputs) result[in].push_back(g);
    }
    return result;
  }

  /// Topological order of gates, or std::nullopt when the gate graph has a cycle.
  [[nodiscard]] std::optional<std::vector<GateId>> try_topological_order() const
  {
    std::vector<std::uint32_t> pending(gates_.size(), 0);
    const auto fo = fanouts();
    std::vector<GateId> ready;
    for (GateId g = 0; g < gates_.size(); ++g) {
      for (NetId in : gates_[g].inputs) {
        if (driver_[in] != no_gate) ++pending[g];
      }
      if (pending[g] == 0) ready.push_back(g);
    }
    std::vector<GateId> order;
    order.reserve(gates_.size());
    for (std::size_t i = 0; i < ready.size(); ++i) {
      const GateId g = ready[i];
      order.push_back(g);
      for (GateId reader : fo[gates_[g].output]) {
        if (--pending[reader] == 0) ready.push_back(reader);
      }
    }
    if (order.size() != gates_.size()) return std::nullopt;
    return order;
  }

  [[nodiscard]] std::vector<GateId> topological_order() const
  {
    auto order = try_topological_order();
    if (!order) throw Error(ErrorCode::cyclic_netlist, "gate graph has a combinational cycle");
    return *std::move(order);
  }

  [[nodiscard]] bool is_acyclic() const { return try_topological_order().has_value(); }

  /// Checks the structural invariants: every read net is driven or is an input/constant.
  void validate() const
  {
    auto sourced = [&](NetId n) { return nets_[n].kind != NetKind::internal || driver_[n] != no_gate; };
    for (const auto& g : gates_) {
      for (NetId in : g.inputs) {
        if (!sourced(in)) throw Error(ErrorCode::undeclared_net, "net '" + nets_[in].name + "' is never driven");
      }
    }
    for (NetId po : outputs_) {
      if (!sourced(po)) throw Error(ErrorCode::undeclared_net, "output '" + nets_[po].name + "' is never driven");
    }
    if (!cyclic_allowed_ && !is_acyclic()) {
      throw Error(ErrorCode::cyclic_netlist, "gate graph has a combinational cycle");
    }
  }

  [[nodiscard]] std::string fresh_name(std::string_view base) const
  {
    std::string name(base);
    if (!by_name_.contains(name)) return name;
    for (std::size_t i = 1;; ++i) {
      name = std::string(base) + "_" + std::to_string(i);
      if (!by_name_.contains(name)) return name;
    }
  }

  // Structural editing, used by the locking transformations.

  void set_gate_input(GateId g, std::size_t pin, NetId net)
  {
    check_net(net);
    gates_.at(g).inputs.at(pin) = net;
  }

  void set_gate_type(GateId g, GateType type)
  {
    if (arity(type) != arity(gates_.at(g).type)) {
      throw Error(ErrorCode::arity_mismatch, "cannot retype gate to different arity");
    }
    gates_[g].type = type;
  }

  /// Moves the driver of gate `g` to net `net`, which must be an undriven internal net.
  void set_gate_output(GateId g, NetId net)
  {
    check_net(net);
    if (driver_[net] != no_gate) throw Error(ErrorCode::duplicate_driver, "net '" + nets_[net].name + "' already driven");
    driver_[gates_.at(g).output] = no_gate;
    gates_[g].output = net;
    driver_[net] = g;
  }

  void set_output(std::size_t index, NetId net)
  {
    check_net(net);
    outputs_.at(index) = net;
  }

  /// Removes the given gates; their output nets become undriven. Gate ids are compacted.
  void remove_gates(const std::vector<GateId>& doomed)
  {
    std::vector<bool> drop(gates_.size(), false);
    for (GateId g : doomed) drop.at(g) = true;
    std::vector<Gate> kept;
    kept.reserve(gates_.size());
    std::fill(driver_.begin(), driver_.end(), no_gate);
    for (GateId g = 0; g < gates_.size(); ++g) {
      if (drop[g]) continue;
      driver_[gates_[g].output] = static_cast<GateId>(kept.size());
      kept.push_back(std::move(gates_[g]));
    }
    gates_ = std::move(kept);
  }

  /// Turns a key input into a constant net and drops it from the key list.
  void fix_key_input(NetId key, bool value)
  {
    check_net(key);
    if (nets_[key].kind != NetKind::key_input) throw Error(ErrorCode::wrong_topology, "not a key input");
    nets_[key].kind = NetKind::constant;
    nets_[key].constant_value = value;
    std::erase(keys_, key);
  }

private:
  void check_net(NetId id) const
  {
    if (id >= nets_.size()) throw Error(ErrorCode::undeclared_net, "net id " + std::to_string(id) + " out of range");
  }

  std::vector<Net> nets_;
  std::vector<Gate> gates_;
  std::vector<GateId> driver_;
  std::vector<NetId> inputs_;
  std::vector<NetId> outputs_;
  std::vector<NetId> keys_;
  std::vector<std::string> group_names_;
  std::unordered_map<std::string, NetId> by_name_;
  bool cyclic_allowed_ = false;
};

} // namespace keylock
