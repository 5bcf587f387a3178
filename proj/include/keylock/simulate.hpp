#pragma once

#include "error.hpp"
#include "netlist.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace keylock {

/// Bit-parallel evaluator for a netlist under a fixed key.
///
/// Construction resolves every MUX2 whose select is determined by keys and constants
/// alone, dropping the unselected data edge, then orders the remaining structure
/// topologically. A cycle that survives resolution raises CycleUnderKey.
class Simulator {
public:
  Simulator(const Netlist& netlist, const BitVector& key) : netlist_(&netlist)
  {
    if (key.size() != netlist.key_inputs().size()) {
      throw Error(ErrorCode::interface_mismatch, "expected " + std::to_string(netlist.key_inputs().size()) +
                                                     " key bits, got " + std::to_string(key.size()));
    }
    schedule(key);
  }

  [[nodiscard]] const Netlist& netlist() const { return *netlist_; }

  /// Evaluates 64 patterns at once: pi_words[i] packs the values of primary input i.
  [[nodiscard]] std::vector<std::uint64_t> run(std::span<const std::uint64_t> pi_words) const
  {
    std::vector<std::uint64_t> values(netlist_->num_nets(), 0);
    run_into(pi_words, values);
    std::vector<std::uint64_t> result;
    result.reserve(netlist_->primary_outputs().size());
    for (NetId po : netlist_->primary_outputs()) result.push_back(values[po]);
    return result;
  }

  /// Like run(), but exposes every net value (indexed by NetId).
  void run_into(std::span<const std::uint64_t> pi_words, std::vector<std::uint64_t>& values) const
  {
    const auto& pis = netlist_->primary_inputs();
    if (pi_words.size() != pis.size()) {
      throw Error(ErrorCode::interface_mismatch, "expected " + std::to_string(pis.size()) + " input words");
    }
    values.assign(netlist_->num_nets(), 0);
    for (const auto& [net, word] : static_values_) values[net] = word;
    for (std::size_t i = 0; i < pis.size(); ++i) values[pis[i]] = pi_words[i];
    for (GateId g : order_) {
      const auto& gate = netlist_->gate(g);
      const auto& in = gate.inputs;
      switch (in.size()) {
      case 1: values[gate.output] = eval_gate(gate.type, values[in[0]]); break;
      case 2: values[gate.output] = eval_gate(gate.type, values[in[0]], values[in[1]]); break;
      default: values[gate.output] = eval_gate(gate.type, values[in[0]], values[in[1]], values[in[2]]); break;
      }
    }
  }

  [[nodiscard]] BitVector run(const BitVector& pi) const
  {
    std::vector<std::uint64_t> words(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) words[i] = pi[i] ? ~std::uint64_t{0} : 0;
    const auto out = run(words);
    BitVector result(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) result[i] = (out[i] & 1U) != 0;
    return result;
  }

private:
  void schedule(const BitVector& key)
  {
    const auto& n = *netlist_;
    const auto fanout = n.fanouts();
    std::vector<char> ready(n.num_nets(), 0);
    std::vector<char> is_static(n.num_nets(), 0);
    std::vector<char> value(n.num_nets(), 0);
    std::vector<char> done(n.num_gates(), 0);

    std::vector<NetId> queue;
    for (const auto& net : n.nets()) {
      if (net.kind == NetKind::constant) {
        ready[net.id] = is_static[net.id] = 1;
        value[net.id] = net.constant_value;
        queue.push_back(net.id);
      } else if (net.kind == NetKind::primary_input) {
        ready[net.id] = 1;
        queue.push_back(net.id);
      } else if (net.kind == NetKind::internal && n.driver(net.id) == no_gate) {
        // Undriven internal nets evaluate to zero.
        ready[net.id] = 1;
        queue.push_back(net.id);
      }
    }
    for (std::size_t i = 0; i < n.key_inputs().size(); ++i) {
      const NetId k = n.key_inputs()[i];
      ready[k] = is_static[k] = 1;
      value[k] = key[i];
      queue.push_back(k);
    }

    auto try_gate = [&](GateId g) {
      if (done[g]) return;
      const auto& gate = n.gate(g);
      const auto& in = gate.inputs;
      bool stat = true;
      if (gate.type == GateType::MUX2 && ready[in[0]] && is_static[in[0]]) {
        const NetId chosen = value[in[0]] ? in[2] : in[1];
        if (!ready[chosen]) return;
        stat = is_static[chosen] != 0;
        if (stat) value[gate.output] = value[chosen];
      } else {
        for (NetId i : in) {
          if (!ready[i]) return;
          stat = stat && is_static[i];
        }
        if (stat) {
          const auto word = [&](std::size_t p) { return value[in[p]] ? ~std::uint64_t{0} : 0; };
          const std::uint64_t v = in.size() == 1   ? eval_gate(gate.type, word(0))
                                  : in.size() == 2 ? eval_gate(gate.type, word(0), word(1))
                                                   : eval_gate(gate.type, word(0), word(1), word(2));
          value[gate.output] = (v & 1U) != 0;
        }
      }
      done[g] = 1;
      ready[gate.output] = 1;
      is_static[gate.output] = stat;
      order_.push_back(g);
      queue.push_back(gate.output);
    };

    for (GateId g = 0; g < n.num_gates(); ++g) {
      if (n.gate(g).inputs.empty()) try_gate(g);
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (GateId reader : fanout[queue[head]]) try_gate(reader);
    }
    if (order_.size() != n.num_gates()) {
      throw Error(ErrorCode::cycle_under_key, "key leaves a combinational cycle");
    }
    for (const auto& net : n.nets()) {
      if (is_static[net.id]) static_values_.emplace_back(net.id, value[net.id] ? ~std::uint64_t{0} : 0);
    }
  }

  const Netlist* netlist_;
  std::vector<GateId> order_;
  std::vector<std::pair<NetId, std::uint64_t>> static_values_;
};

/// Evaluates the primary outputs for one input vector under one key.
inline BitVector simulate(const Netlist& n, const BitVector& pi, const BitVector& key = {})
{
  if (pi.size() != n.primary_inputs().size()) {
    throw Error(ErrorCode::interface_mismatch, "expected " + std::to_string(n.primary_inputs().size()) + " input bits");
  }
  return Simulator(n, key).run(pi);
}

/// Packed input words enumerating patterns [64*word, 64*word+63] of an exhaustive sweep
/// over `num_inputs` inputs (pattern j assigns input i the bit (j >> i) & 1).
inline std::vector<std::uint64_t> exhaustive_words(std::size_t num_inputs, std::uint64_t word)
{
  static constexpr std::uint64_t low_masks[6] = {0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
                                                 0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
  std::vector<std::uint64_t> words(num_inputs);
  for (std::size_t i = 0; i < num_inputs; ++i) {
    words[i] = i < 6 ? low_masks[i] : (((word >> (i - 6)) & 1U) ? ~std::uint64_t{0} : 0);
  }
  return words;
}

/// Mask of the patterns in `word` that lie inside an exhaustive sweep over `num_inputs` inputs.
inline std::uint64_t exhaustive_valid_mask(std::size_t num_inputs, std::uint64_t word)
{
  (void)word;
  if (num_inputs >= 6) return ~std::uint64_t{0};
  return (std::uint64_t{1} << (std::uint64_t{1} << num_inputs)) - 1;
}

inline std::uint64_t exhaustive_word_count(std::size_t num_inputs)
{
  return num_inputs <= 6 ? 1 : (std::uint64_t{1} << (num_inputs - 6));
}

} // namespace keylock
