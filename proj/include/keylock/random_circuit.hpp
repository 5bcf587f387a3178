#pragma once

// Seeded random combinational netlists for tests and benchmark sweeps.

#include "netlist.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace keylock {

struct RandomCircuitConfig {
  std::size_t inputs = 8;
  std::size_t outputs = 4;
  std::size_t gates = 40;
  /// Gate inputs are drawn from the most recent `window` nets, which controls depth.
  std::size_t window = 64;
  /// Include NOT/BUF gates in the mix.
  bool unary = true;
  std::uint64_t seed = 1;
};

inline Netlist random_circuit(const RandomCircuitConfig& cfg)
{
  std::mt19937_64 rng(cfg.seed);
  Netlist n;
  std::vector<NetId> pool;
  for (std::size_t i = 0; i < cfg.inputs; ++i) pool.push_back(n.add_input("pi" + std::to_string(i)));
  static constexpr GateType binary[] = {GateType::AND, GateType::NAND, GateType::OR,
                                        GateType::NOR, GateType::XOR,  GateType::XNOR};
  std::vector<int> readers(cfg.inputs + cfg.gates, 0);
  std::size_t oldest_unread = 0;
  auto pick = [&]() {
    // Half the pins consume the oldest unread net so little logic dangles.
    while (oldest_unread < pool.size() && readers[pool[oldest_unread]] > 0) ++oldest_unread;
    if (oldest_unread + 1 < pool.size() && (rng() & 1U) != 0) return pool[oldest_unread];
    const std::size_t w = std::min(cfg.window, pool.size());
    std::uniform_int_distribution<std::size_t> d(pool.size() - w, pool.size() - 1);
    return pool[d(rng)];
  };
  for (std::size_t g = 0; g < cfg.gates; ++g) {
    const auto roll = std::uniform_int_distribution<int>(0, 99)(rng);
    GateType type = binary[std::uniform_int_distribution<std::size_t>(0, 5)(rng)];
    if (cfg.unary && roll < 8) type = roll < 6 ? GateType::NOT : GateType::BUF;
    std::vector<NetId> ins;
    for (std::size_t k = 0; k < arity(type); ++k) {
      NetId in = pick();
      for (int retry = 0; retry < 4 && std::find(ins.begin(), ins.end(), in) != ins.end(); ++retry) in = pick();
      ins.push_back(in);
    }
    for (NetId in : ins) ++readers[in];
    const NetId out = n.add_internal("n" + std::to_string(g));
    n.add_gate(type, std::move(ins), out);
    pool.push_back(out);
  }
  // Dangling gate outputs become outputs first, latest first; then fill from the tail.
  std::vector<NetId> outs;
  for (auto it = pool.rbegin(); it != pool.rend() && outs.size() < cfg.outputs; ++it) {
    if (n.net(*it).kind == NetKind::internal && readers[*it] == 0) outs.push_back(*it);
  }
  for (auto it = pool.rbegin(); it != pool.rend() && outs.size() < cfg.outputs; ++it) {
    if (std::find(outs.begin(), outs.end(), *it) == outs.end()) outs.push_back(*it);
  }
  std::sort(outs.begin(), outs.end());
  for (NetId o : outs) n.add_output(o);
  return n;
}

} // namespace keylock
