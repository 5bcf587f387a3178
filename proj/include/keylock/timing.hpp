#pragma once

// Unit-delay timing and path selection.

#include "error.hpp"
#include "netlist.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace keylock {

struct TimingInfo {
  /// Unit-delay arrival level per net (inputs and constants are level 0).
  std::vector<int> level;
  /// Longest gate distance from each net to any sink.
  std::vector<int> to_output;
  /// depth − (level + to_output); zero on every longest path.
  std::vector<int> slack;
  /// Net lies in the fan-in of a primary output.
  std::vector<char> observable;
  int depth = 0;
};

inline TimingInfo timing_analyze(const Netlist& n)
{
  const auto order = n.topological_order();
  TimingInfo t;
  t.level.assign(n.num_nets(), 0);
  t.to_output.assign(n.num_nets(), 0);
  t.observable.assign(n.num_nets(), 0);
  for (NetId o : n.primary_outputs()) t.observable[o] = 1;
  for (GateId g : order) {
    const auto& gate = n.gate(g);
    int lvl = 0;
    for (NetId in : gate.inputs) lvl = std::max(lvl, t.level[in]);
    t.level[gate.output] = lvl + 1;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& gate = n.gate(*it);
    for (NetId in : gate.inputs) {
      t.to_output[in] = std::max(t.to_output[in], t.to_output[gate.output] + 1);
      t.observable[in] |= t.observable[gate.output];
    }
  }
  for (int l : t.level) t.depth = std::max(t.depth, l);
  t.slack.resize(n.num_nets());
  for (std::size_t i = 0; i < t.slack.size(); ++i) t.slack[i] = t.depth - t.level[i] - t.to_output[i];
  return t;
}

/// Per-gate-type weights used to rank otherwise equal paths.
struct PathPreference {
  std::array<int, 9> weight{};

  [[nodiscard]] int operator()(GateType type) const { return weight[static_cast<std::size_t>(type)]; }

  /// XOR/XNOR-rich paths first.
  static PathPreference xor_rich()
  {
    PathPreference p;
    p.weight[static_cast<std::size_t>(GateType::XOR)] = 1;
    p.weight[static_cast<std::size_t>(GateType::XNOR)] = 1;
    return p;
  }
};

using GatePath = std::vector<GateId>;

struct RankedPath {
  GatePath gates;
  int min_slack = 0;
  int preference = 0;
};

inline constexpr std::size_t default_path_budget = 400000;

/// All chains of `length` non-MUX gates, each reading the previous one's output, sorted by
/// (min slack desc, preference desc, gate ids asc). Enumeration stops after `budget` chains.
inline std::vector<RankedPath> rank_path_windows(const Netlist& n, std::size_t length, const PathPreference& prefer,
                                                 std::size_t budget = default_path_budget)
{
  if (length == 0) return {};
  const auto timing = timing_analyze(n);
  const auto fanout = n.fanouts();
  std::vector<RankedPath> result;
  GatePath stack;
  // Dead logic has no path to an output and would otherwise rank as high-slack.
  auto usable = [&](GateId g) { return n.gate(g).type != GateType::MUX2 && timing.observable[n.gate(g).output]; };

  auto extend = [&](auto&& self) -> void {
    if (result.size() >= budget) return;
    if (stack.size() == length) {
      RankedPath p;
      p.gates = stack;
      p.min_slack = timing.slack[n.gate(stack.front()).output];
      for (GateId g : stack) {
        p.min_slack = std::min(p.min_slack, timing.slack[n.gate(g).output]);
        p.preference += prefer(n.gate(g).type);
      }
      result.push_back(std::move(p));
      return;
    }
    auto readers = fanout[n.gate(stack.back()).output];
    std::sort(readers.begin(), readers.end());
    readers.erase(std::unique(readers.begin(), readers.end()), readers.end());
    for (GateId next : readers) {
      if (!usable(next)) continue;
      stack.push_back(next);
      self(self);
      stack.pop_back();
    }
  };
  for (GateId g = 0; g < n.num_gates() && result.size() < budget; ++g) {
    if (!usable(g)) continue;
    stack.assign(1, g);
    extend(extend);
  }
  std::stable_sort(result.begin(), result.end(), [](const RankedPath& a, const RankedPath& b) {
    if (a.min_slack != b.min_slack) return a.min_slack > b.min_slack;
    if (a.preference != b.preference) return a.preference > b.preference;
    return a.gates < b.gates;
  });
  return result;
}

/// Up to `count` gate-disjoint paths of exactly `length` gates, best-ranked first.
/// Throws InsufficientPaths when fewer than `count` exist.
inline std::vector<GatePath> enumerate_paths(const Netlist& n, std::size_t length, std::size_t count,
                                             const PathPreference& prefer = PathPreference::xor_rich())
{
  const auto ranked = rank_path_windows(n, length, prefer);
  std::vector<char> used(n.num_gates(), 0);
  std::vector<GatePath> chosen;
  for (const auto& p : ranked) {
    if (chosen.size() == count) break;
    if (std::any_of(p.gates.begin(), p.gates.end(), [&](GateId g) { return used[g]; })) continue;
    for (GateId g : p.gates) used[g] = 1;
    chosen.push_back(p.gates);
  }
  if (chosen.size() < count) {
    throw Error(ErrorCode::insufficient_paths, "found " + std::to_string(chosen.size()) + " disjoint paths of length " +
                                                   std::to_string(length) + ", need " + std::to_string(count));
  }
  return chosen;
}

} // namespace keylock
