#include "generators.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <set>

using namespace keylock;

namespace {

// Every maximal source-to-sink gate path, as gate id lists.
std::vector<std::vector<GateId>> all_paths(const Netlist& n)
{
  const auto fanout = n.fanouts();
  std::vector<std::vector<GateId>> paths;
  std::vector<GateId> cur;
  std::function<void(NetId)> walk = [&](NetId net) {
    if (fanout[net].empty()) {
      if (!cur.empty()) paths.push_back(cur);
      return;
    }
    for (GateId g : fanout[net]) {
      cur.push_back(g);
      walk(n.gate(g).output);
      cur.pop_back();
    }
  };
  for (NetId net = 0; net < n.num_nets(); ++net) {
    if (n.driver(net) == no_gate) walk(net);
  }
  return paths;
}

} // namespace

TEST(Timing, BufChainIsCritical)
{
  const auto n = parse_bench("INPUT(a)\nOUTPUT(e)\nb = BUF(a)\nc = BUF(b)\nd1 = BUF(c)\nd2 = BUF(d1)\ne = BUF(d2)\n");
  const auto t = timing_analyze(n);
  EXPECT_EQ(t.depth, 5);
  for (int s : t.slack) EXPECT_EQ(s, 0);
}

TEST(Timing, ShortBranchHasSlack)
{
  const auto n = parse_bench(
      "INPUT(a)\nINPUT(b)\nOUTPUT(y)\n"
      "s1 = BUF(a)\ns2 = BUF(s1)\ns3 = BUF(s2)\n"
      "l1 = BUF(b)\nl2 = BUF(l1)\nl3 = BUF(l2)\nl4 = BUF(l3)\nl5 = BUF(l4)\n"
      "y = AND(s3, l5)\n");
  const auto t = timing_analyze(n);
  for (const char* s : {"s1", "s2", "s3"}) EXPECT_EQ(t.slack[*n.find(s)], 2) << s;
  for (const char* s : {"l1", "l3", "l5", "y"}) EXPECT_EQ(t.slack[*n.find(s)], 0) << s;
}

TEST(Timing, SlackMatchesPathEnumeration)
{
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto n = gen::small_circuit(seed, 5, 3, 25);
    const auto t = timing_analyze(n);
    const auto paths = all_paths(n);
    std::vector<int> longest(n.num_nets(), 0);
    int depth = 0;
    for (const auto& p : paths) {
      const int len = static_cast<int>(p.size());
      depth = std::max(depth, len);
      longest[n.gate(p.front()).inputs[0]] = std::max(longest[n.gate(p.front()).inputs[0]], len);
      for (GateId g : p) {
        longest[n.gate(g).output] = std::max(longest[n.gate(g).output], len);
        for (NetId in : n.gate(g).inputs) {
          if (n.driver(in) == no_gate) longest[in] = std::max(longest[in], len);
        }
      }
    }
    EXPECT_EQ(t.depth, depth);
    for (const auto& p : paths) {
      int min_slack = depth;
      for (GateId g : p) {
        const NetId out = n.gate(g).output;
        EXPECT_EQ(t.slack[out], depth - longest[out]);
        EXPECT_GE(t.slack[out], 0);
        min_slack = std::min(min_slack, t.slack[out]);
      }
      EXPECT_LE(min_slack, depth - static_cast<int>(p.size()));
    }
  }
}

TEST(Timing, LevelsFollowInputs)
{
  const auto n = gen::small_circuit(5, 8, 4, 80);
  const auto t = timing_analyze(n);
  for (const auto& g : n.gates()) {
    int m = 0;
    for (NetId in : g.inputs) m = std::max(m, t.level[in]);
    EXPECT_EQ(t.level[g.output], m + 1);
  }
}

TEST(Timing, CyclicNetlistThrows)
{
  const auto n = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\nx = MUX(keyinput0, a, y)\ny = NOT(x)\n");
  try {
    (void)timing_analyze(n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cyclic_netlist);
  }
}

TEST(Paths, XnorChainFound)
{
  const auto n = parse_bench(
      "INPUT(a)\nINPUT(b)\nOUTPUT(y)\n"
      "x1 = XNOR(a, b)\nx2 = XNOR(x1, b)\nx3 = XNOR(x2, a)\ny = XNOR(x3, b)\n");
  const auto paths = enumerate_paths(n, 4, 1);
  ASSERT_EQ(paths.size(), 1U);
  EXPECT_EQ(paths[0], (GatePath{0, 1, 2, 3}));
}

TEST(Paths, XnorRichRankedFirst)
{
  const auto n = parse_bench(
      "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\n"
      "p1 = AND(a, b)\np2 = AND(p1, b)\ny = AND(p2, a)\n"
      "q1 = XNOR(a, b)\nq2 = XNOR(q1, b)\nz = XNOR(q2, a)\n");
  const auto paths = enumerate_paths(n, 3, 1);
  ASSERT_EQ(paths.size(), 1U);
  EXPECT_EQ(n.gate(paths[0][0]).type, GateType::XNOR);
}

TEST(Paths, DisjointOnRandomDags)
{
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto n = gen::small_circuit(seed, 10, 6, 150);
    const auto paths = enumerate_paths(n, 4, 8);
    ASSERT_EQ(paths.size(), 8U);
    std::set<GateId> seen;
    for (const auto& p : paths) {
      EXPECT_EQ(p.size(), 4U);
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const auto& next = n.gate(p[i + 1]).inputs;
        EXPECT_NE(std::find(next.begin(), next.end(), n.gate(p[i]).output), next.end());
      }
      for (GateId g : p) {
        EXPECT_LE(n.gate(g).inputs.size(), 2U);
        EXPECT_TRUE(seen.insert(g).second) << "gate " << g << " shared";
      }
    }
  }
}

TEST(Paths, ShortageThrows)
{
  const auto n = parse_bench("INPUT(a)\nOUTPUT(y)\nx = NOT(a)\ny = NOT(x)\n");
  try {
    (void)enumerate_paths(n, 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_paths);
  }
}
