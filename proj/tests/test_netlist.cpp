#include "generators.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace keylock;

namespace {

constexpr const char* c17 = R"(# c17
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
)";

// Independent evaluator: recursion over drivers, one pattern at a time.
BitVector eval_recursive(const Netlist& n, const BitVector& pi, const BitVector& key)
{
  std::vector<int> memo(n.num_nets(), -1);
  for (std::size_t i = 0; i < pi.size(); ++i) memo[n.primary_inputs()[i]] = pi[i];
  for (std::size_t i = 0; i < key.size(); ++i) memo[n.key_inputs()[i]] = key[i];
  std::function<bool(NetId)> value = [&](NetId net) -> bool {
    if (memo[net] >= 0) return memo[net] != 0;
    if (n.net(net).kind == NetKind::constant) return n.net(net).constant_value;
    const auto& g = n.gate(n.driver(net));
    bool r = false;
    const bool a = value(g.inputs[0]);
    switch (g.type) {
    case GateType::NOT: r = !a; break;
    case GateType::BUF: r = a; break;
    case GateType::AND: r = a && value(g.inputs[1]); break;
    case GateType::NAND: r = !(a && value(g.inputs[1])); break;
    case GateType::OR: r = a || value(g.inputs[1]); break;
    case GateType::NOR: r = !(a || value(g.inputs[1])); break;
    case GateType::XOR: r = a != value(g.inputs[1]); break;
    case GateType::XNOR: r = a == value(g.inputs[1]); break;
    case GateType::MUX2: r = a ? value(g.inputs[2]) : value(g.inputs[1]); break;
    }
    memo[net] = r;
    return r;
  };
  BitVector out;
  for (NetId po : n.primary_outputs()) out.push_back(value(po));
  return out;
}

} // namespace

TEST(Bench, ParsesC17)
{
  const auto n = parse_bench(c17);
  EXPECT_EQ(n.primary_inputs().size(), 5U);
  EXPECT_EQ(n.primary_outputs().size(), 2U);
  EXPECT_EQ(n.num_gates(), 6U);
  EXPECT_TRUE(n.is_acyclic());
  EXPECT_FALSE(n.cyclic_allowed());
  // 22 = NAND(NAND(1,3), NAND(2, NAND(3,6))), 23 = NAND(NAND(2, NAND(3,6)), NAND(NAND(3,6), 7))
  EXPECT_EQ(simulate(n, {1, 0, 1, 0, 0}), (BitVector{1, 0}));
  EXPECT_EQ(simulate(n, {0, 0, 0, 0, 0}), (BitVector{0, 0}));
}

TEST(Bench, MultiInputGatesBecomeChains)
{
  const auto n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = NAND(a, b, c, d)\n");
  EXPECT_EQ(n.num_gates(), 3U);
  for (const auto& g : n.gates()) EXPECT_EQ(g.inputs.size(), 2U);
  for (int v = 0; v < 16; ++v) {
    const BitVector pi{(v & 1) != 0, (v & 2) != 0, (v & 4) != 0, (v & 8) != 0};
    EXPECT_EQ(simulate(n, pi)[0], v != 15);
  }
}

TEST(Bench, KeyInputsByName)
{
  const auto n = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)\n");
  EXPECT_EQ(n.primary_inputs().size(), 1U);
  EXPECT_EQ(n.key_inputs().size(), 1U);
  EXPECT_EQ(simulate(n, {1}, {1})[0], false);
}

TEST(Bench, ErrorsNameTheLine)
{
  auto code_and_line = [](const char* text) {
    try {
      (void)parse_bench(text);
    } catch (const ParseError& e) {
      return std::pair{e.code(), e.line()};
    }
    return std::pair{ErrorCode::io, std::size_t{0}};
  };
  EXPECT_EQ(code_and_line("INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n"), std::pair(ErrorCode::unknown_gate, std::size_t{3}));
  EXPECT_EQ(code_and_line("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUF(a)\n"),
            std::pair(ErrorCode::duplicate_driver, std::size_t{4}));
  EXPECT_EQ(code_and_line("INPUT(a)\nOUTPUT(y)\ny = AND(a, b)\n"), std::pair(ErrorCode::undeclared_net, std::size_t{3}));
  EXPECT_EQ(code_and_line("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NOT(a, b)\n"),
            std::pair(ErrorCode::arity_mismatch, std::size_t{4}));
}

TEST(Bench, RoundTripPreservesFunction)
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto n = gen::small_circuit(seed);
    const auto text = write_bench(n);
    const auto back = parse_bench(text);
    EXPECT_EQ(write_bench(back), text);
    EXPECT_TRUE(equivalence_exhaustive(n, back).equal);
  }
}

TEST(Bench, CyclicNetlistIsFlagged)
{
  const auto n = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\nx = MUX(keyinput0, a, y)\ny = NOT(x)\n");
  EXPECT_FALSE(n.is_acyclic());
  EXPECT_TRUE(n.cyclic_allowed());
  EXPECT_EQ(simulate(n, {1}, {0})[0], false);
  try {
    (void)simulate(n, {1}, {1});
    FAIL() << "expected CycleUnderKey";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cycle_under_key);
  }
}

TEST(Simulate, MatchesRecursiveEvaluator)
{
  std::mt19937_64 rng(7);
  for (int i = 0; i < 120; ++i) {
    const auto n = gen::small_circuit(100 + static_cast<std::uint64_t>(i), 5 + i % 6, 1 + i % 4, 10 + i % 50);
    const auto pi = gen::random_bits(rng, n.primary_inputs().size());
    EXPECT_EQ(simulate(n, pi), eval_recursive(n, pi, {})) << "case " << i;
  }
}

TEST(Simulate, KeyedDesignsMatchRecursiveEvaluator)
{
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LockConfig cfg;
    cfg.size = 4;
    cfg.seed = seed;
    const auto d = lock(gen::small_circuit(seed, 8, 4, 40), cfg);
    for (int t = 0; t < 10; ++t) {
      const auto pi = gen::random_bits(rng, d.netlist.primary_inputs().size());
      const auto key = gen::random_bits(rng, d.netlist.key_inputs().size());
      EXPECT_EQ(simulate(d.netlist, pi, key), eval_recursive(d.netlist, pi, key));
    }
  }
}

TEST(Equivalence, FindsCounterexample)
{
  const auto a = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n");
  const auto b = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = OR(a, b)\n");
  const auto r = equivalence_exhaustive(a, b);
  ASSERT_FALSE(r.equal);
  EXPECT_NE(simulate(a, r.counterexample), simulate(b, r.counterexample));
  EXPECT_TRUE(equivalence_exhaustive(a, a).equal);
}

TEST(Equivalence, DeMorganIsEqual)
{
  const auto a = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n");
  const auto b = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nna = NOT(a)\nnb = NOT(b)\ny = OR(na, nb)\n");
  EXPECT_TRUE(equivalence_exhaustive(a, b).equal);
  EXPECT_TRUE(equivalence_random(a, b, {}, {}, 256, 1).equal);
}

TEST(Netlist, RejectsSecondDriver)
{
  Netlist n;
  const auto a = n.add_input("a");
  const auto y = n.add_internal("y");
  n.add_gate(GateType::NOT, {a}, y);
  EXPECT_THROW(n.add_gate(GateType::BUF, {a}, y), Error);
  EXPECT_THROW(n.add_gate(GateType::AND, {a}, n.add_internal("z")), Error);
}

TEST(Netlist, RandomCircuitsAreValidDags)
{
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto n = gen::small_circuit(seed, 8, 4, 60);
    EXPECT_NO_THROW(n.validate());
    EXPECT_TRUE(n.is_acyclic());
    EXPECT_EQ(n.primary_outputs().size(), 4U);
  }
}
