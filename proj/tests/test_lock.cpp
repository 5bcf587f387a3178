#include "generators.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace keylock;

namespace {

LockConfig config(Topology t, std::size_t m, std::uint64_t seed, NetSelection sel = NetSelection::random,
                  std::size_t count = 1)
{
  LockConfig cfg;
  cfg.topology = t;
  cfg.with_inverters = t == Topology::logarithmic;
  cfg.size = m;
  cfg.seed = seed;
  cfg.selection = sel;
  cfg.count = count;
  return cfg;
}

std::vector<std::optional<Selection>> selections_of(const KeyRB& rb, unsigned code)
{
  BitVector key(rb.num_keys());
  for (std::size_t b = 0; b < key.size(); ++b) key[b] = ((code >> b) & 1U) != 0;
  return keyrb_selections(rb, key);
}

} // namespace

TEST(Lock, ZeroCountLeavesNetlist)
{
  const auto n = gen::small_circuit(1);
  const auto d = lock(n, config(Topology::logarithmic, 4, 1, NetSelection::random, 0));
  EXPECT_TRUE(d.correct_key.empty());
  EXPECT_TRUE(d.keyrbs.empty());
  EXPECT_EQ(write_bench(d.netlist), write_bench(n));
  EXPECT_TRUE(verify_locked(d).equal);
}

TEST(Lock, CorrectKeyRestoresFunction)
{
  for (auto t : {Topology::crossbar, Topology::logarithmic, Topology::interlock})
    for (std::size_t m : {4U, 8U})
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto n = gen::small_circuit(seed, 12, 6, 140);
        const auto d = lock(n, config(t, m, seed));
        EXPECT_TRUE(verify_locked(d).equal) << to_string(t) << " m=" << m << " seed=" << seed;
        EXPECT_TRUE(d.netlist.is_acyclic());
      }
}

TEST(Lock, KeyAccounting)
{
  const auto d = lock(gen::small_circuit(2, 20, 10, 500), config(Topology::logarithmic, 4, 2, NetSelection::random, 3));
  ASSERT_EQ(d.keyrbs.size(), 3U);
  std::vector<NetId> concat;
  for (const auto& rb : d.keyrbs) {
    EXPECT_EQ(rb.placement.keys.size(), rb.num_keys());
    concat.insert(concat.end(), rb.placement.keys.begin(), rb.placement.keys.end());
  }
  EXPECT_EQ(concat, d.netlist.key_inputs());
  EXPECT_EQ(d.correct_key.size(), concat.size());
  EXPECT_TRUE(verify_locked(d).equal);
}

TEST(Lock, CorruptedKeyGivesCounterexample)
{
  const auto d = lock(gen::small_circuit(3, 10, 5, 100), config(Topology::interlock, 4, 3));
  std::size_t caught = 0;
  for (std::size_t b = 0; b < d.correct_key.size(); ++b) {
    auto key = d.correct_key;
    key[b] = !key[b];
    const auto r = verify_key(d.netlist, d.original, key);
    if (!r.equal) {
      ++caught;
      EXPECT_NE(simulate(d.netlist, r.counterexample, key), simulate(d.original, r.counterexample));
    }
  }
  EXPECT_GT(caught, 0U);
}

TEST(Lock, SeedDeterminism)
{
  const auto n = gen::small_circuit(4, 10, 5, 100);
  for (auto t : {Topology::crossbar, Topology::logarithmic, Topology::interlock}) {
    const auto a = lock(n, config(t, 4, 7));
    const auto b = lock(n, config(t, 4, 7));
    EXPECT_EQ(write_bench(a.netlist), write_bench(b.netlist));
    EXPECT_EQ(a.correct_key, b.correct_key);
  }
}

TEST(Lock, CorrelatedSelectionAdmitsCycles)
{
  std::mt19937_64 rng(1);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = lock(gen::small_circuit(seed, 10, 5, 100), config(Topology::crossbar, 4, seed, NetSelection::correlated));
    EXPECT_TRUE(verify_locked(d).equal);
    EXPECT_FALSE(d.netlist.is_acyclic());
    EXPECT_TRUE(d.netlist.cyclic_allowed());
    bool cycle = false;
    for (int t = 0; t < 500 && !cycle; ++t) {
      try {
        (void)simulate(d.netlist, BitVector(d.netlist.primary_inputs().size()),
                       gen::random_bits(rng, d.correct_key.size()));
      } catch (const Error& e) {
        cycle = e.code() == ErrorCode::cycle_under_key;
      }
    }
    EXPECT_TRUE(cycle) << "seed " << seed;
  }
}

TEST(Lock, TwoInterLockBlocksOnLargerCircuit)
{
  const auto d = lock(gen::small_circuit(1, 20, 10, 500), config(Topology::interlock, 8, 6, NetSelection::random, 2));
  EXPECT_EQ(d.keyrbs.size(), 2U);
  EXPECT_TRUE(verify_locked(d).equal);
}

TEST(Lock, TooFewNets)
{
  const auto n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n");
  try {
    (void)lock(n, config(Topology::logarithmic, 8, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_nets);
  }
}

TEST(Detach, RemovesAllButLastInverterLayer)
{
  const auto d = lock(gen::small_circuit(2, 12, 6, 150), config(Topology::logarithmic, 8, 2));
  const auto s = detach_inverters(d);
  EXPECT_EQ(d.correct_key.size() - s.correct_key.size(), 24U);
  std::size_t inverters = 0;
  for (const auto& r : s.keyrbs[0].key_roles) inverters += r.role == KeyRole::invert;
  EXPECT_EQ(inverters, 8U);
  EXPECT_EQ(s.fixed_keys.size(), 24U);
  EXPECT_TRUE(verify_locked(s).equal);
  EXPECT_TRUE(verify_key(d.netlist, d.original, expand_key(d, s, s.correct_key)).equal);
  const auto twice = detach_inverters(s);
  EXPECT_EQ(twice.correct_key, s.correct_key);
  EXPECT_EQ(write_bench(twice.netlist), write_bench(s.netlist));
}

TEST(Detach, PreservesFunctionSpaceAtM4)
{
  // Every routing+inversion pattern of the full block is realized by some key of the
  // detached block, and vice versa.
  const auto d = lock(gen::small_circuit(1, 10, 5, 100), config(Topology::logarithmic, 4, 1));
  const auto s = detach_inverters(d);
  const auto& full = d.keyrbs[0];
  const auto& simple = s.keyrbs[0];
  ASSERT_EQ(full.circuit.key_inputs().size(), 16U);
  ASSERT_EQ(simple.circuit.key_inputs().size(), 12U);
  std::set<std::vector<std::pair<int, bool>>> a, b;
  auto flat = [](const std::vector<std::optional<Selection>>& sel) {
    std::vector<std::pair<int, bool>> v;
    for (const auto& x : sel) v.emplace_back(x ? x->input : -1, x && x->inverted);
    return v;
  };
  for (unsigned k = 0; k < (1U << 16); ++k) a.insert(flat(selections_of(full, k)));
  for (unsigned k = 0; k < (1U << 12); ++k) b.insert(flat(selections_of(simple, k)));
  EXPECT_EQ(a, b);
}

TEST(Detach, WrongTopology)
{
  const auto d = lock(gen::small_circuit(1, 10, 5, 100), config(Topology::crossbar, 4, 1));
  try {
    (void)detach_inverters(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::wrong_topology);
  }
}
