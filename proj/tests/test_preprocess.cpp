#include "generators.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace keylock;

namespace {

std::multiset<Clause> normalized(const Cnf& c)
{
  std::multiset<Clause> s;
  for (auto cl : c.clauses()) {
    std::sort(cl.begin(), cl.end());
    s.insert(cl);
  }
  return s;
}

Cnf six_clauses()
{
  Cnf f(5);
  for (int x : {1, 2})
    for (int y : {3, 4, 5}) f.add_clause({x, y});
  return f;
}

Cnf exactly_one(int n)
{
  Cnf g(n);
  Clause alo;
  for (int i = 1; i <= n; ++i) alo.push_back(i);
  g.add_clause(alo);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) g.add_clause({-i, -j});
  return g;
}

// Assignments over the first `vars` variables that extend to a model of `c`.
std::set<std::uint64_t> projected_models(const Cnf& c, int vars)
{
  std::set<std::uint64_t> out;
  const int extra = c.num_vars() - vars;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << vars); ++a) {
    for (std::uint64_t e = 0; e < (std::uint64_t{1} << extra); ++e) {
      if (gen::satisfies(c, a | (e << vars))) {
        out.insert(a);
        break;
      }
    }
  }
  return out;
}

LockedDesign locked(Topology t, std::size_t m, std::uint64_t seed)
{
  LockConfig cfg;
  cfg.topology = t;
  cfg.with_inverters = t == Topology::logarithmic;
  cfg.size = m;
  cfg.seed = seed;
  return lock(gen::small_circuit(seed, 10, 5, 100), cfg);
}

// Distinct selector patterns admitted by the encoding, by blocking-clause enumeration.
std::vector<std::vector<Selection>> enumerate_selections(const LockedDesign& d, const EncodeOptions& opt)
{
  Cnf cnf;
  EncodingMap map;
  const auto enc = one_layer_linear_encode(d, 0, cnf, map, opt);
  sat::CdclSolver s(cnf);
  std::vector<std::vector<Selection>> out;
  for (;;) {
    const auto r = s.solve();
    if (r.status != sat::Status::sat) break;
    out.push_back(decode_selection(enc, r.model));
    std::vector<Literal> block;
    for (int v : enc.selector_vars) block.push_back(r.value(v) ? -v : v);
    s.add_clause(std::span<const Literal>(block));
  }
  return out;
}

} // namespace

TEST(Bva, GainFormula)
{
  EXPECT_EQ(reduction_gain(2, 3), 1);
  EXPECT_EQ(reduction_gain(2, 2), 0);
  EXPECT_EQ(reduction_gain(1, 5), -1);
  EXPECT_EQ(reduction_gain(MatchingPair{{1, 2, 3}, {{4}, {5}, {6}}}), 3);
}

TEST(Bva, SixClausesBecomeFive)
{
  const auto r = simple_bva(six_clauses());
  EXPECT_EQ(r.cnf.num_clauses(), 5U);
  EXPECT_EQ(r.cnf.num_vars(), 6);
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.records[0].var, 6);
  EXPECT_EQ(r.records[0].clause_delta, -1);
  EXPECT_EQ(normalized(bve(r.cnf, 6, false)), normalized(six_clauses()));
}

TEST(Bva, SingleClauseUnchanged)
{
  Cnf c(3);
  c.add_clause({1, -2, 3});
  const auto r = simple_bva(c);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(normalized(r.cnf), normalized(c));
}

TEST(Bva, DuplicatesRemovedFirst)
{
  Cnf c(3);
  c.add_clause({1, 2});
  c.add_clause({2, 1});
  c.add_clause({3});
  const auto r = simple_bva(c);
  EXPECT_EQ(r.duplicates_removed, 1U);
  EXPECT_EQ(r.cnf.num_clauses(), 2U);
}

TEST(Bva, ExactlyOneShrinksToLinear)
{
  for (int n : {8, 16, 32, 64}) {
    const auto r = simple_bva(exactly_one(n));
    EXPECT_LE(r.cnf.num_clauses(), static_cast<std::size_t>(3 * n + 4)) << n;
    EXPECT_LT(r.cnf.num_clauses(), static_cast<std::size_t>(n * (n - 1) / 2)) << n;
  }
}

TEST(Bva, ExactlyOneModelsPreserved)
{
  for (int n : {5, 8}) {
    const auto before = exactly_one(n);
    const auto after = simple_bva(before).cnf;
    ASSERT_LE(after.num_vars(), 20);
    EXPECT_EQ(projected_models(after, n), projected_models(before, n));
  }
}

TEST(Bva, RandomFormulasProjectionEquivalent)
{
  std::mt19937_64 rng(17);
  int changed = 0;
  for (int t = 0; t < 200; ++t) {
    const int vars = 4 + t % 9;
    const auto c = t % 4 ? gen::random_product_cnf(rng, vars, t % 12) : gen::random_mixed_cnf(rng, vars, 6 + t % 30, 3);
    const auto r = simple_bva(c);
    ASSERT_LE(r.cnf.num_vars(), 22);
    changed += !r.records.empty();
    EXPECT_EQ(projected_models(r.cnf, vars), projected_models(c, vars)) << "case " << t;
  }
  EXPECT_GT(changed, 0);
}

TEST(Bva, ScopedToGroup)
{
  Cnf c(8);
  c.add_clause({7, 8});
  c.begin_group("g");
  for (int x : {1, 2})
    for (int y : {3, 4, 5}) c.add_clause({x, y});
  c.end_group();
  c.add_clause({-7});
  const auto r = simple_bva(c, "g");
  EXPECT_EQ(r.cnf.num_clauses(), 7U);
  EXPECT_EQ(r.cnf.clauses().front(), (Clause{7, 8}));
  EXPECT_EQ(r.cnf.clauses().back(), (Clause{-7}));
  EXPECT_EQ(r.cnf.find_group("g")->size(), 5U);
  EXPECT_THROW(simple_bva(c, "missing"), Error);
}

TEST(Bve, BoundedRefusesGrowth)
{
  const auto r = simple_bva(six_clauses());
  try {
    (void)bve(r.cnf, 6, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::bound_violated);
  }
  Cnf c(3);
  c.add_clause({1, 2});
  c.add_clause({-1, 3});
  EXPECT_EQ(normalized(bve(c, 1)), normalized([] {
              Cnf w(3);
              w.add_clause({2, 3});
              return w;
            }()));
}

TEST(Encode, CrossbarSelectionsAreRealizable)
{
  const auto d = locked(Topology::crossbar, 4, 1);
  const auto& rb = d.keyrbs[0];
  std::set<std::vector<int>> realizable;
  for (unsigned k = 0; k < (1U << rb.num_keys()); ++k) {
    BitVector key(rb.num_keys());
    for (std::size_t b = 0; b < key.size(); ++b) key[b] = ((k >> b) & 1U) != 0;
    std::vector<int> v;
    for (const auto& s : keyrb_selections(rb, key)) v.push_back(s->input);
    realizable.insert(v);
  }
  const auto models = enumerate_selections(d, {});
  EXPECT_EQ(models.size(), 256U);
  for (const auto& m : models) {
    std::vector<int> v;
    for (const auto& s : m) v.push_back(s.input);
    EXPECT_TRUE(realizable.contains(v));
  }
}

TEST(Encode, InjectivityGivesPermutations)
{
  const auto d = detach_inverters(locked(Topology::logarithmic, 4, 2));
  const auto models = enumerate_selections(d, {});
  // 4! routings × 2^4 inversions.
  EXPECT_EQ(models.size(), 24U * 16U);
  for (const auto& m : models) {
    std::set<int> inputs;
    for (const auto& s : m) inputs.insert(s.input);
    EXPECT_EQ(inputs.size(), 4U);
  }
  EncodeOptions loose;
  loose.injectivity = false;
  // Each output alone: 4 sources × 2 polarities.
  EXPECT_EQ(enumerate_selections(d, loose).size(), 4096U);
}

TEST(Encode, ClauseShape)
{
  const auto d = locked(Topology::crossbar, 4, 3);
  Cnf cnf;
  EncodingMap map;
  const auto enc = one_layer_linear_encode(d, 0, cnf, map);
  ASSERT_EQ(enc.outputs.size(), 4U);
  EXPECT_TRUE(enc.injectivity_groups.empty());
  for (const auto& g : enc.outputs) {
    // 2 selection clauses per input, 1 at-least-one, n(n-1)/2 pairwise.
    EXPECT_EQ(cnf.find_group(g.group)->size(), 2U * 4 + 1 + 6);
  }
}

TEST(Encode, TwistedLogic)
{
  for (const auto& d : {locked(Topology::interlock, 4, 1), locked(Topology::logarithmic, 4, 1)}) {
    Cnf cnf;
    EncodingMap map;
    try {
      (void)one_layer_linear_encode(d, 0, cnf, map);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::twisted_logic);
    }
  }
}
