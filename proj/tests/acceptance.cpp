// Acceptance run: one PASS/FAIL line per criterion. Exits 0 when every criterion ran to
// completion (a FAIL verdict is a measured outcome, not a crash).

#include "generators.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>

using namespace keylock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

LockConfig config(Topology t, std::size_t m, std::uint64_t seed, NetSelection sel = NetSelection::random)
{
  LockConfig cfg;
  cfg.topology = t;
  cfg.with_inverters = t == Topology::logarithmic;
  cfg.size = m;
  cfg.seed = seed;
  cfg.selection = sel;
  return cfg;
}

AttackBudget budget(double seconds)
{
  AttackBudget b;
  b.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::duration<double>(seconds));
  return b;
}

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::string fmt(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::multiset<Clause> normalized(const Cnf& c)
{
  std::multiset<Clause> s;
  for (auto cl : c.clauses()) {
    std::sort(cl.begin(), cl.end());
    s.insert(cl);
  }
  return s;
}

std::set<std::uint64_t> projected_models(const Cnf& c, int vars)
{
  std::set<std::uint64_t> out;
  const int extra = c.num_vars() - vars;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << vars); ++a)
    for (std::uint64_t e = 0; e < (std::uint64_t{1} << extra); ++e)
      if (gen::satisfies(c, a | (e << vars))) {
        out.insert(a);
        break;
      }
  return out;
}

Verdict bva_micro()
{
  Cnf f(5);
  for (int x : {1, 2})
    for (int y : {3, 4, 5}) f.add_clause({x, y});
  const auto r = simple_bva(f);
  const bool shape = r.cnf.num_clauses() == 5 && r.cnf.num_vars() == 6 && r.records.size() == 1;
  const bool restored = shape && normalized(bve(r.cnf, r.records[0].var, false)) == normalized(f);
  return {shape && restored, std::to_string(f.num_clauses()) + " -> " + std::to_string(r.cnf.num_clauses()) +
                                 " clauses, +" + std::to_string(r.cnf.num_vars() - f.num_vars()) + " var, bve restores: " +
                                 (restored ? "yes" : "no")};
}

Verdict at_most_one()
{
  bool ok = true;
  std::string detail;
  for (int n : {8, 16, 32}) {
    Cnf g(n);
    Clause alo;
    for (int i = 1; i <= n; ++i) alo.push_back(i);
    g.add_clause(alo);
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) g.add_clause({-i, -j});
    const auto after = simple_bva(g).cnf.num_clauses();
    ok = ok && after <= static_cast<std::size_t>(3 * n + 4);
    detail += "n=" + std::to_string(n) + ": " + std::to_string(1 + n * (n - 1) / 2) + " -> " + std::to_string(after) + "; ";
  }
  return {ok, detail};
}

Verdict bva_equivalence()
{
  std::mt19937_64 rng(2024);
  int agree = 0, changed = 0;
  const int cases = 200;
  for (int t = 0; t < cases; ++t) {
    const int vars = 4 + t % 9;
    const auto c = t % 4 ? gen::random_product_cnf(rng, vars, t % 12) : gen::random_mixed_cnf(rng, vars, 8 + t % 40, 3);
    const auto r = simple_bva(c);
    changed += !r.records.empty();
    agree += r.cnf.num_vars() <= 24 && projected_models(r.cnf, vars) == projected_models(c, vars);
  }
  return {agree == cases, std::to_string(agree) + "/" + std::to_string(cases) + " equivalent (" + std::to_string(changed) +
                              " rewritten)"};
}

Verdict end_to_end()
{
  const std::vector<std::pair<Topology, std::size_t>> configs{{Topology::crossbar, 4},     {Topology::logarithmic, 4},
                                                              {Topology::logarithmic, 8}, {Topology::interlock, 4},
                                                              {Topology::interlock, 8}};
  std::size_t locks = 0, locks_ok = 0, solved = 0, solved_ok = 0, timeouts = 0;
  for (std::uint64_t c = 1; c <= 5; ++c) {
    const auto circuit = gen::small_circuit(c, 10 + c, 6, 160);
    for (const auto& [t, m] : configs) {
      const auto d = lock(circuit, config(t, m, c));
      ++locks;
      locks_ok += verify_locked(d).equal;
      for (auto method : {AttackMethod::sat, AttackMethod::cpsat}) {
        Oracle o(d.original);
        const auto r = run_attack(method, d, o, budget(60));
        if (r.status != AttackStatus::solved) {
          ++timeouts;
          continue;
        }
        ++solved;
        solved_ok += verify_attack_key(d, r.key, o).equal;
      }
    }
  }
  return {locks_ok == locks && solved_ok == solved,
          "verify_locked " + std::to_string(locks_ok) + "/" + std::to_string(locks) + ", solved keys verified " +
              std::to_string(solved_ok) + "/" + std::to_string(solved) + ", timeouts " + std::to_string(timeouts)};
}

Verdict cnf_reduction()
{
  bool ok = true;
  std::string detail;
  for (std::size_t m : {8U, 16U}) {
    std::size_t before = 0, encoded = 0, after = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto d = lock(gen::small_circuit(seed, 16, 8, 300), config(Topology::logarithmic, m, seed));
      const auto f = cpsat_prepare(d);
      for (const auto& s : f.stats) {
        before += s.clauses_before;
        encoded += s.clauses_encoded;
        after += s.clauses_after;
      }
    }
    const double factor = static_cast<double>(before) / static_cast<double>(after);
    ok = ok && factor >= 1.5;
    detail += "keyRB-" + std::to_string(m) + ": gate-level " + std::to_string(before) + " -> " + std::to_string(after) +
              " (x" + fmt(factor) + "; encoded " + std::to_string(encoded) + " -> " + std::to_string(after) + " by BVA, x" +
              fmt(static_cast<double>(encoded) / static_cast<double>(after)) + "); ";
  }
  return {ok, detail};
}

Verdict attack_speed()
{
  std::vector<double> sat_t, cpsat_t;
  const auto circuit = gen::small_circuit(42, 16, 8, 300);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = lock(circuit, config(Topology::logarithmic, 8, seed));
    for (auto method : {AttackMethod::sat, AttackMethod::cpsat}) {
      Oracle o(d.original);
      const auto r = run_attack(method, d, o, budget(300));
      (method == AttackMethod::sat ? sat_t : cpsat_t).push_back(r.wall_seconds);
    }
  }
  const double s = median(sat_t), c = median(cpsat_t);
  return {c < s, "median SAT " + fmt(s) + " s, CP&SAT " + fmt(c) + " s"};
}

Verdict interlock_defense()
{
  double worst_bva = 0;
  std::size_t il_iters = 0, fl_iters = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto circuit = gen::small_circuit(seed, 14, 7, 200);
    const auto il = lock(circuit, config(Topology::interlock, seed % 2 ? 4 : 8, seed));
    for (const auto& s : cpsat_prepare(il).stats) worst_bva = std::max(worst_bva, s.reduction());
    const auto il4 = lock(circuit, config(Topology::interlock, 4, seed));
    const auto fl4 = lock(circuit, config(Topology::logarithmic, 4, seed));
    Oracle oi(il4.original), of(fl4.original);
    il_iters += sat_attack(il4, oi, budget(300)).iterations;
    fl_iters += sat_attack(fl4, of, budget(300)).iterations;
  }
  const double il_mean = static_cast<double>(il_iters) / 10, fl_mean = static_cast<double>(fl_iters) / 10;
  const bool ok = worst_bva < 1.2 && il_mean >= 2 * fl_mean;
  return {ok, "InterLock BVA factor max x" + fmt(worst_bva) + "; mean N InterLock-4 " + fmt(il_mean) + " vs Full-Lock-4 " +
                  fmt(fl_mean) + " (x" + fmt(fl_mean > 0 ? il_mean / fl_mean : 0) + ")"};
}

Verdict monotone_hardness()
{
  const auto circuit = gen::small_circuit(7, 16, 8, 400);
  std::vector<double> medians;
  std::string detail;
  for (std::size_t m : {4U, 8U, 16U}) {
    std::vector<double> t;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto d = lock(circuit, config(Topology::logarithmic, m, seed));
      Oracle o(d.original);
      t.push_back(sat_attack(d, o, budget(600)).wall_seconds);
    }
    medians.push_back(median(t));
    detail += "m=" + std::to_string(m) + " " + fmt(medians.back()) + " s; ";
  }
  return {medians[0] < medians[1] && medians[1] < medians[2], detail};
}

Verdict cycle_soundness()
{
  std::size_t keys = 0, allowed = 0, acyclic = 0, instances = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto d = lock(gen::small_circuit(seed, 10, 5, 100), config(Topology::crossbar, 4, seed, NetSelection::correlated));
    if (d.netlist.is_acyclic()) continue;
    ++instances;
    const auto clauses = cycle_precondition(d);
    const std::size_t bits = d.correct_key.size();
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << bits); ++k) {
      ++keys;
      BitVector key(bits);
      for (std::size_t i = 0; i < bits; ++i) key[i] = ((k >> i) & 1U) != 0;
      const bool ok = std::all_of(clauses.begin(), clauses.end(), [&](const Clause& c) {
        return std::any_of(c.begin(), c.end(), [&](Literal l) { return key[static_cast<std::size_t>(std::abs(l) - 1)] == (l > 0); });
      });
      if (!ok) continue;
      ++allowed;
      try {
        (void)Simulator(d.netlist, key);
        ++acyclic;
      } catch (const Error&) {
      }
    }
  }
  return {instances > 0 && acyclic == allowed, std::to_string(instances) + " cyclic instances, " + std::to_string(acyclic) + "/" +
                                                   std::to_string(allowed) + " admitted keys acyclic (" + std::to_string(keys) +
                                                   " swept)"};
}

Verdict solver_correctness()
{
  std::mt19937_64 rng(77);
  int agree = 0, sat_count = 0;
  for (int t = 0; t < 500; ++t) {
    const int vars = 3 + t % 18;
    const auto c = gen::random_cnf(rng, vars, static_cast<int>(4.26 * vars), 3);
    const auto r = sat::solve(c);
    const bool expect = gen::brute_force_sat(c);
    bool ok = (r.status == sat::Status::sat) == expect;
    if (ok && expect) {
      ok = std::all_of(c.clauses().begin(), c.clauses().end(),
                       [&](const Clause& cl) { return std::any_of(cl.begin(), cl.end(), [&](Literal l) { return r.value(l); }); });
    }
    agree += ok;
    sat_count += expect;
  }
  return {agree == 500, std::to_string(agree) + "/500 agree (" + std::to_string(sat_count) + " satisfiable)"};
}

} // namespace

int main()
{
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"bva micro-check", bva_micro},           {"at-most-one reduction", at_most_one},
      {"bva equivalence", bva_equivalence},     {"end-to-end correctness", end_to_end},
      {"keyRB clause reduction", cnf_reduction}, {"attack-speed ordering", attack_speed},
      {"interlock defense", interlock_defense}, {"monotone hardness", monotone_hardness},
      {"cycle soundness", cycle_soundness},     {"solver correctness", solver_correctness}};
  int passed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto t0 = sat::Clock::now();
    const auto v = fn();
    passed += v.pass;
    std::cout << "criterion " << index << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ": " << v.detail << " ["
              << fmt(detail::seconds_since(t0)) << " s]" << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
  return 0;
}
