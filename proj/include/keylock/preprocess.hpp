#pragma once

// One-layer linear encoding of routing keyRB outputs and bounded variable addition.

#include "cnf.hpp"
#include "error.hpp"
#include "lock.hpp"
#include "tseitin.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace keylock {

// ---------------------------------------------------------------------------------
// Bounded variable addition

struct MatchingPair {
  std::vector<Literal> set_l;
  /// Clause remainders: each element with one literal of set_l added is in the formula.
  std::vector<Clause> set_c;
};

/// Clauses saved by replacing the |L|·|C| matched clauses with |L| + |C| new ones.
inline long reduction_gain(std::size_t l, std::size_t c)
{
  return static_cast<long>(l * c) - static_cast<long>(l) - static_cast<long>(c);
}
inline long reduction_gain(const MatchingPair& p) { return reduction_gain(p.set_l.size(), p.set_c.size()); }

struct BvaRecord {
  int var = 0;
  MatchingPair pair;
  /// |L| + |C| − |L|·|C|; negative means fewer clauses.
  long clause_delta = 0;
};

struct BvaResult {
  Cnf cnf;
  std::vector<BvaRecord> records;
  std::size_t duplicates_removed = 0;
};

namespace detail {

class Bva {
public:
  Bva(std::vector<Clause> clauses, int num_vars) : num_vars_(num_vars)
  {
    std::set<Clause> seen;
    for (auto& c : clauses) {
      std::sort(c.begin(), c.end());
      if (!seen.insert(c).second) {
        ++duplicates_;
        continue;
      }
      add(std::move(c));
    }
  }

  std::vector<BvaRecord> run(int& next_var)
  {
    std::vector<BvaRecord> records;
    for (int v = 1; v <= num_vars_; ++v) {
      touch(v);
      touch(-v);
    }
    while (!queue_.empty()) {
      const auto top = *queue_.begin();
      queue_.erase(queue_.begin());
      const Literal l = std::get<3>(top);
      queued_[idx(l)] = -1;
      if (-std::get<0>(top) != count(l)) {
        touch(l);
        continue;
      }
      if (count(l) < 2) continue;
      auto rec = try_literal(l, next_var);
      if (rec) records.push_back(std::move(*rec));
    }
    return records;
  }

  [[nodiscard]] std::vector<Clause> clauses() const
  {
    std::vector<Clause> out;
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
      if (alive_[i]) out.push_back(clauses_[i]);
    }
    return out;
  }

  [[nodiscard]] std::size_t duplicates() const { return duplicates_; }

private:
  static std::size_t idx(Literal l) { return 2 * static_cast<std::size_t>(std::abs(l)) + (l < 0 ? 1 : 0); }

  void grow(int var)
  {
    const auto need = 2 * static_cast<std::size_t>(var) + 2;
    if (occurs_.size() < need) {
      occurs_.resize(need);
      counts_.resize(need, 0);
      queued_.resize(need, -1);
    }
    num_vars_ = std::max(num_vars_, var);
  }

  [[nodiscard]] int count(Literal l) const { return idx(l) < counts_.size() ? counts_[idx(l)] : 0; }

  void touch(Literal l)
  {
    grow(std::abs(l));
    if (queued_[idx(l)] >= 0) return;
    queued_[idx(l)] = count(l);
    queue_.insert({-count(l), std::abs(l), l < 0 ? 1 : 0, l});
  }

  std::size_t add(Clause c)
  {
    const auto id = clauses_.size();
    for (Literal l : c) {
      grow(std::abs(l));
      occurs_[idx(l)].push_back(id);
      ++counts_[idx(l)];
    }
    clauses_.push_back(std::move(c));
    alive_.push_back(1);
    return id;
  }

  void remove(std::size_t id)
  {
    alive_[id] = 0;
    for (Literal l : clauses_[id]) --counts_[idx(l)];
  }

  /// Live clause ids containing l (compacts the occurrence list).
  const std::vector<std::size_t>& occ(Literal l)
  {
    auto& list = occurs_[idx(l)];
    std::erase_if(list, [&](std::size_t id) { return !alive_[id]; });
    return list;
  }

  /// If d equals (c \ {l}) ∪ {l'} for a single l' ∉ c, returns l'.
  static std::optional<Literal> differs_by(const Clause& c, Literal l, const Clause& d)
  {
    if (c.size() != d.size()) return std::nullopt;
    std::optional<Literal> extra;
    std::size_t i = 0, j = 0;
    bool dropped = false;
    while (i < c.size() || j < d.size()) {
      if (i < c.size() && j < d.size() && c[i] == d[j]) {
        ++i;
        ++j;
      } else if (j == d.size() || (i < c.size() && c[i] < d[j])) {
        if (c[i] != l || dropped) return std::nullopt;
        dropped = true;
        ++i;
      } else {
        if (extra) return std::nullopt;
        extra = d[j++];
      }
    }
    if (!dropped || !extra || *extra == -l) return std::nullopt;
    return extra;
  }

  static Clause without(const Clause& c, Literal l)
  {
    Clause r;
    for (Literal x : c) {
      if (x != l) r.push_back(x);
    }
    return r;
  }

  std::optional<BvaRecord> try_literal(Literal l, int& next_var)
  {
    std::vector<Literal> lits{l};
    std::vector<std::size_t> cls = occ(l);
    // partner[k][i]: clause id matching cls[i] with lits[k] (index 0 is cls itself).
    std::vector<std::map<std::size_t, std::size_t>> partner(1);
    for (std::size_t id : cls) partner[0][id] = id;
    for (;;) {
      std::map<Literal, std::map<std::size_t, std::size_t>> found;
      for (std::size_t cid : cls) {
        const auto& c = clauses_[cid];
        Literal lmin = 0;
        for (Literal x : c) {
          if (x != l && (lmin == 0 || count(x) < count(lmin))) lmin = x;
        }
        if (lmin == 0) continue;
        for (std::size_t did : occ(lmin)) {
          if (did == cid) continue;
          const auto extra = differs_by(c, l, clauses_[did]);
          if (!extra || std::find(lits.begin(), lits.end(), *extra) != lits.end()) continue;
          found[*extra].emplace(cid, did);
        }
      }
      Literal best = 0;
      std::size_t best_n = 0;
      for (const auto& [lit, m] : found) {
        const auto better = [&]() {
          if (m.size() != best_n) return m.size() > best_n;
          if (std::abs(lit) != std::abs(best)) return std::abs(lit) < std::abs(best);
          return lit > best;
        };
        if (best == 0 || better()) {
          best = lit;
          best_n = m.size();
        }
      }
      if (best == 0 || reduction_gain(lits.size() + 1, best_n) <= reduction_gain(lits.size(), cls.size())) break;
      const auto& chosen = found[best];
      std::vector<std::size_t> kept;
      for (std::size_t cid : cls) {
        if (chosen.contains(cid)) kept.push_back(cid);
      }
      cls = std::move(kept);
      for (auto& p : partner) std::erase_if(p, [&](const auto& kv) { return !chosen.contains(kv.first); });
      partner.push_back(chosen);
      lits.push_back(best);
    }
    if (lits.size() < 2 || reduction_gain(lits.size(), cls.size()) <= 0) return std::nullopt;

    const int x = ++next_var;
    grow(x);
    BvaRecord rec;
    rec.var = x;
    rec.pair.set_l = lits;
    for (std::size_t cid : cls) rec.pair.set_c.push_back(without(clauses_[cid], l));
    rec.clause_delta = -reduction_gain(lits.size(), cls.size());
    std::set<Literal> changed;
    for (const auto& p : partner) {
      for (const auto& [cid, did] : p) {
        for (Literal y : clauses_[did]) changed.insert(y);
        remove(did);
      }
    }
    for (Literal li : lits) {
      Clause c{li, x};
      std::sort(c.begin(), c.end());
      add(std::move(c));
    }
    for (const auto& rest : rec.pair.set_c) {
      Clause c = rest;
      c.push_back(-x);
      std::sort(c.begin(), c.end());
      add(std::move(c));
    }
    touch(l);
    touch(x);
    touch(-x);
    for (Literal y : changed) touch(y);
    return rec;
  }

  int num_vars_ = 0;
  std::vector<Clause> clauses_;
  std::vector<char> alive_;
  std::vector<std::vector<std::size_t>> occurs_;
  std::vector<int> counts_;
  std::vector<int> queued_;
  /// (−count, var, negative?, literal): most frequent first, then lowest variable,
  /// positive before negative.
  std::set<std::tuple<int, int, int, Literal>> queue_;
  std::size_t duplicates_ = 0;
};

} // namespace detail

/// Greedy SimpleBVA to fixpoint over the whole formula, or over one named clause group
/// when `scope` is non-empty (other clauses are left untouched). Duplicate clauses in
/// scope are dropped first.
inline BvaResult simple_bva(const Cnf& c, const std::string& scope = {})
{
  BvaResult r;
  r.cnf = c;
  std::size_t group_index = c.groups().size();
  std::vector<Clause> in;
  if (scope.empty()) {
    in = c.clauses();
  } else {
    for (std::size_t i = 0; i < c.groups().size(); ++i) {
      if (c.groups()[i].name == scope) group_index = i;
    }
    if (group_index == c.groups().size()) throw Error(ErrorCode::io, "no clause group named '" + scope + "'");
    in = c.extract(c.groups()[group_index]).clauses();
  }
  detail::Bva bva(std::move(in), c.num_vars());
  int next_var = c.num_vars();
  r.records = bva.run(next_var);
  r.duplicates_removed = bva.duplicates();
  r.cnf.ensure_vars(next_var);
  auto out = bva.clauses();
  if (scope.empty()) {
    Cnf fresh(next_var);
    for (auto& cl : out) fresh.add_clause(std::move(cl));
    r.cnf = std::move(fresh);
  } else {
    r.cnf.replace_group(group_index, out);
  }
  return r;
}

/// Resolves away `var`. In bounded mode the resolvent count may not exceed the number
/// of removed clauses (BoundViolated otherwise); unbounded mode always eliminates.
inline Cnf bve(const Cnf& c, int var, bool bounded = true)
{
  std::vector<Clause> pos, neg, rest;
  for (const auto& cl : c.clauses()) {
    if (std::find(cl.begin(), cl.end(), var) != cl.end()) {
      pos.push_back(cl);
    } else if (std::find(cl.begin(), cl.end(), -var) != cl.end()) {
      neg.push_back(cl);
    } else {
      rest.push_back(cl);
    }
  }
  if (pos.empty() && neg.empty()) return c;
  std::vector<Clause> resolvents;
  for (const auto& p : pos) {
    for (const auto& q : neg) {
      Clause r;
      bool taut = false;
      for (Literal l : p) {
        if (l != var) r.push_back(l);
      }
      for (Literal l : q) {
        if (l == -var) continue;
        if (std::find(r.begin(), r.end(), -l) != r.end()) taut = true;
        if (std::find(r.begin(), r.end(), l) == r.end()) r.push_back(l);
      }
      if (!taut) resolvents.push_back(std::move(r));
    }
  }
  if (bounded && resolvents.size() > pos.size() + neg.size()) {
    throw Error(ErrorCode::bound_violated, std::to_string(resolvents.size()) + " resolvents exceed " +
                                               std::to_string(pos.size() + neg.size()) + " clauses on variable " +
                                               std::to_string(var));
  }
  Cnf out(c.num_vars());
  for (auto& cl : rest) out.add_clause(std::move(cl));
  for (auto& cl : resolvents) out.add_clause(std::move(cl));
  return out;
}

// ---------------------------------------------------------------------------------
// One-layer linear encoding

/// One keyRB output as an exactly-one choice over candidate sources.
struct AtMostOneGroup {
  NetId output = no_net;
  int output_var = 0;
  std::vector<int> selectors;
  /// Candidate literal per selector (input variable, possibly negated).
  std::vector<Literal> sources;
  std::vector<Selection> choices;
  std::string group;
};

struct OneLayerEncoding {
  std::vector<AtMostOneGroup> outputs;
  /// Clause group names holding the per-input injectivity constraints.
  std::vector<std::string> injectivity_groups;
  std::vector<int> selector_vars;
};

struct EncodeOptions {
  /// Each input selected by at most one output. Defaults on for permutation networks.
  std::optional<bool> injectivity;
};

/// Appends the one-layer encoding of keyRB `rb_index` to `cnf`, using `map` for the
/// block's input/output nets. Group "rb<r>.o<k>" holds output k's selection clauses,
/// one at-least-one clause and pairwise at-most-one clauses; "rb<r>.inj<i>" holds the
/// injectivity constraints of input i.
inline OneLayerEncoding one_layer_linear_encode(const LockedDesign& d, std::size_t rb_index, Cnf& cnf,
                                                EncodingMap& map, const EncodeOptions& opt = {})
{
  const auto& rb = d.keyrbs.at(rb_index);
  if (rb.topology == Topology::interlock) {
    throw Error(ErrorCode::twisted_logic, "InterLock outputs mix logic into routing");
  }
  if (rb.topology == Topology::logarithmic && rb.with_inverters && !rb.inverters_detached) {
    throw Error(ErrorCode::twisted_logic, "Full-Lock inverters must be detached first");
  }
  const bool negations = rb.topology == Topology::logarithmic && rb.with_inverters;
  const bool inject = opt.injectivity.value_or(rb.topology == Topology::logarithmic);
  const std::string base = rb.placement.group;
  auto var = [&](NetId net) {
    if (!map.mapped(net)) map.bind(net, cnf.new_var());
    return map.var(net);
  };
  OneLayerEncoding enc;
  std::vector<std::vector<int>> by_input(rb.num_inputs);
  for (std::size_t o = 0; o < rb.size; ++o) {
    AtMostOneGroup g;
    g.output = rb.placement.outputs[o];
    g.output_var = var(g.output);
    g.group = base + ".o" + std::to_string(o);
    for (std::size_t i = 0; i < rb.num_inputs; ++i) {
      const int x = var(rb.placement.inputs[i]);
      for (int inv = 0; inv < (negations ? 2 : 1); ++inv) {
        const int s = cnf.new_var();
        g.selectors.push_back(s);
        g.sources.push_back(inv ? -x : x);
        g.choices.push_back(Selection{static_cast<int>(i), inv == 1});
        by_input[i].push_back(s);
        enc.selector_vars.push_back(s);
      }
    }
    cnf.begin_group(g.group);
    for (std::size_t k = 0; k < g.selectors.size(); ++k) {
      cnf.add_clause({-g.selectors[k], -g.sources[k], g.output_var});
      cnf.add_clause({-g.selectors[k], g.sources[k], -g.output_var});
    }
    cnf.add_clause(Clause(g.selectors.begin(), g.selectors.end()));
    for (std::size_t a = 0; a < g.selectors.size(); ++a) {
      for (std::size_t b = a + 1; b < g.selectors.size(); ++b) cnf.add_clause({-g.selectors[a], -g.selectors[b]});
    }
    cnf.end_group();
    enc.outputs.push_back(std::move(g));
  }
  if (inject) {
    for (std::size_t i = 0; i < rb.num_inputs; ++i) {
      const std::string name = base + ".inj" + std::to_string(i);
      cnf.begin_group(name);
      const auto& s = by_input[i];
      for (std::size_t a = 0; a < s.size(); ++a) {
        for (std::size_t b = a + 1; b < s.size(); ++b) cnf.add_clause({-s[a], -s[b]});
      }
      cnf.end_group();
      enc.injectivity_groups.push_back(name);
    }
  }
  return enc;
}

/// The selection chosen in a model, per output (first true selector).
inline std::vector<Selection> decode_selection(const OneLayerEncoding& enc, const std::vector<bool>& model)
{
  std::vector<Selection> out;
  for (const auto& g : enc.outputs) {
    Selection sel;
    for (std::size_t k = 0; k < g.selectors.size(); ++k) {
      if (model.at(static_cast<std::size_t>(g.selectors[k]))) {
        sel = g.choices[k];
        break;
      }
    }
    out.push_back(sel);
  }
  return out;
}

} // namespace keylock
