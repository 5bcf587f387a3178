#pragma once

// JSON key manifests, attack reports and DIP traces.

#include "attack.hpp"
#include "bench.hpp"
#include "error.hpp"
#include "lock.hpp"

#include <json.hpp>

#include <sstream>
#include <string>

namespace keylock {

using Json = nlohmann::json;

inline constexpr int manifest_schema = 1;

inline std::string key_string(const BitVector& key)
{
  std::string s;
  for (bool b : key) s.push_back(b ? '1' : '0');
  return s;
}

inline BitVector parse_key_string(std::string_view s)
{
  BitVector key;
  for (char c : s) {
    if (c == '0' || c == '1') key.push_back(c == '1');
    else if (c != '_' && c != ' ') throw Error(ErrorCode::io, std::string("bad key character '") + c + "'");
  }
  return key;
}

inline Topology parse_topology(std::string_view s)
{
  if (const auto t = topology_from_string(s)) return *t;
  throw Error(ErrorCode::io, "unknown topology '" + std::string(s) + "'");
}

inline std::string_view to_string(NetSelection s) { return s == NetSelection::random ? "random" : "correlated"; }

inline NetSelection selection_from_string(std::string_view s)
{
  if (s == "random") return NetSelection::random;
  if (s == "correlated") return NetSelection::correlated;
  throw Error(ErrorCode::io, "unknown net selection '" + std::string(s) + "'");
}

inline Json lock_config_json(const LockConfig& cfg)
{
  return Json{{"topology", std::string(to_string(cfg.topology))},
              {"with_inverters", cfg.with_inverters},
              {"size", cfg.size},
              {"count", cfg.count},
              {"seed", cfg.seed},
              {"selection", std::string(to_string(cfg.selection))}};
}

inline LockConfig lock_config_from_json(const Json& j)
{
  LockConfig cfg;
  cfg.topology = parse_topology(j.at("topology").get<std::string>());
  cfg.with_inverters = j.at("with_inverters").get<bool>();
  cfg.size = j.at("size").get<std::size_t>();
  cfg.count = j.at("count").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.selection = selection_from_string(j.at("selection").get<std::string>());
  return cfg;
}

namespace detail {

inline Json net_names(const Netlist& n, const std::vector<NetId>& ids)
{
  Json a = Json::array();
  for (NetId id : ids) a.push_back(n.net(id).name);
  return a;
}

} // namespace detail

/// Everything needed to rebuild the design: the locking configuration, the original
/// netlist, and (for inspection) the inserted structure and the correct key.
inline Json manifest_json(const LockedDesign& d, const LockConfig& cfg)
{
  Json rbs = Json::array();
  for (const auto& rb : d.keyrbs) {
    rbs.push_back({{"topology", std::string(to_string(rb.topology))},
                   {"size", rb.size},
                   {"inputs", detail::net_names(d.netlist, rb.placement.inputs)},
                   {"ex_inputs", detail::net_names(d.netlist, rb.placement.ex_inputs)},
                   {"outputs", detail::net_names(d.netlist, rb.placement.outputs)},
                   {"keys", detail::net_names(d.netlist, rb.placement.keys)},
                   {"correct_key", key_string(rb.correct_key)}});
  }
  return Json{{"schema", manifest_schema},
              {"config", lock_config_json(cfg)},
              {"original_bench", write_bench(d.original)},
              {"key_inputs", detail::net_names(d.netlist, d.netlist.key_inputs())},
              {"correct_key", key_string(d.correct_key)},
              {"keyrbs", rbs},
              {"origin_map", d.origin_map},
              {"fixed_keys", d.fixed_keys},
              {"warnings", d.warnings}};
}

/// Rebuilds a design from its manifest; the locked BENCH, when given, must match the
/// regenerated netlist.
inline LockedDesign load_design(const Json& manifest, std::optional<std::string_view> locked_bench = std::nullopt)
{
  if (manifest.value("schema", 0) != manifest_schema) throw Error(ErrorCode::io, "unsupported manifest schema");
  const auto cfg = lock_config_from_json(manifest.at("config"));
  auto d = lock(parse_bench(manifest.at("original_bench").get<std::string>()), cfg);
  if (locked_bench && write_bench(parse_bench(*locked_bench)) != write_bench(d.netlist)) {
    throw Error(ErrorCode::interface_mismatch, "locked netlist does not match its manifest");
  }
  return d;
}

inline Json report_json(const AttackReport& r)
{
  Json iters = Json::array();
  for (const auto& it : r.per_iteration) {
    iters.push_back({{"decisions", it.decisions},
                     {"conflicts", it.conflicts},
                     {"propagations", it.propagations},
                     {"seconds", it.seconds}});
  }
  Json rbs = Json::array();
  for (const auto& s : r.keyrb_stats) {
    rbs.push_back({{"keyrb", s.keyrb},
                   {"topology", s.topology},
                   {"encoded", s.encoded},
                   {"vars_before", s.vars_before},
                   {"clauses_before", s.clauses_before},
                   {"vars_encoded", s.vars_encoded},
                   {"clauses_encoded", s.clauses_encoded},
                   {"vars_after", s.vars_after},
                   {"clauses_after", s.clauses_after},
                   {"reduction", s.reduction()},
                   {"bva_reduction", s.bva_reduction()}});
  }
  Json dips = Json::array();
  for (const auto& d : r.dips) dips.push_back(key_string(d));
  auto cnf = [](const CnfStats& s) { return Json{{"vars", s.vars}, {"clauses", s.clauses}, {"ratio", s.ratio}}; };
  return Json{{"schema", manifest_schema},
              {"method", std::string(to_string(r.method))},
              {"status", std::string(to_string(r.status))},
              {"iterations", r.iterations},
              {"dips", dips},
              {"key", key_string(r.key)},
              {"wall_seconds", r.wall_seconds},
              {"per_iteration", iters},
              {"cnf_before", cnf(r.cnf_before)},
              {"cnf_after", cnf(r.cnf_after)},
              {"keyrbs", rbs},
              {"cycle_clauses", r.cycle_clauses},
              {"match_retries", r.match_retries},
              {"notes", r.notes}};
}

/// One row per DIP: iteration, input bits, oracle response bits, solver effort.
inline std::string dip_csv(const AttackReport& r)
{
  std::ostringstream out;
  out << "iteration,dip,response,decisions,conflicts,seconds\n";
  for (std::size_t i = 0; i < r.dips.size(); ++i) {
    const auto& it = r.per_iteration.at(i);
    out << i + 1 << ',' << key_string(r.dips[i]) << ',' << key_string(r.responses[i]) << ',' << it.decisions << ','
        << it.conflicts << ',' << it.seconds << '\n';
  }
  return out.str();
}

} // namespace keylock
