#include "keylock/keylock.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

using namespace keylock;

namespace {

constexpr int exit_counterexample = 2;

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
}

bool is_dimacs(const std::string& path)
{
  for (const char* ext : {".cnf", ".dimacs"}) {
    const std::string e(ext);
    if (path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) return true;
  }
  return false;
}

struct Common {
  std::uint64_t seed = 1;
  int timeout_s = 3600;
  std::size_t size = 8;
  std::size_t count = 1;
  std::string topology = "fulllock";
  std::string select = "random";
  bool no_inverters = false;
  std::string solver = "builtin";
  std::string report;
};

LockConfig lock_config(const Common& c)
{
  LockConfig cfg;
  cfg.topology = parse_topology(c.topology);
  cfg.with_inverters = c.topology == "fulllock" && !c.no_inverters;
  cfg.size = c.size;
  cfg.count = c.count;
  cfg.seed = c.seed;
  cfg.selection = selection_from_string(c.select);
  return cfg;
}

AttackBudget attack_budget(const Common& c)
{
  AttackBudget b;
  b.timeout = std::chrono::seconds(c.timeout_s);
  b.solver = c.solver;
  return b;
}

void add_lock_flags(CLI::App* cmd, Common& c)
{
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--keyrb-size", c.size, "keyRB size m")->check(CLI::Range(2, 64));
  cmd->add_option("--count", c.count, "Number of keyRBs");
  cmd->add_option("--topology", c.topology, "Network topology")
      ->check(CLI::IsMember({"crossbar", "fulllock", "logarithmic", "interlock"}));
  cmd->add_option("--select", c.select, "Net selection")->check(CLI::IsMember({"random", "correlated"}));
  cmd->add_flag("--no-inverters", c.no_inverters, "Full-Lock without inverters");
}

void add_attack_flags(CLI::App* cmd, Common& c)
{
  cmd->add_option("--timeout", c.timeout_s, "Timeout in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--solver", c.solver, "builtin, or an external solver command");
}

LockedDesign load_locked(const std::string& bench_path, const std::string& manifest_path,
                         const std::string& oracle_path)
{
  const auto text = read_file(bench_path);
  if (!manifest_path.empty()) return load_design(Json::parse(read_file(manifest_path)), text);
  if (oracle_path.empty()) throw Error(ErrorCode::io, "need --manifest or --oracle");
  LockedDesign d;
  d.netlist = parse_bench(text);
  d.original = parse_bench(read_file(oracle_path));
  return d;
}

int cmd_lock(const std::string& in, const std::string& out, const std::string& manifest, const Common& c)
{
  const auto cfg = lock_config(c);
  const auto d = lock(parse_bench(read_file(in)), cfg);
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
  write_file(out, write_bench(d.netlist));
  if (!manifest.empty()) write_file(manifest, manifest_json(d, cfg).dump(2) + "\n");
  return 0;
}

int cmd_attack(const std::string& bench, const std::string& manifest, const std::string& oracle_path,
               const std::string& method, const std::string& dips, const Common& c)
{
  const auto d = load_locked(bench, manifest, oracle_path);
  Oracle oracle(d.original);
  const auto report = run_attack(method == "sat" ? AttackMethod::sat : AttackMethod::cpsat, d, oracle, attack_budget(c));
  auto j = report_json(report);
  if (report.status == AttackStatus::solved) j["verified"] = verify_attack_key(d, report.key, oracle).equal;
  if (!c.report.empty()) write_file(c.report, j.dump(2) + "\n");
  if (!dips.empty()) write_file(dips, dip_csv(report));
  std::cout << to_string(report.status) << " N=" << report.iterations << " time=" << report.wall_seconds
            << "s key=" << key_string(report.key) << '\n';
  return report.status == AttackStatus::solved ? 0 : 1;
}

int cmd_verify(const std::string& bench, const std::string& manifest, const std::string& oracle_path,
               const std::string& key_text)
{
  const auto d = load_locked(bench, manifest, oracle_path);
  const BitVector key = key_text.empty() ? d.correct_key : parse_key_string(key_text);
  const auto r = verify_key(d.netlist, d.original, key);
  if (r.equal) {
    std::cout << "Equal\n";
    return 0;
  }
  std::cout << "Counterexample " << key_string(r.counterexample) << '\n';
  return exit_counterexample;
}

int cmd_stats(const std::vector<std::string>& files)
{
  std::cout << "file,vars,clauses,ratio\n";
  for (const auto& f : files) {
    const auto text = read_file(f);
    const auto s = is_dimacs(f) ? stats(from_dimacs(text)) : stats(tseitin(parse_bench(text)).cnf);
    std::cout << f << ',' << s.vars << ',' << s.clauses << ',' << s.ratio << '\n';
  }
  return 0;
}

int cmd_preprocess(const std::string& bench, const std::string& manifest, const std::string& out, const Common& c)
{
  const auto d = load_design(Json::parse(read_file(manifest)), read_file(bench));
  const auto f = cpsat_prepare(d, attack_budget(c));
  Cnf all = f.circuit.cnf;
  all.append(f.circuit.key_constraints);
  write_file(out, to_dimacs(all));
  std::cerr << "keyrb,topology,encoded,clauses_before,clauses_encoded,clauses_after\n";
  for (const auto& s : f.stats) {
    std::cerr << s.keyrb << ',' << s.topology << ',' << s.encoded << ',' << s.clauses_before << ','
              << s.clauses_encoded << ',' << s.clauses_after << '\n';
  }
  return 0;
}

int cmd_solve(const std::string& file, int timeout_s)
{
  const auto cnf = from_dimacs(read_file(file));
  const auto r = sat::solve(cnf, {}, sat::Clock::now() + std::chrono::seconds(timeout_s));
  if (r.status == sat::Status::timeout) {
    std::cout << "s UNKNOWN\n";
    return 0;
  }
  if (r.status == sat::Status::unsat) {
    std::cout << "s UNSATISFIABLE\n";
    return 20;
  }
  std::cout << "s SATISFIABLE\nv";
  for (int v = 1; v <= cnf.num_vars(); ++v) std::cout << ' ' << (r.value(v) ? v : -v);
  std::cout << " 0\n";
  return 10;
}

struct SweepRow {
  std::string text;
  bool error = false;
};

SweepRow sweep_row(const Netlist& circuit, const std::string& topology, std::size_t m, std::size_t count,
                   std::uint64_t seed, const std::string& method, const Common& c)
{
  std::ostringstream row;
  row << topology << ',' << m << ',' << count << ',' << seed << ',' << method << ',';
  try {
    Common rc = c;
    rc.topology = topology;
    rc.size = m;
    rc.count = count;
    rc.seed = seed;
    const auto d = lock(circuit, lock_config(rc));
    Oracle oracle(d.original);
    const auto r = run_attack(method == "sat" ? AttackMethod::sat : AttackMethod::cpsat, d, oracle, attack_budget(rc));
    std::size_t before = 0, after = 0;
    for (const auto& s : r.keyrb_stats) {
      before += s.clauses_before;
      after += s.clauses_after;
    }
    const double reduction = after == 0 ? 1.0 : static_cast<double>(before) / static_cast<double>(after);
    const bool ok = r.status == AttackStatus::solved && verify_attack_key(d, r.key, oracle).equal;
    row << r.iterations << ',' << r.wall_seconds << ',' << reduction << ',' << to_string(r.status) << ','
        << (ok ? 1 : 0) << '\n';
    return {row.str(), false};
  } catch (const Error& e) {
    row << ",,,Error," << 0 << '\n';
    std::cerr << "error: " << e.what() << '\n';
    return {row.str(), true};
  }
}

int cmd_bench(const std::string& circuit_path, const RandomCircuitConfig& gen, const std::vector<std::string>& topologies,
              const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& counts, std::size_t seeds,
              const std::vector<std::string>& methods, std::size_t jobs, const std::string& out_path, const Common& c)
{
  const Netlist circuit = circuit_path.empty() ? random_circuit(gen) : parse_bench(read_file(circuit_path));
  struct Task {
    std::string topology;
    std::size_t m, count;
    std::uint64_t seed;
    std::string method;
  };
  std::vector<Task> tasks;
  for (const auto& t : topologies)
    for (std::size_t m : sizes)
      for (std::size_t k : counts)
        for (std::uint64_t s = 1; s <= seeds; ++s)
          for (const auto& meth : methods) tasks.push_back({t, m, k, c.seed + s - 1, meth});

  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw Error(ErrorCode::io, "cannot write " + out_path);
  }
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  out << "topology,m,count,seed,method,N,time,clause_reduction,status,verified\n" << std::flush;

  // Workers fill slots; rows are written in task order as soon as they are ready.
  std::vector<std::optional<SweepRow>> done(tasks.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& t = tasks[i];
      auto row = sweep_row(circuit, t.topology, t.m, t.count, t.seed, t.method, c);
      std::lock_guard lock(mu);
      done[i] = std::move(row);
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, jobs); ++w) pool.emplace_back(worker);
  bool any_error = false;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return done[i].has_value(); });
    out << done[i]->text << std::flush;
    any_error |= done[i]->error;
  }
  for (auto& t : pool) t.join();
  return any_error ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"keylock: routing-based logic locking and SAT attacks"};
  app.require_subcommand(1);
  Common c;

  std::string in, out, manifest, oracle, method = "cpsat", key, dips;
  std::vector<std::string> files;

  auto* lock_cmd = app.add_subcommand("lock", "Lock a BENCH netlist");
  lock_cmd->add_option("input", in, "Input BENCH")->required();
  lock_cmd->add_option("-o,--output", out, "Locked BENCH (default stdout)");
  lock_cmd->add_option("--manifest", manifest, "Key manifest JSON");
  add_lock_flags(lock_cmd, c);

  auto* attack_cmd = app.add_subcommand("attack", "Attack a locked netlist");
  attack_cmd->add_option("locked", in, "Locked BENCH")->required();
  attack_cmd->add_option("--manifest", manifest, "Key manifest JSON");
  attack_cmd->add_option("--oracle", oracle, "Unlocked BENCH used as oracle");
  attack_cmd->add_option("--method", method, "Attack method")->check(CLI::IsMember({"sat", "cpsat"}));
  attack_cmd->add_option("--report", c.report, "Report JSON");
  attack_cmd->add_option("--dips", dips, "DIP trace CSV");
  add_attack_flags(attack_cmd, c);

  auto* verify_cmd = app.add_subcommand("verify", "Check a key (exit 0 Equal, 2 Counterexample)");
  verify_cmd->add_option("locked", in, "Locked BENCH")->required();
  verify_cmd->add_option("--manifest", manifest, "Key manifest JSON");
  verify_cmd->add_option("--oracle", oracle, "Unlocked BENCH");
  verify_cmd->add_option("--key", key, "Key bits (default: manifest key)");

  auto* stats_cmd = app.add_subcommand("stats", "Variables/clauses of DIMACS or BENCH files");
  stats_cmd->add_option("files", files, "Files")->required();

  auto* pre_cmd = app.add_subcommand("preprocess", "Write the CP&SAT-preprocessed formula");
  pre_cmd->add_option("locked", in, "Locked BENCH")->required();
  pre_cmd->add_option("--manifest", manifest, "Key manifest JSON")->required();
  pre_cmd->add_option("-o,--output", out, "DIMACS output (default stdout)");

  int solve_timeout = 3600;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a DIMACS file (competition output format)");
  solve_cmd->add_option("file", in, "DIMACS file")->required();
  solve_cmd->add_option("--timeout", solve_timeout, "Timeout in seconds")->check(CLI::PositiveNumber);

  RandomCircuitConfig gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random combinational circuit");
  gen_cmd->add_option("--inputs", gen.inputs);
  gen_cmd->add_option("--outputs", gen.outputs);
  gen_cmd->add_option("--gates", gen.gates);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("-o,--output", out);

  std::string circuit;
  std::vector<std::string> topologies{"fulllock"}, methods{"sat", "cpsat"};
  std::vector<std::size_t> sizes{4, 8}, counts{1};
  std::size_t seeds = 5, jobs = 1;
  RandomCircuitConfig sweep_gen;
  sweep_gen.inputs = 12;
  sweep_gen.outputs = 6;
  sweep_gen.gates = 150;
  auto* bench_cmd = app.add_subcommand("bench", "Seeded sweep, one CSV row per run");
  bench_cmd->add_option("--circuit", circuit, "BENCH to lock (default: random circuit)");
  bench_cmd->add_option("--gates", sweep_gen.gates, "Random circuit gates");
  bench_cmd->add_option("--inputs", sweep_gen.inputs, "Random circuit inputs");
  bench_cmd->add_option("--topologies", topologies)->delimiter(',');
  bench_cmd->add_option("--sizes", sizes)->delimiter(',');
  bench_cmd->add_option("--counts", counts)->delimiter(',');
  bench_cmd->add_option("--seeds", seeds, "Seeds per configuration");
  bench_cmd->add_option("--methods", methods)->delimiter(',');
  bench_cmd->add_option("--jobs", jobs, "Worker threads");
  bench_cmd->add_option("-o,--output", out, "CSV output (default stdout)");
  bench_cmd->add_option("--seed", c.seed, "First seed");
  bench_cmd->add_option("--select", c.select)->check(CLI::IsMember({"random", "correlated"}));
  add_attack_flags(bench_cmd, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lock_cmd) return cmd_lock(in, out, manifest, c);
    if (*attack_cmd) return cmd_attack(in, manifest, oracle, method, dips, c);
    if (*verify_cmd) return cmd_verify(in, manifest, oracle, key);
    if (*stats_cmd) return cmd_stats(files);
    if (*pre_cmd) return cmd_preprocess(in, manifest, out, c);
    if (*solve_cmd) return cmd_solve(in, solve_timeout);
    if (*gen_cmd) {
      write_file(out, write_bench(random_circuit(gen)));
      return 0;
    }
    if (*bench_cmd) return cmd_bench(circuit, sweep_gen, topologies, sizes, counts, seeds, methods, jobs, out, c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
