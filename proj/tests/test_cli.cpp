#include "generators.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace keylock;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args)
{
  Run r;
  const std::string cmd = std::string(KEYLOCK_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() / ("keylock_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    std::ofstream(dir_ / "c.bench") << write_bench(gen::small_circuit(3, 10, 5, 100));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, LockWithZeroCountIsByteStable)
{
  ASSERT_EQ(run("lock " + p("c.bench") + " --count 0 -o " + p("l.bench")).code, 0);
  EXPECT_EQ(slurp(p("l.bench")), slurp(p("c.bench")));
}

TEST_F(Cli, LockAttackVerify)
{
  ASSERT_EQ(run("lock " + p("c.bench") + " --topology fulllock --keyrb-size 4 --seed 2 -o " + p("l.bench") +
                " --manifest " + p("m.json"))
                .code,
            0);
  const auto manifest = Json::parse(slurp(p("m.json")));
  EXPECT_EQ(manifest["schema"], manifest_schema);
  const auto r = run("attack " + p("l.bench") + " --manifest " + p("m.json") + " --method cpsat --report " + p("r.json") +
                     " --dips " + p("d.csv"));
  ASSERT_EQ(r.code, 0);
  const auto report = Json::parse(slurp(p("r.json")));
  EXPECT_EQ(report["status"], "Solved");
  EXPECT_EQ(report["verified"], true);
  const auto csv = slurp(p("d.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,dip,response,decisions,conflicts,seconds");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), report["iterations"].get<std::size_t>() + 1);

  EXPECT_EQ(run("verify " + p("l.bench") + " --manifest " + p("m.json")).code, 0);
  EXPECT_EQ(run("verify " + p("l.bench") + " --oracle " + p("c.bench") + " --key " + report["key"].get<std::string>()).code, 0);
  std::string wrong = manifest["correct_key"].get<std::string>();
  int verdict = 0;
  for (std::size_t b = 0; b < wrong.size() && verdict != 2; ++b) {
    auto k = wrong;
    k[b] = k[b] == '0' ? '1' : '0';
    verdict = run("verify " + p("l.bench") + " --manifest " + p("m.json") + " --key " + k).code;
  }
  EXPECT_EQ(verdict, 2);
}

TEST_F(Cli, BenchSweepRowsAndDeterminism)
{
  const std::string args = "bench --circuit " + p("c.bench") +
                           " --topologies fulllock --sizes 4,8 --counts 1 --seeds 5 --methods sat,cpsat --jobs 2 -o ";
  ASSERT_EQ(run(args + p("a.csv")).code, 0);
  ASSERT_EQ(run(args + p("b.csv")).code, 0);
  auto rows = [](const std::string& csv) {
    std::vector<std::string> v;
    std::stringstream ss(csv);
    for (std::string line; std::getline(ss, line);) v.push_back(line);
    return v;
  };
  const auto a = rows(slurp(p("a.csv"))), b = rows(slurp(p("b.csv")));
  ASSERT_EQ(a.size(), 21U);
  EXPECT_EQ(a[0], "topology,m,count,seed,method,N,time,clause_reduction,status,verified");
  ASSERT_EQ(b.size(), a.size());
  // Everything except the wall-clock column repeats.
  auto strip_time = [](const std::string& row) {
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() > 6) f.erase(f.begin() + 6);
    return f;
  };
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_EQ(strip_time(a[i]), strip_time(b[i])) << a[i];
    EXPECT_NE(a[i].find(",Solved,1"), std::string::npos) << a[i];
  }
}

TEST_F(Cli, StatsAndPreprocess)
{
  ASSERT_EQ(run("lock " + p("c.bench") + " --topology crossbar --keyrb-size 4 -o " + p("l.bench") + " --manifest " + p("m.json")).code, 0);
  ASSERT_EQ(run("preprocess " + p("l.bench") + " --manifest " + p("m.json") + " -o " + p("f.cnf")).code, 0);
  const auto f = from_dimacs(slurp(p("f.cnf")));
  EXPECT_GT(f.num_clauses(), 0U);
  const auto s = run("stats " + p("f.cnf"));
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find(std::to_string(f.num_clauses())), std::string::npos);
}

TEST_F(Cli, SolveCompetitionFormat)
{
  std::ofstream(p("s.cnf")) << "p cnf 2 2\n1 2 0\n-1 0\n";
  std::ofstream(p("u.cnf")) << "p cnf 1 2\n1 0\n-1 0\n";
  const auto s = run("solve " + p("s.cnf"));
  EXPECT_EQ(s.code, 10);
  EXPECT_NE(s.out.find("s SATISFIABLE"), std::string::npos);
  EXPECT_NE(s.out.find("-1 2 0"), std::string::npos);
  EXPECT_EQ(run("solve " + p("u.cnf")).code, 20);
}

TEST_F(Cli, ExternalSolverBridge)
{
  // The CLI's own solve command serves as the external binary.
  const auto d = lock(gen::small_circuit(4, 8, 4, 60), [] {
    LockConfig c;
    c.topology = Topology::crossbar;
    c.size = 4;
    c.seed = 4;
    return c;
  }());
  Oracle o(d.original);
  AttackBudget b;
  b.solver = std::string(KEYLOCK_CLI) + " solve";
  const auto r = sat_attack(d, o, b);
  ASSERT_EQ(r.status, AttackStatus::solved);
  EXPECT_TRUE(verify_attack_key(d, r.key, o).equal);
}

TEST_F(Cli, ErrorsExitNonZero)
{
  std::ofstream(p("bad.bench")) << "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n";
  EXPECT_NE(run("lock " + p("bad.bench")).code, 0);
  EXPECT_NE(run("lock " + p("missing.bench")).code, 0);
}
