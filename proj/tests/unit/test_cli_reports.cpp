#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hopflab/config.hpp"
#include "hopflab/error.hpp"
#include "hopflab/reports.hpp"

using namespace hopflab;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no hopflab::Error thrown";
  return ErrorCode::DomainError;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hopflab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir.string() + ".stdout";
  const std::string cmd = std::string(HOPFLAB_CLI) + " " + args + " --out " + dir.string() + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  fs::remove(log);
  return r;
}

}  // namespace

TEST(RunConfig, DefaultsAndTypedAccess) {
  RunConfig c("decay");
  EXPECT_EQ(c.subcommand(), "decay");
  EXPECT_EQ(c.text("profile"), "log1");
  EXPECT_DOUBLE_EQ(c.real("h"), 1.0 / 512);
  EXPECT_EQ(c.integer("K"), 4);
  EXPECT_EQ(c.seed(), 0u);
  EXPECT_FALSE(c.explicitly_set("h"));
  c.set("h", " 0.01 ");
  EXPECT_DOUBLE_EQ(c.real("h"), 0.01);
  EXPECT_TRUE(c.explicitly_set("h"));
  EXPECT_EQ(code_of([&] { c.real("profile"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.integer("h"); }), ErrorCode::ConfigError);
}

TEST(RunConfig, RangesAreEnforced) {
  RunConfig c("verify");
  EXPECT_EQ(code_of([&] { c.set("nu", "0"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("nu", "1.5"); }), ErrorCode::ConfigError);
  c.set("nu", "1");
  EXPECT_EQ(code_of([&] { c.set("kappa", "1"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("K", "2.5"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("seed", "-1"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("h", "abc"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("nope", "1"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.set("dump", "yes"); }), ErrorCode::ConfigError);
  for (const auto& k : config_schema()) {
    RunConfig fresh;
    EXPECT_NO_THROW(fresh.set(k.name, k.fallback)) << k.name;
  }
}

TEST(RunConfig, KeyValueFileThenFlags) {
  RunConfig c("decay");
  std::istringstream in("# comment\n\nR0 = 0.5   # trailing\nK=3\nsubcommand=ignored\n");
  c.load(in);
  EXPECT_DOUBLE_EQ(c.real("R0"), 0.5);
  EXPECT_EQ(c.integer("K"), 3);
  c.set("K", "4");
  EXPECT_EQ(c.integer("K"), 4);
  std::istringstream bad("R0 0.5\n");
  EXPECT_EQ(code_of([&] { c.load(bad); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.load_file("/nonexistent/hopflab.cfg"); }), ErrorCode::ConfigError);
}

TEST(RunConfig, ResolvedRoundTrips) {
  RunConfig a("solve");
  a.set("h", "0.0625");
  a.set("profile", "wedge:2pi/3");
  const std::string text = a.resolved();
  EXPECT_EQ(text.rfind("subcommand=solve\n", 0), 0u);
  RunConfig b("solve");
  std::istringstream in(text);
  b.load(in);
  EXPECT_EQ(b.resolved(), text);
}

TEST(RunConfig, OutputDirectoryPrecedence) {
  RunConfig c;
  ::unsetenv("HOPFLAB_OUT");
  EXPECT_EQ(c.output_dir(), fs::path("hopflab_out"));
  ::setenv("HOPFLAB_OUT", "/tmp/from_env", 1);
  EXPECT_EQ(c.output_dir(), fs::path("/tmp/from_env"));
  c.set("out", "explicit");
  EXPECT_EQ(c.output_dir(), fs::path("explicit"));
  ::unsetenv("HOPFLAB_OUT");
}

TEST(RunConfig, SplitList) {
  EXPECT_EQ(split_list(" power:0.5 , log1,,"), (std::vector<std::string>{"power:0.5", "log1"}));
  EXPECT_TRUE(split_list("").empty());
}

TEST(OutputSet, UncommittedFilesAreRemoved) {
  const auto dir = scratch("uncommitted");
  {
    OutputSet out(dir);
    out.write("a.txt", "x");
    out.write("sub/b.txt", "y");
    EXPECT_TRUE(fs::exists(dir / "sub" / "b.txt"));
  }
  EXPECT_FALSE(fs::exists(dir));
}

TEST(OutputSet, CommittedFilesStay) {
  const auto dir = scratch("committed");
  {
    OutputSet out(dir);
    out.write("a.txt", "hello\n");
    out.commit();
  }
  EXPECT_EQ(slurp(dir / "a.txt"), "hello\n");
  fs::remove_all(dir);
}

TEST(OutputSet, PreexistingDirectoryKept) {
  const auto dir = scratch("preexisting");
  fs::create_directories(dir);
  {
    OutputSet out(dir);
    out.write("a.txt", "x");
  }
  EXPECT_TRUE(fs::exists(dir));
  EXPECT_FALSE(fs::exists(dir / "a.txt"));
  fs::remove_all(dir);
}

TEST(Reports, PathSafe) {
  EXPECT_EQ(path_safe("wedge:2pi/3"), "wedge_2pi_3");
  EXPECT_EQ(path_safe("power:0.5"), "power_0.5");
}

TEST(Reports, ModulusTableLinearAndLog1) {
  std::ostringstream lin;
  write_modulus_table(lin, Modulus::preset("linear"), 9);
  std::istringstream in(lin.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,sigma,sigma_over_t,J");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string t, s, q, j;
    std::getline(ss, t, ',');
    std::getline(ss, s, ',');
    std::getline(ss, q, ',');
    std::getline(ss, j, ',');
    EXPECT_NEAR(std::stod(j), std::stod(t), 1e-12 * std::stod(t));
    EXPECT_DOUBLE_EQ(std::stod(q), 1.0);
  }
  EXPECT_EQ(rows, 9);
  std::ostringstream lg;
  write_modulus_table(lg, Modulus::preset("log1"), 5);
  EXPECT_NE(lg.str().find(",inf\n"), std::string::npos);
}

TEST(Reports, GeometryTableRows) {
  std::ostringstream os;
  const auto F = BoundaryProfile::preset("cone:0.5", 1.0, 2);
  write_geometry_table(os, F, {0.25, 0.125});
  EXPECT_EQ(os.str(),
            "r,delta,delta1,two_delta_2r,sandwich\n"
            "0.25,0.5,0.5,1,ok\n"
            "0.125,0.5,0.5,1,ok\n");
}

TEST(Reports, SuitesPassAndCount) {
  const auto sw = sandwich_suite(6, 1.0, 3);
  EXPECT_EQ(sw.checks, (6u + 7u) * 3u);
  EXPECT_TRUE(sw.pass()) << sw.first_failure;
  const auto dr = drift_property_suite(3000, 1);
  EXPECT_EQ(dr.checks, 3000u);
  EXPECT_TRUE(dr.pass()) << dr.first_failure;
  EXPECT_NE(to_text(dr).find("pass: true"), std::string::npos);
  EXPECT_FALSE(SuiteOutcome{}.pass());
}

TEST(Cli, ModulusPresetsAndBadCsv) {
  const auto d1 = scratch("cli_mod1");
  auto r = run_cli("modulus --preset log1", d1);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(d1 / "modulus_summary.txt").find("verdict: NonDini\n"), std::string::npos);
  EXPECT_NE(slurp(d1 / "modulus_summary.txt").find("config.preset: log1\n"), std::string::npos);

  const auto d2 = scratch("cli_mod2");
  const fs::path bad = fs::temp_directory_path() / "hopflab_test_bad.csv";
  std::ofstream(bad) << "t,sigma\n0.1,0.5\n0.5,0.2\n1,1\n";
  r = run_cli("modulus --csv " + bad.string(), d2);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("NotMonotone"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(d2));
  fs::remove(bad);
  fs::remove_all(d1);
}

TEST(Cli, VerifyExitCodes) {
  const auto d = scratch("cli_verify");
  auto r = run_cli("verify --samples 500 --profiles 4", d);
  EXPECT_EQ(r.code, 0) << r.out;
  r = run_cli("verify --samples 500 --profiles 4 --s 2", d);
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("radial barrier failed"), std::string::npos);
  r = run_cli("verify --nu 1 --samples 500 --profiles 4", d);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(d / "verify_summary.txt").find("all_pass: true\n"), std::string::npos);
  r = run_cli("verify --nu 2", d);
  EXPECT_EQ(r.code, 2);
  fs::remove_all(d);
}

TEST(Cli, DecayFlatAndFailures) {
  const auto d = scratch("cli_decay");
  auto r = run_cli("decay --profile flat --op laplace --h 0.0078125", d);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(d / "decay_summary.txt").find("verdict: HopfHolds\n"), std::string::npos);
  EXPECT_EQ(slurp(d / "decay.csv").substr(0, 41), "k,r_k,osc_k,ratio_k,delta_k,product_k,h_k");

  const auto d2 = scratch("cli_decay_fail");
  r = run_cli("decay --profile log1 --h 0.0078125 --max_iter 2 --direct_below 0", d2);
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_FALSE(fs::exists(d2));
  r = run_cli("decay --h 0.01", d2);  // 2^-4 < 8h
  EXPECT_EQ(r.code, 2) << r.out;
  r = run_cli("decay --contrast flat", d2);
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("MissingNonDini"), std::string::npos);
  EXPECT_FALSE(fs::exists(d2));
  fs::remove_all(d);
}

TEST(Cli, SolveAndGeometryReproducible) {
  const auto a = scratch("cli_solve_a");
  const auto b = scratch("cli_solve_b");
  EXPECT_EQ(run_cli("solve --profile log1 --h 0.03125 --dump true", a).code, 0);
  EXPECT_EQ(run_cli("solve --profile log1 --h 0.03125 --dump true", b).code, 0);
  for (const char* f : {"solution.csv", "matrix.coo", "rhs.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "solution.csv").substr(0, 8), "x1,x2,u\n");
  const auto g = scratch("cli_geometry");
  const auto r = run_cli("geometry --profile power:0.5 --r 0.25,0.125", g);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(g / "geometry.csv").find("0.25,0.5,"), std::string::npos);
  EXPECT_EQ(run_cli("geometry --r 0.9", g).code, 2);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(g);
}

TEST(Cli, UsageErrors) {
  const auto d = scratch("cli_usage");
  EXPECT_EQ(run_cli("", d).code, 2);
  EXPECT_EQ(run_cli("nosuch", d).code, 2);
  EXPECT_EQ(run_cli("modulus --nosuch 1", d).code, 2);
  EXPECT_EQ(run_cli("modulus --help", d).code, 0);
}
