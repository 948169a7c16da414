#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cskl/cli.hpp"

namespace cskl {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cskl_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

std::vector<std::string> csv_lines(const fs::path& p) {
  std::vector<std::string> lines;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

/// Generates a small synthetic bank once per test binary.
const fs::path& small_bank_dir() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("bank");
    const CliRun r = cli({"gen-synthetic", "--m", "40", "--seed", "3", "--out", d.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return d;
  }();
  return dir;
}

std::string bank_file() { return (small_bank_dir() / "bank.cskb").string(); }

TEST(CliGenSynthetic, WritesEighteenKernelBank) {
  const fs::path dir = fresh_dir("gen");
  const CliRun r = cli({"gen-synthetic", "--m", "30", "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("N=18"), std::string::npos);
  const Json s = read_json(dir / "summary.json");
  EXPECT_EQ(s["kernels"], 18);
  EXPECT_EQ(s["samples"], 30);
  EXPECT_EQ(s["config"]["seed"], 1);
  EXPECT_EQ(csv_lines(dir / "groups.txt").size(), 18u);
  const CliRun inspect = cli({"inspect-bank", "--bank", (dir / "bank.cskb").string()});
  ASSERT_EQ(inspect.code, kExitOk) << inspect.err;
  EXPECT_NE(inspect.out.find("kernel 17"), std::string::npos);
}

TEST(CliGenSynthetic, SameSeedGivesIdenticalFiles) {
  const fs::path a = fresh_dir("gen_a");
  const fs::path b = fresh_dir("gen_b");
  ASSERT_EQ(cli({"gen-synthetic", "--m", "30", "--seed", "5", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(cli({"gen-synthetic", "--m", "30", "--seed", "5", "--out", b.string()}).code, kExitOk);
  for (const char* f : {"bank.cskb", "groups.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const fs::path c = fresh_dir("gen_c");
  ASSERT_EQ(cli({"gen-synthetic", "--m", "30", "--seed", "6", "--out", c.string()}).code, kExitOk);
  EXPECT_NE(slurp(a / "bank.cskb"), slurp(c / "bank.cskb"));
}

TEST(CliGenSynthetic, UnwritableOutputFailsBeforeComputation) {
  const fs::path blocker = fresh_dir("blocker");
  { std::ofstream(blocker) << "file"; }
  const CliRun r = cli({"gen-synthetic", "--m", "30", "--out", (blocker / "sub").string()});
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_FALSE(r.err.empty());
  EXPECT_TRUE(r.out.empty());
  fs::remove(blocker);
}

TEST(CliTrain, TEqualsNGivesAllOnes) {
  const fs::path dir = fresh_dir("train_all");
  const CliRun r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "18", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json s = read_json(dir / "summary.json");
  for (const auto& g : s["gamma"]) EXPECT_EQ(g.get<double>(), 1.0);
  EXPECT_EQ(s["selected_kernels"], 18);
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_EQ(csv_lines(dir / "gamma.csv").size(), 19u);
  EXPECT_GE(csv_lines(dir / "trace.csv").size(), 2u);
}

TEST(CliTrain, ValidationErrors) {
  const fs::path dir = fresh_dir("train_bad");
  CliRun r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "0", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--t"), std::string::npos);
  r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "19", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  r = cli({"train", "--bank", bank_file(), "--solver", "simplemkl", "--t", "3", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("--t"), std::string::npos);
  r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  r = cli({"train", "--bank", bank_file(), "--solver", "lpmkl", "--p", "1", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  r = cli({"train", "--bank", bank_file(), "--solver", "svm", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitValidation);
  r = cli({"frobnicate"});
  EXPECT_EQ(r.code, kExitValidation);
}

TEST(CliTrain, MissingOrCorruptBankIsIoError) {
  const fs::path dir = fresh_dir("train_io");
  CliRun r = cli({"train", "--bank", "/nonexistent/b.cskb", "--solver", "simplemkl", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitIo);
  const fs::path bad = fresh_dir("bad_bank");
  fs::create_directories(bad);
  { std::ofstream(bad / "b.cskb") << "not a bank"; }
  r = cli({"train", "--bank", (bad / "b.cskb").string(), "--solver", "simplemkl", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitIo);
}

TEST(CliTrain, SimpleMklMatchesCsklWithTOne) {
  const fs::path a = fresh_dir("train_t1");
  const fs::path b = fresh_dir("train_smkl");
  ASSERT_EQ(cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "1", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(cli({"train", "--bank", bank_file(), "--solver", "simplemkl", "--out", b.string()}).code, kExitOk);
  const double ja = read_json(a / "summary.json")["objective"].get<double>();
  const double jb = read_json(b / "summary.json")["objective"].get<double>();
  EXPECT_LE(std::abs(ja - jb), 1e-4 * std::max(1.0, std::abs(jb)));
}

TEST(CliTrain, IterationCapExitsWithNonConvergence) {
  const fs::path dir = fresh_dir("train_cap");
  const CliRun r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "3", "--max-outer-iters", "1",
                     "--out", dir.string()});
  EXPECT_EQ(r.code, kExitNonConvergence);
  EXPECT_FALSE(read_json(dir / "summary.json")["converged"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
}

TEST(CliTrain, NuSvmAndLpMkl) {
  const fs::path a = fresh_dir("train_nu");
  CliRun r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "2", "--svm", "nu", "--nu", "0.3", "--out",
               a.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(read_json(a / "summary.json").contains("margin"));
  r = cli({"train", "--bank", bank_file(), "--solver", "cskl", "--t", "2", "--svm", "nu", "--nu", "1.5", "--out",
           a.string()});
  EXPECT_EQ(r.code, kExitValidation);
  const fs::path b = fresh_dir("train_lp");
  r = cli({"train", "--bank", bank_file(), "--solver", "lpmkl", "--p", "3", "--out", b.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  double norm = 0.0;
  const Json lp = read_json(b / "summary.json");
  ASSERT_EQ(lp["gamma"].size(), 18u);
  for (const auto& g : lp["gamma"]) norm += std::pow(g.get<double>(), 3.0);
  EXPECT_NEAR(norm, 1.0, 1e-9);
}

TEST(CliSweep, FullRangeGivesOneRowPerT) {
  const fs::path dir = fresh_dir("sweep");
  const CliRun r = cli({"sweep", "--m", "40", "--t-min", "1", "--t-max", "18", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = csv_lines(dir / "sweep.csv");
  ASSERT_EQ(rows.size(), 19u);
  EXPECT_EQ(rows[0].rfind("t,problem,accuracy", 0), 0u);
  EXPECT_EQ(csv_lines(dir / "accuracy_vs_t.csv").size(), 19u);
  EXPECT_EQ(csv_lines(dir / "groups_vs_t.csv").size(), 19u);
  const Json s = read_json(dir / "summary.json");
  EXPECT_EQ(s["config"]["t_max"], 18);
}

TEST(CliSweep, InvalidRangeIsValidationError) {
  const CliRun r = cli({"sweep", "--m", "40", "--t-min", "5", "--t-max", "3", "--out", fresh_dir("sweep_bad").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(cli({"sweep", "--m", "40", "--t-max", "19", "--out", fresh_dir("sweep_bad2").string()}).code,
            kExitValidation);
}

TEST(CliSweep, RerunIsByteIdentical) {
  const fs::path a = fresh_dir("sweep_a");
  const fs::path b = fresh_dir("sweep_b");
  const std::vector<std::string> base{"sweep", "--m", "40", "--seed", "2", "--seeds", "2", "--t-min", "1",
                                      "--t-max", "4", "--threads", "2", "--out"};
  auto args_a = base;
  args_a.push_back(a.string());
  auto args_b = base;
  args_b.push_back(b.string());
  ASSERT_EQ(cli(args_a).code, kExitOk);
  ASSERT_EQ(cli(args_b).code, kExitOk);
  for (const char* f : {"sweep.csv", "accuracy_vs_t.csv", "groups_vs_t.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  Json sa = read_json(a / "summary.json");
  Json sb = read_json(b / "summary.json");
  sa["config"].erase("out");
  sb["config"].erase("out");
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(csv_lines(a / "sweep.csv").size(), 1u + 4u * 2u);
}

TEST(CliCompare, NeedsTwoSolvers) {
  const CliRun r = cli({"compare", "--m", "40", "--solver", "cskl", "--out", fresh_dir("cmp_bad").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(cli({"compare", "--m", "40", "--solver", "cskl", "--solver", "magic", "--out",
                 fresh_dir("cmp_bad2").string()})
                .code,
            kExitValidation);
}

TEST(CliCompare, MulticlassComparisonWritesReports) {
  const fs::path dir = fresh_dir("cmp");
  const CliRun r = cli({"compare", "--m", "60", "--classes", "3", "--solver", "cskl", "--solver", "simplemkl", "--solver",
                     "uniform", "--t", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // One row per task and solver; one ratio per task and non-reference solver.
  EXPECT_EQ(csv_lines(dir / "comparison.csv").size(), 1u + 3u * 3u);
  EXPECT_EQ(csv_lines(dir / "ratios.csv").size(), 1u + 3u * 2u);
  EXPECT_TRUE(fs::exists(dir / "group_histogram.csv"));
  const Json s = read_json(dir / "summary.json");
  ASSERT_TRUE(s.contains("tallies"));
  for (const auto& t : s["tallies"])
    EXPECT_EQ(t["wins"].get<int>() + t["losses"].get<int>() + t["ties"].get<int>() + t["failed"].get<int>(), 3);
}

TEST(CliConfig, ConfigFileSuppliesOptions) {
  const fs::path dir = fresh_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[gen-synthetic]\nm=30\nseed=9\n";
  }
  const CliRun r = cli({"gen-synthetic", "--config", (dir / "run.ini").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Json s = read_json(dir / "out" / "summary.json");
  EXPECT_EQ(s["samples"], 30);
  EXPECT_EQ(s["config"]["seed"], 9);
}

}  // namespace
}  // namespace cskl
