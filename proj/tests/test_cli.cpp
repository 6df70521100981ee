#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vpsfem_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.in.json";
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Captured {
  int code;
  std::string out;
  std::string err;
};

Captured run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = vpsfem::cli::run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, ValidateExperiment1) {
  const fs::path d = scratch_dir("validate");
  const auto r = run({"validate", "--config", write_config(d, R"({"mesh_n": 4})").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, CheckSteadyConfig) {
  const fs::path d = scratch_dir("check");
  const auto cfg = write_config(d, R"({"preset": "custom", "mesh_n": 4, "T": 1.0, "N": 5,
      "initial": {"kind": "constant", "phi": 0.5, "q": 0.0}})");
  const auto r = run({"check", "--config", cfg.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}

TEST(Cli, MalformedConfigNamesKey) {
  const fs::path d = scratch_dir("bad");
  const auto r = run({"check", "--config", write_config(d, R"({"mesh_n": 4, "steps": 3})").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'steps'"), std::string::npos) << r.err;
  const auto missing = run({"check", "--config", (d / "nope.json").string()});
  EXPECT_EQ(missing.code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"simulate"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, NewtonFailureReportsStep) {
  const fs::path d = scratch_dir("fail");
  const auto cfg = write_config(d, R"({"mesh_n": 8, "T": 0.5, "N": 4,
      "newton": {"continuation_depth": 0}})");
  const auto r = run({"check", "--config", cfg.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("step 1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("smaller time step"), std::string::npos) << r.err;
}

TEST(Cli, SimulateIsDeterministic) {
  const fs::path d = scratch_dir("sim");
  const auto cfg = write_config(d, R"({"preset": "experiment2", "mesh_n": 6, "T": 0.2, "N": 4,
      "seed": 3, "snapshot_stride": 2})");
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (d / "a").string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (d / "b").string()}).code, 0);
  for (const char* name : {"config.json", "diagnostics.csv", "snapshot_000000.vtk",
                           "snapshot_000002.vtk", "snapshot_000004.vtk"}) {
    ASSERT_TRUE(fs::exists(d / "a" / name)) << name;
    EXPECT_EQ(read_file(d / "a" / name), read_file(d / "b" / name)) << name;
  }
  EXPECT_FALSE(fs::exists(d / "a" / "snapshot_000001.vtk"));
  EXPECT_EQ(read_file(write_config(d / "a", read_file(d / "a" / "config.json"))),
            read_file(d / "a" / "config.json"));
}

TEST(Cli, ConvergeWritesTables) {
  const fs::path d = scratch_dir("conv");
  const auto cfg = write_config(d, R"({"preset": "experiment2", "T": 0.25, "seed": 1})");
  const auto r = run({"converge", "--config", cfg.string(), "--levels", "3", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(d / "convergence.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + 3 error rows
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int eoc_rows = 0;
  while (std::getline(lines, line)) {
    std::stringstream fields(line);
    std::string f;
    for (int i = 0; i < 6; ++i) std::getline(fields, f, ',');
    if (!f.empty()) ++eoc_rows;
  }
  EXPECT_EQ(eoc_rows, 2);
  EXPECT_EQ(read_file(d / "convergence.txt"), r.out);
}
