#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "../tools/cli.hpp"
#include "dualframe/survey_data.hpp"

namespace fs = std::filesystem;
using dualframe::cli::RunConfig;

namespace {

// Silence the CLI's stdout while a test drives it.
struct CaptureCout {
  std::ostringstream captured;
  std::streambuf* old;
  CaptureCout() : old(std::cout.rdbuf(captured.rdbuf())) {}
  ~CaptureCout() { std::cout.rdbuf(old); }
};

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / "dualframe_cli_test";
    fs::create_directories(dir);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

void write(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kFourRows =
    "id,domain,d_A,d_B,y\n"
    "u1,a,2.0,,1\n"
    "u2,ab,2.0,2.0,2\n"
    "u3,ba,2.0,2.0,3\n"
    "u4,b,,2.0,4\n";

const char* kMeta =
    "N_A = 4\n"
    "N_B = 4\n"
    "N_ab = 2\n";

}  // namespace

TEST_CASE("estimate subcommand reproduces the hand-computed Hartley total") {
  TempDir tmp;
  write(tmp / "s.csv", kFourRows);
  RunConfig c;
  c.subcommand = "estimate";
  c.input_path = tmp / "s.csv";
  c.approach = "dual";
  c.eta = "0.5";
  c.design_a = "unequal";
  c.design_b = "unequal";
  c.json_path = tmp / "est.json";
  CaptureCout quiet;
  REQUIRE(dualframe::cli::run(c) == 0);
  const auto machine = nlohmann::json::parse(slurp(tmp / "est.json"));
  // 2*1 + 0.5*2*2 + 0.5*2*3 + 2*4 = 15
  CHECK(machine["point"].get<double>() == 15.0);
  CHECK(machine["eta"].get<double>() == 0.5);
}

TEST_CASE("calibrate subcommand writes weights whose domain sums hit the targets") {
  TempDir tmp;
  write(tmp / "s.csv", kFourRows);
  write(tmp / "m.cfg", kMeta);
  RunConfig c;
  c.subcommand = "calibrate";
  c.input_path = tmp / "s.csv";
  c.meta_path = tmp / "m.cfg";
  c.eta = "0.5";
  c.distance = "raking";
  c.aux_case = "1";
  c.design_a = "unequal";
  c.design_b = "unequal";
  c.weights_out = tmp / "w.csv";
  c.json_path = tmp / "cal.json";
  CaptureCout quiet;
  REQUIRE(dualframe::cli::run(c) == 0);

  // Recompute the domain sums from the emitted weights file.
  std::ifstream in(tmp / "w.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,base_weight,calibrated_weight,ratio");
  std::map<std::string, double> w;
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1),
               c3 = line.find(',', c2 + 1);
    w[line.substr(0, c1)] = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
  }
  CHECK(std::abs(w["u1"] - 2.0) < 1e-8);        // N_a = 2
  CHECK(std::abs(w["u2"] - 1.0) < 1e-8);        // eta N_ab = 1
  CHECK(std::abs(w["u3"] - 1.0) < 1e-8);        // (1-eta) N_ab = 1
  CHECK(std::abs(w["u4"] - 2.0) < 1e-8);        // N_b = 2

  const auto machine = nlohmann::json::parse(slurp(tmp / "cal.json"));
  CHECK(machine["converged"].get<bool>());
  CHECK(machine["max_constraint_residual"].get<double>() <= 1e-8);
  // Machine numerics round-trip exactly through JSON parse/serialize.
  CHECK(nlohmann::json::parse(machine.dump()) == machine);
}

TEST_CASE("exit codes distinguish validation, convergence, and io failures") {
  TempDir tmp;
  write(tmp / "s.csv", kFourRows);
  write(tmp / "m.cfg", kMeta);

  RunConfig io;
  io.subcommand = "estimate";
  io.input_path = tmp / "missing.csv";
  {
    CaptureCout quiet;
    CHECK(dualframe::cli::run(io) == 3);
  }

  RunConfig bad;
  bad.subcommand = "estimate";
  bad.input_path = tmp / "s.csv";
  bad.eta = "1.5";
  bad.design_a = "unequal";
  bad.design_b = "unequal";
  {
    CaptureCout quiet;
    CHECK(dualframe::cli::run(bad) == 1);
  }

  // Logit bounds cannot reach a far-away target: convergence failure.
  write(tmp / "far.cfg",
        "N_A = 40\n"
        "N_B = 12\n"
        "N_ab = 10\n");
  RunConfig conv;
  conv.subcommand = "calibrate";
  conv.input_path = tmp / "s.csv";
  conv.meta_path = tmp / "far.cfg";
  conv.eta = "0.5";
  conv.distance = "logit";
  conv.aux_case = "1";
  conv.design_a = "unequal";
  conv.design_b = "unequal";
  {
    CaptureCout quiet;
    CHECK(dualframe::cli::run(conv) == 2);
  }
}

TEST_CASE("simulate twice with one seed is byte-identical") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "simulate";
  c.scenario = "small";
  c.replicates = 8;
  c.seed = 7;
  c.estimators = "sf,cal";
  c.distances = "raking";
  c.aux_cases = "1,2";
  c.out_path = tmp / "r1.txt";
  c.csv_path = tmp / "r1.csv";
  {
    CaptureCout quiet;
    REQUIRE(dualframe::cli::run(c) == 0);
  }
  c.out_path = tmp / "r2.txt";
  c.csv_path = tmp / "r2.csv";
  {
    CaptureCout quiet;
    REQUIRE(dualframe::cli::run(c) == 0);
  }
  CHECK(slurp(tmp / "r1.txt") == slurp(tmp / "r2.txt"));
  CHECK(slurp(tmp / "r1.csv") == slurp(tmp / "r2.csv"));
  CHECK(slurp(tmp / "r1.csv").find("CAL-RAK(2)") != std::string::npos);
}

TEST_CASE("argv front end parses subcommands and rejects a missing seed") {
  TempDir tmp;
  write(tmp / "s.csv", kFourRows);
  std::vector<std::string> ok_args{"dualframe", "estimate", "--input", tmp / "s.csv",
                                   "--eta", "0.5", "--design-a", "unequal",
                                   "--design-b", "unequal"};
  std::vector<const char*> argv;
  for (const auto& a : ok_args) argv.push_back(a.c_str());
  CaptureCout quiet;
  CHECK(dualframe::cli::main(static_cast<int>(argv.size()), argv.data()) == 0);

  std::vector<std::string> bad_args{"dualframe", "simulate", "--replicates", "2"};
  std::vector<const char*> bad;
  for (const auto& a : bad_args) bad.push_back(a.c_str());
  CHECK(dualframe::cli::main(static_cast<int>(bad.size()), bad.data()) == 1);
}
