#ifndef DUALFRAME_TOOLS_CLI_HPP
#define DUALFRAME_TOOLS_CLI_HPP

#include <optional>
#include <string>
#include <vector>

namespace dualframe::cli {

inline constexpr const char* kVersion = "dualframe 1.0.0";

// Exit codes: 0 ok, 1 validation, 2 convergence, 3 I/O.
enum ExitCode { kOk = 0, kValidation = 1, kConvergence = 2, kIo = 3 };

struct RunConfig {
  std::string subcommand;  // estimate | calibrate | simulate

  // shared inputs
  std::string input_path, meta_path;
  std::string approach = "dual";
  std::string eta = "estimate";  // numeric literal or "estimate"
  std::string variable = "y";
  std::string variance;  // empty | linearization | jackknife | jackknife-fpc
  double ci_level = 0.95;
  std::string design_a = "auto", design_b = "auto";

  // estimate
  std::string estimator = "hartley";  // hartley | sf

  // calibrate
  std::string distance = "euclidean";
  std::string aux_case = "1";  // 1|2|3|4|xa|xazb|xwhole|groups|groups-margins
  std::string x_a = "xA", x_b = "xB", group_var;
  std::string overlap_constraint_var;  // appends the overlap-mean restriction
  double tolerance = 1e-8;
  int max_iterations = 50;
  double logit_l = 0.3, logit_u = 3.0;
  std::string weights_out;

  // simulate
  std::string scenario = "small";
  std::string na = "small", nb = "small";
  int replicates = 1000;
  std::optional<std::uint64_t> seed;
  std::string estimators = "sf,har,sfrr,cal";
  std::string distances = "euclidean,raking,logit,kl";
  std::string aux_cases = "1,2,3,4";
  bool overlap_constraint = false;
  bool fresh_binomial = false;
  bool with_variance = false;

  // outputs
  std::string out_path, csv_path, json_path;
};

// Executes one configured run, writing the report to stdout and any
// configured files. Returns the process exit code.
int run(const RunConfig& config);

// argv front end: parse into a RunConfig, then run.
int main(int argc, const char* const* argv);

}  // namespace dualframe::cli

#endif  // DUALFRAME_TOOLS_CLI_HPP
