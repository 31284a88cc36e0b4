#ifndef DUALFRAME_SIMULATION_HPP
#define DUALFRAME_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualframe/calibration.hpp"
#include "dualframe/rng.hpp"
#include "dualframe/survey_data.hpp"
#include "dualframe/variance.hpp"

namespace dualframe {

enum class Overlap { small, large, medium };
enum class SampleSize { small, large };

Overlap overlap_from_string(const std::string& s);
const char* to_string(Overlap o);

// Synthetic two-frame population recipe. The response is normal; two
// frame-level auxiliaries and the frame-B size measure are noisy linear
// transforms of it. Domain assignment depends on the overlap scenario.
struct ScenarioConfig {
  Overlap overlap = Overlap::small;
  int N = 2350;
  double y_mean = 5000, y_sd = 500;
  // x_A = (y - e)/0.5, e ~ N(500, 300); x_B = (y - 1 - e)/1.2, e ~ N(700, 500)
  double xA_err_mean = 500, xA_err_sd = 300, xA_scale = 0.5;
  double xB_err_mean = 700, xB_err_sd = 500, xB_scale = 1.2, xB_offset = 1;
  // z = y - e, e ~ N(300, 200); non-positive draws are redrawn
  double z_err_mean = 300, z_err_sd = 200;

  SampleSize na = SampleSize::small;  // (15,20,15,20,15,20) or doubled
  SampleSize nb = SampleSize::small;  // 135 or 270

  int replicates = 1000;
  std::uint64_t seed = 1;
  int max_threads = 0;  // 0 = hardware concurrency; results never depend on it
  // Hit the reference realized domain sizes exactly; otherwise draw a fresh
  // trinomial assignment (stratum sizes must then still match N_A, so a
  // fresh-mode run usually needs strata_override).
  bool fixed_sizes = true;
  // Replaces the per-scenario stratum sizes when set; must sum to N_A.
  std::optional<std::vector<int>> strata_override;

  std::vector<int> frame_a_strata_sizes() const;  // per-scenario N_Ah
  std::vector<int> frame_a_sample_sizes() const;  // per-stratum n_Ah
  int frame_b_sample_size() const;
  // Fixed (N_a, N_ab, N_b) for the scenario.
  std::vector<int> fixed_domain_sizes() const;
};

struct PopulationUnit {
  std::string id;
  double y = 0, xA = 0, xB = 0, z = 0;
  DomainLabel domain = DomainLabel::a;  // a, ab, or b (population-level)
  int stratum_A = -1;                   // 0-based, frame-A units only
};

struct Population {
  std::vector<PopulationUnit> units;
  std::vector<int> strata_sizes;  // frame-A stratum sizes
  double Y = 0;                   // true total of y
  FrameMeta meta;                 // sizes, strata, numeric totals for y/xA/xB/z

  double total(const std::string& name) const;
  double correlation(const std::string& a, const std::string& b) const;
};

Population generate_population(const ScenarioConfig& config, std::uint64_t seed);

// Stratified SRSWOR from frame A: n_h units per stratum, d_A = N_h/n_h.
std::vector<std::size_t> draw_stratified_srswor(const Population& pop,
                                                const std::vector<int>& n_h, Rng& rng);

// First-order inclusion probabilities of the size-biased-first-draw
// without-replacement scheme: pi_k = (n-1)/(N-1) + (z_k/Z)(N-n)/(N-1).
std::vector<double> midzuno_inclusion_probabilities(std::span<const double> z, int n);

// One draw: first unit with probability z_k/Z, the remaining n-1 by SRSWOR.
// Returns indices into z.
std::vector<std::size_t> draw_midzuno(std::span<const double> z, int n, Rng& rng);

// Assembles a DualFrameSample (variables y, xA, xB, z) from one draw in
// each frame. Overlap units carry both design weights.
DualFrameSample draw_dual_frame_sample(const Population& pop,
                                       const ScenarioConfig& config, Rng& rng);

// --- Monte Carlo harness --------------------------------------------------

enum class EstimatorKind { sf, hartley, sfrr, cal };

// One estimator row of the report. aux_case 1..4 selects the constraint
// builder; case 1 is distance-free. restricted appends the common
// overlap-mean constraint (dual approach, cases 1 and 3).
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::cal;
  Approach approach = Approach::dual;
  Distance distance = Distance::euclidean;
  int aux_case = 1;
  bool restricted = false;
  bool with_variance = false;  // track linearization + jackknife-fpc CIs

  std::string name() const;
};

// The default table layout: SF, HAR, SFRR, CAL rows for the requested
// distances and aux cases under both approaches.
std::vector<EstimatorSpec> default_estimator_set(const std::vector<Distance>& distances,
                                                 const std::vector<int>& aux_cases,
                                                 bool restricted_variants = false);

struct CiStats {
  double avg_length = 0;
  double coverage_pct = 0;
  double inferior_pct = 0;  // true value below the interval
  double superior_pct = 0;  // true value above the interval
};

struct McRow {
  EstimatorSpec spec;
  double rb_pct = 0;       // mean(estimate - Y)/Y * 100
  double rmse100_pct = 0;  // mean((estimate - Y)^2)/Y^2 * 100 * 100
  std::optional<double> ge_pct;  // efficiency gain vs the SF baseline
  int failures = 0;
  int negative_weight_reps = 0;
  std::optional<CiStats> linearization, jackknife_fpc;
};

struct MonteCarloReport {
  ScenarioConfig config;
  double Y = 0;
  double realized_NA = 0, realized_NB = 0, realized_Nab = 0;
  double corr_xA_y = 0, corr_xB_y = 0, corr_z_y = 0;
  int replicates = 0;
  std::vector<McRow> rows;
};

// Generates the population once, draws `config.replicates` independent
// dual-frame samples, evaluates every estimator on each, and aggregates
// the report metrics. Replicate RNG streams are derived from the master
// seed by index, so results do not depend on evaluation order. Replicates
// where an estimator fails are dropped from that row; more than 1%
// failures on any row aborts the run.
MonteCarloReport run_monte_carlo(const ScenarioConfig& config,
                                 const std::vector<EstimatorSpec>& estimators);

std::string render_report_table(const MonteCarloReport& report);
std::string render_report_csv(const MonteCarloReport& report);

}  // namespace dualframe

#endif  // DUALFRAME_SIMULATION_HPP
