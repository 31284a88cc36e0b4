#ifndef DUALFRAME_CALIBRATION_HPP
#define DUALFRAME_CALIBRATION_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualframe/estimators.hpp"
#include "dualframe/survey_data.hpp"

namespace dualframe {

enum class Distance { euclidean, raking, logit, kullback_leibler };

Distance distance_from_string(const std::string& s);
const char* to_string(Distance d);

// Calibration function F mapping the score u = x*lambda to the weight
// ratio w/d, together with its derivative and admissible score range.
//   euclidean:         F(u) = 1 + u               (ratio unbounded)
//   raking:            F(u) = exp(u)              (ratio > 0)
//   logit(L, U):       bounded ratio in (L, U)
//   kullback_leibler:  F(u) = 1/(1 - u), u < 1    (ratio > 0)
struct DistanceKind {
  Distance kind = Distance::euclidean;
  double logit_L = 0.3;
  double logit_U = 3.0;

  double F(double u) const;
  double F_prime(double u) const;
  // Antiderivative of F; the solver's line-search objective is the convex
  // dual sum d*Psi(x lambda) - lambda't.
  double Psi(double u) const;
  bool in_domain(double u) const;
};

enum class AuxCase {
  case1,            // domain sizes all known
  case2,            // frame sizes known, overlap unknown
  case3,            // domain sizes plus per-frame numeric totals
  case4,            // frame sizes plus per-frame numeric totals
  groups_complete,  // group-by-domain cell counts known
  groups_margins,   // group-by-frame margins known
  custom,
  overlap_mean,     // case1/case3 with the common-overlap-mean restriction
};

// Constraint system: p per-unit columns and the vector of known totals
// they must reproduce under the calibrated weights.
struct AuxSpec {
  std::vector<std::string> column_names;
  std::vector<double> targets;
  // Fills the p row entries for one unit.
  std::function<void(const UnitRecord&, std::span<double>)> fill_row;
  AuxCase tag = AuxCase::custom;
  std::string variable_tag;  // set when the spec is variable-specific

  std::size_t size() const { return targets.size(); }
  std::vector<double> row(const UnitRecord& u) const;
};

struct CalibrateOptions {
  double tolerance = 1e-8;  // max relative constraint residual
  int max_iterations = 50;
  double step_floor = 0x1p-20;  // smallest Newton damping factor
};

struct CalibrationResult {
  WeightVector weights;        // tag calibrated
  std::vector<double> lambda;  // one multiplier per constraint column
  int iterations = 0;
  double max_constraint_residual = 0;  // relative, denominator max(1, |t|)
  bool converged = false;
  int negative_weights = 0;  // count, possible under the euclidean distance
};

// --- constraint builders -------------------------------------------------

// Domain indicator columns. Dual approach: delta(a), delta(ab), delta(ba),
// delta(b) with targets (N_a, eta*N_ab, (1-eta)*N_ab, N_b). Single
// approach: the overlap columns merge, targets (N_a, N_ab, N_b).
AuxSpec build_aux_case1(const FrameMeta& meta, double eta, Approach approach);

// Frame margins: delta(a)+delta(ab)+delta(ba) and delta(b)+delta(ab)+delta(ba),
// targets (N_A, N_B). Identical under both approaches.
AuxSpec build_aux_case2(const FrameMeta& meta);

// case1 columns plus frame-gated numeric variables with targets X_A, X_B.
AuxSpec build_aux_case3(const FrameMeta& meta, double eta, Approach approach,
                        const std::string& x_a, const std::string& x_b);

// case2 columns plus frame-gated numeric variables; overlap size unknown.
AuxSpec build_aux_case4(const FrameMeta& meta, const std::string& x_a,
                        const std::string& x_b);

// Domain sizes plus one frame-A numeric total.
AuxSpec build_aux_xa(const FrameMeta& meta, double eta, Approach approach,
                     const std::string& x_a);

// Frame sizes plus one numeric total per frame (distinct variables).
AuxSpec build_aux_xa_zb(const FrameMeta& meta, const std::string& x_a,
                        const std::string& z_b);

// Domain sizes plus one whole-population numeric total.
AuxSpec build_aux_x_whole(const FrameMeta& meta, double eta, const std::string& x);

// Group-level post-stratification on the values of a per-unit group
// variable. complete: one column per (domain, group) cell; margins: one
// per (frame, group).
AuxSpec build_group_poststrat(const FrameMeta& meta, double eta, bool complete,
                              Approach approach, const std::string& group_var);

// Appends the column forcing the two calibrated overlap means of the named
// response to coincide:
//   y*delta(ab)/(eta N_ab) - y*delta(ba)/((1-eta) N_ab), target 0.
// Meaningful on top of case1/case3 specs; requires eta strictly inside (0,1).
AuxSpec with_overlap_mean_constraint(AuxSpec spec, double eta,
                                     const FrameMeta& meta,
                                     const std::string& y_name);

// --- solving -------------------------------------------------------------

// Damped Newton iteration on the dual variable lambda, started at zero,
// returning weights w_k = d_k F(x_k lambda) that reproduce the targets.
// Columns with target 0 and same-signed entries force the affected units
// to weight zero and are dropped before solving. Units whose base weight
// is exactly zero are carried through with weight zero.
CalibrationResult calibrate(const DualFrameSample& sample, const WeightVector& base,
                            const AuxSpec& spec, const DistanceKind& distance,
                            const CalibrateOptions& opts = {});

// Ratio-adjusted weights for complete post-stratification, the solution the
// solver must reach for every distance function: d_A*N_a/Na_hat on s_a, and
// so on per domain (per group cell when group_var is given; merged overlap
// cell under the single approach).
WeightVector poststrat_closed_form(const DualFrameSample& sample, const FrameMeta& meta,
                                   double eta, Approach approach,
                                   const std::optional<std::string>& group_var = {});

// Closed form of the euclidean frame-margin calibration of the overlap size:
//   Nab_hat_w = Nab_hat_H * (Na_hat N_B + Nb_hat N_A - Na_hat Nb_hat)
//             / (Na_hat NB_hat + Nb_hat NA_hat - Na_hat Nb_hat),
// where Nab_hat_H = eta*Nab_hat + (1-eta)*Nba_hat and NA_hat, NB_hat are the
// corresponding estimated frame sizes.
double nab_calibrated(const DualFrameSample& sample, const FrameMeta& meta, double eta);

struct GregResult {
  double estimate = 0;
  std::vector<double> beta;
};

// Regression form of the euclidean calibration estimator:
//   beta = (sum d x^T x)^-1 sum d x^T y,  estimate = Y_base + (t - t_hat) beta.
GregResult greg_estimate(const DualFrameSample& sample, const WeightVector& base,
                         const AuxSpec& spec, const std::string& variable);

struct CombinedRegressionResult {
  double estimate = 0;
  double beta_A = 0;
};

// Combined-regression form of the euclidean calibration on domain sizes
// plus one frame-A numeric total: Y_hajek + (X_A - XA_hajek) * beta_A with
// beta_A a ratio of eta-pooled within-domain covariances to variances.
CombinedRegressionResult xa_combined_regression(const DualFrameSample& sample,
                                                const FrameMeta& meta, double eta,
                                                const std::string& x_a,
                                                const std::string& variable);

}  // namespace dualframe

#endif  // DUALFRAME_CALIBRATION_HPP
