#ifndef DUALFRAME_VARIANCE_HPP
#define DUALFRAME_VARIANCE_HPP

#include <functional>
#include <map>
#include <span>
#include <string>

#include "dualframe/calibration.hpp"
#include "dualframe/survey_data.hpp"

namespace dualframe {

enum class DesignKind { srswor, stratified_srswor, unequal_hajek_deville };

// Description of the sampling design within one frame, as needed by the
// analytic variance estimators. srswor needs the frame size; stratified
// needs per-stratum sizes; the unequal-probability case works from the
// realized inclusion probabilities 1/d alone.
struct FrameDesign {
  DesignKind kind = DesignKind::srswor;
  double N = 0;                             // srswor
  std::map<std::string, double> stratum_N;  // stratified

  static FrameDesign Srswor(double N);
  static FrameDesign Stratified(std::map<std::string, double> stratum_N);
  static FrameDesign UnequalHajekDeville();
};

struct DesignPair {
  FrameDesign A, B;
};

enum class VarianceMethod { linearization, jackknife, jackknife_fpc };

const char* to_string(VarianceMethod m);
VarianceMethod variance_method_from_string(const std::string& s);

struct VarianceEstimate {
  double point = 0;
  double variance = 0;
  VarianceMethod method = VarianceMethod::linearization;
  double ci_level = 0.95;
  double lb = 0, ub = 0, length = 0;
};

// Estimated design variance of the frame total sum_{k in frame sample} d_k u_k.
// `values` holds u_k for the frame's units, in sample order.
//   srswor:      N^2 (1 - n/N) s^2 / n
//   stratified:  the per-stratum sum of the above
//   unequal:     Hajek-Deville approximation from first-order probabilities
// Throws when any contributing stratum has fewer than two units.
double design_variance_ht(const DualFrameSample& sample, Frame frame,
                          std::span<const double> values, const FrameDesign& design);

// Residual-technique variance of a calibration estimator: fit the response
// on the constraint columns under the base weights, then estimate the two
// frame components of the variance of the weighted residual total.
VarianceEstimate linearization_variance(const DualFrameSample& sample,
                                        const WeightVector& base, const AuxSpec& spec,
                                        const CalibrationResult& result,
                                        const std::string& variable,
                                        const DesignPair& designs,
                                        double ci_level = 0.95);

// Delete-one jackknife. The estimator closure is re-evaluated on a sample
// where the dropped unit's frame weight is zeroed and its stratum mates are
// rescaled by n_h/(n_h - 1); anything the closure computes (including a
// full calibration) is therefore re-solved per deletion. With fpc, the
// pseudo-values are shrunk by sqrt(1 - mean inclusion probability) per
// frame (per stratum under a stratified design) before the squared sums.
VarianceEstimate jackknife_variance(
    const DualFrameSample& sample,
    const std::function<double(const DualFrameSample&)>& estimator,
    const DesignPair& designs, bool fpc, double ci_level = 0.95);

struct Interval {
  double lb = 0, ub = 0, length = 0;
};

// Normal-theory interval: point +/- z_{(1+level)/2} sqrt(variance).
Interval confidence_interval(double point, double variance, double level);

// Standard normal quantile (Wichura's AS 241 rational approximation).
double normal_quantile(double p);

}  // namespace dualframe

#endif  // DUALFRAME_VARIANCE_HPP
