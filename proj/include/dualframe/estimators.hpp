#ifndef DUALFRAME_ESTIMATORS_HPP
#define DUALFRAME_ESTIMATORS_HPP

#include <optional>
#include <string>
#include <vector>

#include "dualframe/survey_data.hpp"

namespace dualframe {

struct DesignPair;  // variance.hpp

enum class WeightTag { hartley, single_frame, calibrated };

// A full set of per-unit weights, aligned index-for-index with the units
// of the sample it was built from.
struct WeightVector {
  std::vector<double> values;
  WeightTag tag = WeightTag::hartley;
  std::optional<double> eta;  // set for hartley weights

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

// Composite weights d = d_A on s_a, eta*d_A on s_ab, (1-eta)*d_B on s_ba,
// d_B on s_b. Weighted totals under these weights are the eta-combination
// estimator of a population total.
WeightVector hartley_weights(const DualFrameSample& sample, double eta);

// Multiplicity-adjusted pooled weights: d_A on s_a, (1/d_A + 1/d_B)^-1 on
// the overlap, d_B on s_b. Requires both weights on every overlap unit.
WeightVector single_frame_weights(const DualFrameSample& sample);

// Sum of w_k * value_k. Units with weight exactly zero may lack the variable.
double weighted_total(const DualFrameSample& sample, const WeightVector& weights,
                      const std::string& variable);

struct DomainSizeEstimates {
  double Na = 0;   // sum of d_A over s_a
  double Nab = 0;  // sum of d_A over s_ab
  double Nba = 0;  // sum of d_B over s_ba
  double Nb = 0;   // sum of d_B over s_b
  // Multiplicity-weighted overlap count; present only when every overlap
  // unit carries both design weights.
  std::optional<double> NabS;
  // Design variances of Nab / Nba, filled when designs are supplied.
  std::optional<double> v_Nab, v_Nba;
};

DomainSizeEstimates domain_size_estimates(const DualFrameSample& sample);
// Same, plus design-variance estimates of the overlap counts (the inputs
// to estimate_eta and nab_pml_combination).
DomainSizeEstimates domain_size_estimates(const DualFrameSample& sample,
                                          const DesignPair& designs);

// Variance-balancing mixing weight
//   eta = N_a N_B v(Nba) / [ N_b N_A v(Nab) + N_a N_B v(Nba) ].
// Throws when both variance estimates are zero.
double estimate_eta(const FrameMeta& meta, const DomainSizeEstimates& sizes);

// Convex combination of the two overlap-count estimators weighted by
// inverse variance: theta*Nab + (1-theta)*Nba, theta = v(Nba)/(v(Nab)+v(Nba)).
double nab_pml_combination(const DomainSizeEstimates& sizes);

// Raking-ratio overlap size: total of the single-frame calibration weights
// over the overlap after raking the (a, overlap, b) cells to the frame
// margins (N_A, N_B).
double sfrr_nab(const DualFrameSample& sample, const FrameMeta& meta);

// Smallest root of the raking fixed-point quadratic
//   NabS t^2 - [NabS (N_A + N_B) + Na*Nb] t + NabS N_A N_B = 0,
// the closed form of the same adjustment; kept as a cross-check.
double sfrr_nab_quadratic(const DomainSizeEstimates& sizes, const FrameMeta& meta);

}  // namespace dualframe

#endif  // DUALFRAME_ESTIMATORS_HPP
