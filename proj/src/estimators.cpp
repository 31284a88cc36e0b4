#include "dualframe/estimators.hpp"

#include <cmath>

#include "dualframe/calibration.hpp"
#include "dualframe/variance.hpp"

namespace dualframe {

WeightVector hartley_weights(const DualFrameSample& sample, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ValidationError("eta must lie in [0, 1]");
  WeightVector w;
  w.tag = WeightTag::hartley;
  w.eta = eta;
  w.values.reserve(sample.units.size());
  for (const auto& u : sample.units) {
    switch (u.domain) {
      case DomainLabel::a:
        if (!u.d_A) throw ValidationError("unit " + u.id + ": missing required weight d_A");
        w.values.push_back(*u.d_A);
        break;
      case DomainLabel::ab:
        if (!u.d_A) throw ValidationError("unit " + u.id + ": missing required weight d_A");
        w.values.push_back(eta * *u.d_A);
        break;
      case DomainLabel::ba:
        if (!u.d_B) throw ValidationError("unit " + u.id + ": missing required weight d_B");
        w.values.push_back((1.0 - eta) * *u.d_B);
        break;
      case DomainLabel::b:
        if (!u.d_B) throw ValidationError("unit " + u.id + ": missing required weight d_B");
        w.values.push_back(*u.d_B);
        break;
    }
  }
  return w;
}

WeightVector single_frame_weights(const DualFrameSample& sample) {
  WeightVector w;
  w.tag = WeightTag::single_frame;
  w.values.reserve(sample.units.size());
  for (const auto& u : sample.units) {
    if (in_overlap(u.domain)) {
      if (!u.d_A || !u.d_B)
        throw ValidationError("overlap unit " + u.id +
                              " needs both d_A and d_B for single-frame weights");
      w.values.push_back(1.0 / (1.0 / *u.d_A + 1.0 / *u.d_B));
    } else if (u.domain == DomainLabel::a) {
      if (!u.d_A) throw ValidationError("unit " + u.id + ": missing required weight d_A");
      w.values.push_back(*u.d_A);
    } else {
      if (!u.d_B) throw ValidationError("unit " + u.id + ": missing required weight d_B");
      w.values.push_back(*u.d_B);
    }
  }
  return w;
}

double weighted_total(const DualFrameSample& sample, const WeightVector& weights,
                      const std::string& variable) {
  if (weights.size() != sample.units.size())
    throw ValidationError("weight vector does not match sample");
  double total = 0;
  for (std::size_t i = 0; i < sample.units.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;  // deleted or zero-mass units may lack the variable
    total += w * sample.units[i].value(variable);
  }
  return total;
}

DomainSizeEstimates domain_size_estimates(const DualFrameSample& sample) {
  DomainSizeEstimates e;
  bool overlap_complete = true;
  double nabs = 0;
  for (const auto& u : sample.units) {
    switch (u.domain) {
      case DomainLabel::a: e.Na += u.d_A.value(); break;
      case DomainLabel::ab: e.Nab += u.d_A.value(); break;
      case DomainLabel::ba: e.Nba += u.d_B.value(); break;
      case DomainLabel::b: e.Nb += u.d_B.value(); break;
    }
    if (in_overlap(u.domain)) {
      if (u.d_A && u.d_B)
        nabs += 1.0 / (1.0 / *u.d_A + 1.0 / *u.d_B);
      else
        overlap_complete = false;
    }
  }
  if (overlap_complete) e.NabS = nabs;
  return e;
}

DomainSizeEstimates domain_size_estimates(const DualFrameSample& sample,
                                          const DesignPair& designs) {
  DomainSizeEstimates e = domain_size_estimates(sample);
  // Variance of the overlap-count estimators: frame-wise design variance of
  // the weighted domain indicator.
  std::vector<double> vals;
  for (const auto& u : sample.units)
    if (in_frame_a(u.domain)) vals.push_back(u.domain == DomainLabel::ab ? 1.0 : 0.0);
  e.v_Nab = design_variance_ht(sample, Frame::A, vals, designs.A);
  vals.clear();
  for (const auto& u : sample.units)
    if (in_frame_b(u.domain)) vals.push_back(u.domain == DomainLabel::ba ? 1.0 : 0.0);
  e.v_Nba = design_variance_ht(sample, Frame::B, vals, designs.B);
  return e;
}

double estimate_eta(const FrameMeta& meta, const DomainSizeEstimates& sizes) {
  if (!meta.sizes_known())
    throw ValidationError("estimate_eta requires N_A, N_B, N_ab known");
  if (!sizes.v_Nab || !sizes.v_Nba)
    throw ValidationError("estimate_eta requires variance estimates of Nab and Nba");
  const double va = *sizes.v_Nab, vb = *sizes.v_Nba;
  if (va == 0 && vb == 0) throw ValidationError("eta undefined: both variances zero");
  const double num = meta.N_a() * *meta.N_B * vb;
  const double den = meta.N_b() * *meta.N_A * va + num;
  return num / den;
}

double nab_pml_combination(const DomainSizeEstimates& sizes) {
  if (!sizes.v_Nab || !sizes.v_Nba)
    throw ValidationError("overlap combination requires both variance estimates");
  const double va = *sizes.v_Nab, vb = *sizes.v_Nba;
  if (va == 0 && vb == 0)
    throw ValidationError("overlap combination undefined: both variances zero");
  const double theta = vb / (va + vb);
  return theta * sizes.Nab + (1.0 - theta) * sizes.Nba;
}

double sfrr_nab(const DualFrameSample& sample, const FrameMeta& meta) {
  const WeightVector base = single_frame_weights(sample);
  const AuxSpec spec = build_aux_case2(meta);
  DistanceKind raking{Distance::raking};
  CalibrateOptions opts;
  opts.tolerance = 1e-12;
  opts.max_iterations = 100;
  const CalibrationResult res = calibrate(sample, base, spec, raking, opts);
  if (!res.converged)
    throw ConvergenceError("raking-ratio overlap calibration did not converge");
  double total = 0;
  for (std::size_t i = 0; i < sample.units.size(); ++i)
    if (in_overlap(sample.units[i].domain)) total += res.weights[i];
  return total;
}

double sfrr_nab_quadratic(const DomainSizeEstimates& sizes, const FrameMeta& meta) {
  if (!sizes.NabS)
    throw ValidationError("quadratic overlap estimator needs multiplicity weights");
  if (!meta.N_A || !meta.N_B)
    throw ValidationError("quadratic overlap estimator needs N_A and N_B");
  const double s = *sizes.NabS;
  const double a = s;
  const double b = -(s * (*meta.N_A + *meta.N_B) + sizes.Na * sizes.Nb);
  const double c = s * *meta.N_A * *meta.N_B;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) throw ConvergenceError("overlap quadratic has no real root");
  // Smaller root, evaluated in the cancellation-free form.
  const double q = -0.5 * (b - std::sqrt(disc));  // b < 0 here
  return c / q;
}

}  // namespace dualframe
