#include "dualframe/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dualframe {

FrameDesign FrameDesign::Srswor(double N) {
  FrameDesign d;
  d.kind = DesignKind::srswor;
  d.N = N;
  return d;
}

FrameDesign FrameDesign::Stratified(std::map<std::string, double> stratum_N) {
  FrameDesign d;
  d.kind = DesignKind::stratified_srswor;
  d.stratum_N = std::move(stratum_N);
  return d;
}

FrameDesign FrameDesign::UnequalHajekDeville() {
  FrameDesign d;
  d.kind = DesignKind::unequal_hajek_deville;
  return d;
}

const char* to_string(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::linearization: return "linearization";
    case VarianceMethod::jackknife: return "jackknife";
    case VarianceMethod::jackknife_fpc: return "jackknife-fpc";
  }
  return "?";
}

VarianceMethod variance_method_from_string(const std::string& s) {
  if (s == "linearization" || s == "lin") return VarianceMethod::linearization;
  if (s == "jackknife" || s == "jack") return VarianceMethod::jackknife;
  if (s == "jackknife-fpc" || s == "jackknife_fpc" || s == "jack-fpc")
    return VarianceMethod::jackknife_fpc;
  throw ValidationError("unknown variance method '" + s + "'");
}

namespace {

double srswor_component(std::span<const double> values, double N, const std::string& label) {
  const std::size_t n = values.size();
  if (n < 2)
    throw ValidationError("variance undefined: fewer than two units in " + label);
  if (static_cast<double>(n) > N)
    throw ValidationError("sample larger than population in " + label);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s2 = ss / (n - 1);
  const double f = static_cast<double>(n) / N;
  return N * N * (1.0 - f) * s2 / static_cast<double>(n);
}

}  // namespace

double design_variance_ht(const DualFrameSample& sample, Frame frame,
                          std::span<const double> values, const FrameDesign& design) {
  const std::vector<std::size_t> idx = sample.frame_indices(frame);
  if (values.size() != idx.size())
    throw ValidationError("value vector does not match frame sample size");

  switch (design.kind) {
    case DesignKind::srswor:
      return srswor_component(values, design.N,
                              frame == Frame::A ? "frame A" : "frame B");

    case DesignKind::stratified_srswor: {
      std::map<std::string, std::vector<double>> by_stratum;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const UnitRecord& u = sample.units[idx[k]];
        const auto& sid = frame == Frame::A ? u.stratum_A : u.stratum_B;
        if (!sid)
          throw ValidationError("unit " + u.id + " lacks a stratum id");
        by_stratum[*sid].push_back(values[k]);
      }
      double total = 0;
      for (const auto& [sid, vals] : by_stratum) {
        auto it = design.stratum_N.find(sid);
        if (it == design.stratum_N.end())
          throw ValidationError("stratum '" + sid + "' missing from design");
        total += srswor_component(vals, it->second, "stratum '" + sid + "'");
      }
      return total;
    }

    case DesignKind::unequal_hajek_deville: {
      const std::size_t n = idx.size();
      if (n < 2)
        throw ValidationError("variance undefined: fewer than two units in frame");
      // Deville's variance approximation from first-order probabilities:
      // v = sum (1-pi)(y/pi - B)^2 / (1 - sum a^2), a_k = (1-pi_k)/sum(1-pi).
      std::vector<double> pi(n), check(n);
      double one_minus_sum = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const UnitRecord& u = sample.units[idx[k]];
        const double d = frame == Frame::A ? u.d_A.value() : u.d_B.value();
        pi[k] = 1.0 / d;
        check[k] = values[k] * d;
        one_minus_sum += 1.0 - pi[k];
      }
      if (one_minus_sum <= 0) return 0.0;  // census
      double B = 0, sum_a2 = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = (1.0 - pi[k]) / one_minus_sum;
        B += a * check[k];
        sum_a2 += a * a;
      }
      double v = 0;
      for (std::size_t k = 0; k < n; ++k)
        v += (1.0 - pi[k]) * (check[k] - B) * (check[k] - B);
      return v / (1.0 - sum_a2);
    }
  }
  return 0;
}

VarianceEstimate linearization_variance(const DualFrameSample& sample,
                                        const WeightVector& base, const AuxSpec& spec,
                                        const CalibrationResult& result,
                                        const std::string& variable,
                                        const DesignPair& designs, double ci_level) {
  const GregResult fit = greg_estimate(sample, base, spec, variable);

  // Frame component values: the weighted residual rescaled to the frame's
  // own design weight, u_k = (d_base/d_frame) * e_k.
  auto frame_values = [&](Frame frame) {
    std::vector<double> vals;
    std::vector<double> rowbuf(spec.size());
    for (std::size_t i = 0; i < sample.units.size(); ++i) {
      const UnitRecord& u = sample.units[i];
      const bool in = frame == Frame::A ? in_frame_a(u.domain) : in_frame_b(u.domain);
      if (!in) continue;
      std::fill(rowbuf.begin(), rowbuf.end(), 0.0);
      spec.fill_row(u, rowbuf);
      double xb = 0;
      for (std::size_t j = 0; j < spec.size(); ++j) xb += rowbuf[j] * fit.beta[j];
      const double e = u.value(variable) - xb;
      const double d_frame = frame == Frame::A ? u.d_A.value() : u.d_B.value();
      vals.push_back(base[i] / d_frame * e);
    }
    return vals;
  };

  const std::vector<double> va = frame_values(Frame::A);
  const std::vector<double> vb = frame_values(Frame::B);

  VarianceEstimate out;
  out.method = VarianceMethod::linearization;
  out.point = weighted_total(sample, result.weights, variable);
  out.variance = design_variance_ht(sample, Frame::A, va, designs.A) +
                 design_variance_ht(sample, Frame::B, vb, designs.B);
  out.ci_level = ci_level;
  const Interval ci = confidence_interval(out.point, out.variance, ci_level);
  out.lb = ci.lb;
  out.ub = ci.ub;
  out.length = ci.length;
  return out;
}

namespace {

struct DeletionGroup {
  std::vector<std::size_t> members;  // indices into sample.units
  double pi_bar = 0;                 // realized mean inclusion probability
};

// One group per stratum under a stratified design, otherwise the frame.
std::vector<DeletionGroup> deletion_groups(const DualFrameSample& sample, Frame frame,
                                           const FrameDesign& design) {
  std::map<std::string, DeletionGroup> groups;
  const bool stratified = design.kind == DesignKind::stratified_srswor;
  for (std::size_t i = 0; i < sample.units.size(); ++i) {
    const UnitRecord& u = sample.units[i];
    const bool in = frame == Frame::A ? in_frame_a(u.domain) : in_frame_b(u.domain);
    if (!in) continue;
    std::string key;
    if (stratified) {
      const auto& sid = frame == Frame::A ? u.stratum_A : u.stratum_B;
      if (!sid) throw ValidationError("unit " + u.id + " lacks a stratum id");
      key = *sid;
    }
    groups[key].members.push_back(i);
  }
  std::vector<DeletionGroup> out;
  for (auto& [key, g] : groups) {
    if (g.members.size() < 2)
      throw ValidationError("jackknife needs at least two units per stratum (" +
                            (key.empty() ? std::string("frame") : key) + ")");
    double sum_pi = 0;
    for (std::size_t i : g.members) {
      const UnitRecord& u = sample.units[i];
      sum_pi += 1.0 / (frame == Frame::A ? u.d_A.value() : u.d_B.value());
    }
    g.pi_bar = sum_pi / static_cast<double>(g.members.size());
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

VarianceEstimate jackknife_variance(
    const DualFrameSample& sample,
    const std::function<double(const DualFrameSample&)>& estimator,
    const DesignPair& designs, bool fpc, double ci_level) {
  const double point = estimator(sample);

  // Working copy: deletions zero the dropped unit's frame weight and scale
  // its stratum mates by n_h/(n_h-1), then the estimator is re-evaluated.
  DualFrameSample work = sample;

  double variance = 0;
  for (Frame frame : {Frame::A, Frame::B}) {
    const FrameDesign& design = frame == Frame::A ? designs.A : designs.B;
    for (const DeletionGroup& g : deletion_groups(sample, frame, design)) {
      const std::size_t nh = g.members.size();
      const double scale = static_cast<double>(nh) / static_cast<double>(nh - 1);
      std::vector<double> pseudo;
      pseudo.reserve(nh);
      for (std::size_t del : g.members) {
        for (std::size_t i : g.members) {
          auto& d = frame == Frame::A ? work.units[i].d_A : work.units[i].d_B;
          *d = i == del ? 0.0 : *d * scale;
        }
        double value;
        try {
          value = estimator(work);
        } catch (const std::exception& e) {
          // restore before propagating
          for (std::size_t i : g.members) {
            auto& d = frame == Frame::A ? work.units[i].d_A : work.units[i].d_B;
            const auto& orig = frame == Frame::A ? sample.units[i].d_A : sample.units[i].d_B;
            *d = *orig;
          }
          throw ConvergenceError("jackknife re-estimation failed after dropping unit " +
                                 sample.units[del].id + ": " + e.what());
        }
        for (std::size_t i : g.members) {
          auto& d = frame == Frame::A ? work.units[i].d_A : work.units[i].d_B;
          const auto& orig = frame == Frame::A ? sample.units[i].d_A : sample.units[i].d_B;
          *d = *orig;
        }
        pseudo.push_back(value);
      }
      if (fpc) {
        const double shrink = std::sqrt(std::max(0.0, 1.0 - g.pi_bar));
        for (double& v : pseudo) v = point + shrink * (v - point);
      }
      const double mean = std::accumulate(pseudo.begin(), pseudo.end(), 0.0) /
                          static_cast<double>(nh);
      double ss = 0;
      for (double v : pseudo) ss += (v - mean) * (v - mean);
      variance += (static_cast<double>(nh) - 1.0) / static_cast<double>(nh) * ss;
    }
  }

  VarianceEstimate out;
  out.method = fpc ? VarianceMethod::jackknife_fpc : VarianceMethod::jackknife;
  out.point = point;
  out.variance = variance;
  out.ci_level = ci_level;
  const Interval ci = confidence_interval(point, variance, ci_level);
  out.lb = ci.lb;
  out.ub = ci.ub;
  out.length = ci.length;
  return out;
}

Interval confidence_interval(double point, double variance, double level) {
  if (variance < 0) throw ValidationError("negative variance");
  if (!(level > 0 && level < 1)) throw ValidationError("ci level must be in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(variance);
  return Interval{point - half, point + half, 2.0 * half};
}

// Wichura (1988), algorithm AS 241, double precision branch.
double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw ValidationError("quantile argument must be in (0, 1)");
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  r = q < 0 ? p : 1 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

}  // namespace dualframe
