#include "dualframe/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace dualframe {

Overlap overlap_from_string(const std::string& s) {
  if (s == "small") return Overlap::small;
  if (s == "large") return Overlap::large;
  if (s == "medium") return Overlap::medium;
  throw ValidationError("unknown scenario '" + s + "'");
}

const char* to_string(Overlap o) {
  switch (o) {
    case Overlap::small: return "small";
    case Overlap::large: return "large";
    case Overlap::medium: return "medium";
  }
  return "?";
}

std::vector<int> ScenarioConfig::frame_a_strata_sizes() const {
  if (strata_override) return *strata_override;
  // Paired with scenarios by their sums (1309 / 1746 / 1790).
  switch (overlap) {
    case Overlap::small: return {535, 279, 78, 148, 101, 168};
    case Overlap::large: return {734, 377, 116, 187, 115, 217};
    case Overlap::medium: return {781, 375, 114, 186, 111, 223};
  }
  return {};
}

std::vector<int> ScenarioConfig::frame_a_sample_sizes() const {
  if (na == SampleSize::small) return {15, 20, 15, 20, 15, 20};
  return {30, 40, 30, 40, 30, 40};
}

int ScenarioConfig::frame_b_sample_size() const {
  return nb == SampleSize::small ? 135 : 270;
}

std::vector<int> ScenarioConfig::fixed_domain_sizes() const {
  switch (overlap) {
    case Overlap::small: return {1099, 210, 1041};   // N_A 1309, N_B 1251
    case Overlap::large: return {560, 1186, 604};    // N_A 1746, N_B 1790
    case Overlap::medium: return {1186, 604, 560};   // N_A 1790, N_B 1164
  }
  return {};
}

double Population::total(const std::string& name) const {
  double t = 0;
  for (const auto& u : units) {
    if (name == "y") t += u.y;
    else if (name == "xA") t += u.xA;
    else if (name == "xB") t += u.xB;
    else if (name == "z") t += u.z;
    else throw ValidationError("unknown population variable '" + name + "'");
  }
  return t;
}

double Population::correlation(const std::string& a, const std::string& b) const {
  auto get = [](const PopulationUnit& u, const std::string& n) {
    if (n == "y") return u.y;
    if (n == "xA") return u.xA;
    if (n == "xB") return u.xB;
    if (n == "z") return u.z;
    throw ValidationError("unknown population variable '" + n + "'");
  };
  const double n = static_cast<double>(units.size());
  double ma = 0, mb = 0;
  for (const auto& u : units) {
    ma += get(u, a);
    mb += get(u, b);
  }
  ma /= n;
  mb /= n;
  double saa = 0, sbb = 0, sab = 0;
  for (const auto& u : units) {
    const double da = get(u, a) - ma, db = get(u, b) - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  return sab / std::sqrt(saa * sbb);
}

Population generate_population(const ScenarioConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const int N = config.N;

  Population pop;
  pop.units.resize(N);
  for (int i = 0; i < N; ++i) {
    pop.units[i].id = "u" + std::to_string(i + 1);
    pop.units[i].y = rng.normal(config.y_mean, config.y_sd);
  }

  // Domain assignment. Codes: 0 -> a, 1 -> ab, 2 -> b.
  std::vector<int> code(N);
  if (config.fixed_sizes) {
    const std::vector<int> sizes = config.fixed_domain_sizes();  // (a, ab, b)
    int pos = 0;
    for (int d = 0; d < 3; ++d)
      for (int c = 0; c < sizes[d]; ++c) code[pos++] = d == 0 ? 0 : d == 1 ? 1 : 2;
    // Random assignment without replacement: shuffle the code vector.
    for (int i = N - 1; i > 0; --i)
      std::swap(code[i], code[rng.uniform_below(static_cast<std::uint64_t>(i + 1))]);
  } else {
    const double prob = config.overlap == Overlap::small ? 0.3 : 0.5;
    for (int i = 0; i < N; ++i) {
      int g = 0;
      g += rng.uniform() < prob ? 1 : 0;
      g += rng.uniform() < prob ? 1 : 0;
      switch (config.overlap) {
        case Overlap::small:  // 0 -> a, 1 -> b, 2 -> ab
          code[i] = g == 0 ? 0 : g == 1 ? 2 : 1;
          break;
        case Overlap::large:  // 0 -> a, 1 -> ab, 2 -> b
          code[i] = g == 0 ? 0 : g == 1 ? 1 : 2;
          break;
        case Overlap::medium:  // 0 -> b, 1 -> a, 2 -> ab
          code[i] = g == 0 ? 2 : g == 1 ? 0 : 1;
          break;
      }
    }
  }
  for (int i = 0; i < N; ++i)
    pop.units[i].domain = code[i] == 0   ? DomainLabel::a
                          : code[i] == 1 ? DomainLabel::ab
                                         : DomainLabel::b;

  for (auto& u : pop.units)
    u.xA = (u.y - rng.normal(config.xA_err_mean, config.xA_err_sd)) / config.xA_scale;
  for (auto& u : pop.units)
    u.xB = (u.y - config.xB_offset - rng.normal(config.xB_err_mean, config.xB_err_sd)) /
           config.xB_scale;
  for (auto& u : pop.units) {
    do {
      u.z = u.y - rng.normal(config.z_err_mean, config.z_err_sd);
    } while (!(u.z > 0));
  }

  // Frame-A strata: shuffle the frame-A units, slice into the fixed sizes.
  std::vector<int> frame_a;
  for (int i = 0; i < N; ++i)
    if (code[i] != 2) frame_a.push_back(i);
  pop.strata_sizes = config.frame_a_strata_sizes();
  const int NA = std::accumulate(pop.strata_sizes.begin(), pop.strata_sizes.end(), 0);
  if (NA != static_cast<int>(frame_a.size())) {
    std::ostringstream msg;
    msg << "stratum sizes sum to " << NA << " but realized N_A is " << frame_a.size();
    throw ValidationError(msg.str());
  }
  for (int i = static_cast<int>(frame_a.size()) - 1; i > 0; --i)
    std::swap(frame_a[i], frame_a[rng.uniform_below(static_cast<std::uint64_t>(i + 1))]);
  int pos = 0;
  for (std::size_t h = 0; h < pop.strata_sizes.size(); ++h)
    for (int c = 0; c < pop.strata_sizes[h]; ++c)
      pop.units[frame_a[pos++]].stratum_A = static_cast<int>(h);

  // Metadata: exact sizes and totals of this realized population.
  double Nab = 0, NB = 0;
  double XA = 0, XB = 0, X = 0, ZB = 0;
  for (const auto& u : pop.units) {
    pop.Y += u.y;
    X += u.xA;
    if (u.domain == DomainLabel::ab) Nab += 1;
    if (u.domain != DomainLabel::a) {
      NB += 1;
      XB += u.xB;
      ZB += u.z;
    }
    if (u.domain != DomainLabel::b) XA += u.xA;
  }
  pop.meta.N_A = static_cast<double>(NA);
  pop.meta.N_B = NB;
  pop.meta.N_ab = Nab;
  pop.meta.numeric_totals["xA"][FrameMeta::Scope::A] = XA;
  pop.meta.numeric_totals["xB"][FrameMeta::Scope::B] = XB;
  pop.meta.numeric_totals["xA"][FrameMeta::Scope::U] = X;
  pop.meta.numeric_totals["z"][FrameMeta::Scope::B] = ZB;
  for (std::size_t h = 0; h < pop.strata_sizes.size(); ++h)
    pop.meta.strata_A["h" + std::to_string(h + 1)] =
        static_cast<double>(pop.strata_sizes[h]);
  return pop;
}

std::vector<std::size_t> draw_stratified_srswor(const Population& pop,
                                                const std::vector<int>& n_h, Rng& rng) {
  std::vector<std::vector<std::size_t>> strata(pop.strata_sizes.size());
  for (std::size_t i = 0; i < pop.units.size(); ++i)
    if (pop.units[i].stratum_A >= 0) strata[pop.units[i].stratum_A].push_back(i);
  if (n_h.size() != strata.size())
    throw ValidationError("sample size vector does not match stratum count");

  std::vector<std::size_t> sample;
  for (std::size_t h = 0; h < strata.size(); ++h) {
    auto& ids = strata[h];
    const int nh = n_h[h];
    if (nh > static_cast<int>(ids.size()))
      throw ValidationError("stratum sample size exceeds stratum size");
    // Partial Fisher-Yates: the first nh entries are the draw.
    for (int j = 0; j < nh; ++j) {
      const std::size_t k =
          j + rng.uniform_below(static_cast<std::uint64_t>(ids.size() - j));
      std::swap(ids[j], ids[k]);
      sample.push_back(ids[j]);
    }
  }
  return sample;
}

std::vector<double> midzuno_inclusion_probabilities(std::span<const double> z, int n) {
  const std::size_t N = z.size();
  if (n < 1 || static_cast<std::size_t>(n) > N)
    throw ValidationError("sample size out of range");
  double Z = 0;
  for (double v : z) {
    if (!(v > 0)) throw ValidationError("size measure must be positive");
    Z += v;
  }
  std::vector<double> pi(N);
  const double base = (n - 1.0) / (N - 1.0);
  const double slope = (static_cast<double>(N) - n) / (N - 1.0);
  for (std::size_t k = 0; k < N; ++k) {
    pi[k] = base + z[k] / Z * slope;
    if (pi[k] > 1.0) throw ValidationError("size measure too skewed");
  }
  return pi;
}

std::vector<std::size_t> draw_midzuno(std::span<const double> z, int n, Rng& rng) {
  const std::size_t N = z.size();
  midzuno_inclusion_probabilities(z, n);  // validates z and n

  double Z = 0;
  for (double v : z) Z += v;

  // First draw proportional to size.
  double u = rng.uniform() * Z;
  std::size_t first = N - 1;
  for (std::size_t k = 0; k < N; ++k) {
    if (u < z[k]) {
      first = k;
      break;
    }
    u -= z[k];
  }

  std::vector<std::size_t> rest;
  rest.reserve(N - 1);
  for (std::size_t k = 0; k < N; ++k)
    if (k != first) rest.push_back(k);
  std::vector<std::size_t> sample{first};
  for (int j = 0; j < n - 1; ++j) {
    const std::size_t k =
        j + rng.uniform_below(static_cast<std::uint64_t>(rest.size() - j));
    std::swap(rest[j], rest[k]);
    sample.push_back(rest[j]);
  }
  return sample;
}

DualFrameSample draw_dual_frame_sample(const Population& pop,
                                       const ScenarioConfig& config, Rng& rng) {
  const std::vector<int> n_h = config.frame_a_sample_sizes();
  const std::vector<std::size_t> sa = draw_stratified_srswor(pop, n_h, rng);

  std::vector<std::size_t> frame_b;
  std::vector<double> zb;
  for (std::size_t i = 0; i < pop.units.size(); ++i)
    if (pop.units[i].domain != DomainLabel::a) {
      frame_b.push_back(i);
      zb.push_back(pop.units[i].z);
    }
  const int nb = config.frame_b_sample_size();
  const std::vector<double> pi_b = midzuno_inclusion_probabilities(zb, nb);
  const std::vector<std::size_t> sb_local = draw_midzuno(zb, nb, rng);

  // pi_B by population index, needed for overlap units sampled from frame A.
  std::vector<double> pi_b_by_unit(pop.units.size(), 0.0);
  for (std::size_t j = 0; j < frame_b.size(); ++j) pi_b_by_unit[frame_b[j]] = pi_b[j];

  DualFrameSample sample;
  sample.meta = pop.meta;

  auto add_unit = [&](std::size_t i, Frame drawn_from) {
    const PopulationUnit& p = pop.units[i];
    UnitRecord u;
    // An overlap unit can be drawn in both frames in the same replicate;
    // the two records need distinct identities.
    u.id = p.id + (drawn_from == Frame::A ? ":A" : ":B");
    if (drawn_from == Frame::A)
      u.domain = p.domain == DomainLabel::ab ? DomainLabel::ab : DomainLabel::a;
    else
      u.domain = p.domain == DomainLabel::ab ? DomainLabel::ba : DomainLabel::b;
    if (p.stratum_A >= 0) {
      u.stratum_A = "h" + std::to_string(p.stratum_A + 1);
      const std::size_t h = static_cast<std::size_t>(p.stratum_A);
      u.d_A = static_cast<double>(pop.strata_sizes[h]) / n_h[h];
    }
    if (p.domain != DomainLabel::a) u.d_B = 1.0 / pi_b_by_unit[i];
    u.y["y"] = p.y;
    u.aux["xA"] = p.xA;
    u.aux["xB"] = p.xB;
    u.aux["z"] = p.z;
    sample.units.push_back(std::move(u));
  };

  for (std::size_t i : sa) add_unit(i, Frame::A);
  for (std::size_t j : sb_local) add_unit(frame_b[j], Frame::B);
  return sample;
}

// --- Monte Carlo -----------------------------------------------------------

std::string EstimatorSpec::name() const {
  switch (kind) {
    case EstimatorKind::sf: return "SF";
    case EstimatorKind::hartley: return "HAR";
    case EstimatorKind::sfrr: return "SFRR";
    case EstimatorKind::cal: break;
  }
  std::string n = "CAL";
  if (aux_case != 1) {
    switch (distance) {
      case Distance::euclidean: n += "-EUC"; break;
      case Distance::raking: n += "-RAK"; break;
      case Distance::logit: n += "-LOG"; break;
      case Distance::kullback_leibler: n += "-KL"; break;
    }
  } else if (restricted) {
    n += distance == Distance::kullback_leibler ? "-KL" : "-EUC";
  }
  n += "(" + std::to_string(aux_case) + ")";
  n += approach == Approach::single ? " SF" : " DF";
  if (restricted) n += " +restr";
  return n;
}

std::vector<EstimatorSpec> default_estimator_set(const std::vector<Distance>& distances,
                                                 const std::vector<int>& aux_cases,
                                                 bool restricted_variants) {
  std::vector<EstimatorSpec> out;
  out.push_back({EstimatorKind::sf, Approach::single});
  out.push_back({EstimatorKind::hartley, Approach::dual});
  out.push_back({EstimatorKind::sfrr, Approach::single});
  for (int c : aux_cases) {
    if (c == 1) {
      // Distance-free closed form; one row per approach.
      out.push_back({EstimatorKind::cal, Approach::single, Distance::euclidean, 1});
      out.push_back({EstimatorKind::cal, Approach::dual, Distance::euclidean, 1});
      if (restricted_variants) {
        out.push_back(
            {EstimatorKind::cal, Approach::dual, Distance::euclidean, 1, true});
        out.push_back(
            {EstimatorKind::cal, Approach::dual, Distance::kullback_leibler, 1, true});
      }
      continue;
    }
    for (Distance d : distances) {
      out.push_back({EstimatorKind::cal, Approach::single, d, c});
      out.push_back({EstimatorKind::cal, Approach::dual, d, c});
      if (restricted_variants && c == 3 &&
          (d == Distance::euclidean || d == Distance::kullback_leibler))
        out.push_back({EstimatorKind::cal, Approach::dual, d, c, true});
    }
  }
  return out;
}

namespace {

struct Accumulator {
  double sum_err = 0, sum_err2 = 0;
  int count = 0, failures = 0, negative_reps = 0;
  struct Ci {
    double sum_len = 0;
    int cover = 0, inf = 0, sup = 0, count = 0;
  } lin, jack;
};

AuxSpec build_case(const EstimatorSpec& est, const FrameMeta& meta, double eta) {
  switch (est.aux_case) {
    case 1: return build_aux_case1(meta, eta, est.approach);
    case 2: return build_aux_case2(meta);
    case 3: return build_aux_case3(meta, eta, est.approach, "xA", "xB");
    case 4: return build_aux_case4(meta, "xA", "xB");
    default: throw ValidationError("aux case must be 1..4");
  }
}

}  // namespace

MonteCarloReport run_monte_carlo(const ScenarioConfig& config,
                                 const std::vector<EstimatorSpec>& estimators) {
  const Population pop = generate_population(config, split_seed(config.seed, 0));

  MonteCarloReport report;
  report.config = config;
  report.Y = pop.Y;
  report.realized_NA = *pop.meta.N_A;
  report.realized_NB = *pop.meta.N_B;
  report.realized_Nab = *pop.meta.N_ab;
  report.corr_xA_y = pop.correlation("xA", "y");
  report.corr_xB_y = pop.correlation("xB", "y");
  report.corr_z_y = pop.correlation("z", "y");
  report.replicates = config.replicates;

  const DesignPair designs{
      FrameDesign::Stratified(std::map<std::string, double>(pop.meta.strata_A.begin(),
                                                            pop.meta.strata_A.end())),
      FrameDesign::UnequalHajekDeville()};

  CalibrateOptions cal_opts;  // defaults

  // Every replicate derives its own RNG stream from the master seed, so the
  // work can run on any number of threads; the reduction below walks the
  // replicate results in index order and is bitwise reproducible.
  struct Outcome {
    bool ok = false;
    double value = 0;
    bool negative = false;
    std::optional<VarianceEstimate> lin, jack;
  };
  std::vector<std::vector<Outcome>> results(
      static_cast<std::size_t>(config.replicates));

  auto run_replicate = [&](int rep) {
    Rng rng(split_seed(config.seed, static_cast<std::uint64_t>(rep) + 1));
    const DualFrameSample sample = draw_dual_frame_sample(pop, config, rng);

    // One eta per replicate, shared by every estimator that needs it.
    const DomainSizeEstimates sizes = domain_size_estimates(sample, designs);
    const double eta = estimate_eta(sample.meta, sizes);

    std::vector<Outcome>& out = results[static_cast<std::size_t>(rep)];
    out.resize(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      const EstimatorSpec& est = estimators[e];
      Outcome& o = out[e];
      try {
        std::optional<AuxSpec> spec;
        std::optional<WeightVector> base;
        std::optional<CalibrationResult> cal;

        switch (est.kind) {
          case EstimatorKind::sf:
            o.value = weighted_total(sample, single_frame_weights(sample), "y");
            break;
          case EstimatorKind::hartley:
            o.value = weighted_total(sample, hartley_weights(sample, eta), "y");
            break;
          case EstimatorKind::sfrr: {
            base = single_frame_weights(sample);
            spec = build_aux_case2(sample.meta);
            cal = calibrate(sample, *base, *spec, DistanceKind{Distance::raking},
                            cal_opts);
            o.value = weighted_total(sample, cal->weights, "y");
            break;
          }
          case EstimatorKind::cal: {
            base = est.approach == Approach::dual
                       ? hartley_weights(sample, eta)
                       : single_frame_weights(sample);
            spec = build_case(est, sample.meta, eta);
            if (est.restricted)
              spec = with_overlap_mean_constraint(*spec, eta, sample.meta, "y");
            cal = calibrate(sample, *base, *spec, DistanceKind{est.distance}, cal_opts);
            if (!cal->converged)
              throw ConvergenceError("calibration did not converge");
            o.value = weighted_total(sample, cal->weights, "y");
            o.negative = cal->negative_weights > 0;
            break;
          }
        }
        o.ok = true;

        if (est.with_variance && cal && spec && base) {
          o.lin = linearization_variance(sample, *base, *spec, *cal, "y", designs, 0.95);
          const EstimatorSpec est_copy = est;
          const FrameMeta meta_copy = sample.meta;
          auto closure = [&est_copy, &meta_copy, eta,
                          &cal_opts](const DualFrameSample& s) {
            const WeightVector b = est_copy.approach == Approach::dual
                                       ? hartley_weights(s, eta)
                                       : single_frame_weights(s);
            AuxSpec sp = build_case(est_copy, meta_copy, eta);
            if (est_copy.restricted)
              sp = with_overlap_mean_constraint(sp, eta, meta_copy, "y");
            const CalibrationResult c =
                calibrate(s, b, sp, DistanceKind{est_copy.distance}, cal_opts);
            return weighted_total(s, c.weights, "y");
          };
          o.jack = jackknife_variance(sample, closure, designs, /*fpc=*/true, 0.95);
        }
      } catch (const std::exception&) {
        o.ok = false;
        o.lin.reset();
        o.jack.reset();
      }
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const int requested =
      config.max_threads > 0 ? config.max_threads : (hw == 0 ? 1 : static_cast<int>(hw));
  const int workers = std::max(1, std::min(requested, config.replicates));
  if (workers == 1) {
    for (int rep = 0; rep < config.replicates; ++rep) run_replicate(rep);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= config.replicates) return;
          try {
            run_replicate(rep);
          } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Fixed-order reduction.
  std::vector<Accumulator> acc(estimators.size());
  for (const auto& rep_results : results) {
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      const Outcome& o = rep_results[e];
      Accumulator& a = acc[e];
      if (!o.ok) {
        a.failures += 1;
        continue;
      }
      const double err = o.value - pop.Y;
      a.sum_err += err;
      a.sum_err2 += err * err;
      a.count += 1;
      if (o.negative) a.negative_reps += 1;
      auto tally = [&](const std::optional<VarianceEstimate>& v, Accumulator::Ci& ci) {
        if (!v) return;
        ci.sum_len += v->length;
        ci.count += 1;
        if (pop.Y < v->lb) ci.inf += 1;
        else if (pop.Y > v->ub) ci.sup += 1;
        else ci.cover += 1;
      };
      tally(o.lin, a.lin);
      tally(o.jack, a.jack);
    }
  }

  for (std::size_t e = 0; e < estimators.size(); ++e)
    if (acc[e].failures * 100 > config.replicates)
      throw ConvergenceError("estimator " + estimators[e].name() +
                             " failed on more than 1% of replicates");

  // Baseline mean squared error for the efficiency-gain column.
  std::optional<double> mse_sf;
  for (std::size_t e = 0; e < estimators.size(); ++e)
    if (estimators[e].kind == EstimatorKind::sf && acc[e].count > 0)
      mse_sf = acc[e].sum_err2 / acc[e].count;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const Accumulator& a = acc[e];
    McRow row;
    row.spec = estimators[e];
    row.failures = a.failures;
    row.negative_weight_reps = a.negative_reps;
    if (a.count > 0) {
      const double mse = a.sum_err2 / a.count;
      row.rb_pct = a.sum_err / a.count / pop.Y * 100.0;
      row.rmse100_pct = mse / (pop.Y * pop.Y) * 100.0 * 100.0;
      if (mse_sf && *mse_sf > 0) row.ge_pct = (1.0 - mse / *mse_sf) * 100.0;
    }
    auto ci_stats = [](const Accumulator::Ci& c) -> std::optional<CiStats> {
      if (c.count == 0) return std::nullopt;
      CiStats s;
      s.avg_length = c.sum_len / c.count;
      s.coverage_pct = 100.0 * c.cover / c.count;
      s.inferior_pct = 100.0 * c.inf / c.count;
      s.superior_pct = 100.0 * c.sup / c.count;
      return s;
    };
    row.linearization = ci_stats(a.lin);
    row.jackknife_fpc = ci_stats(a.jack);
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

// Approach-free label: the table pairs the single- and dual-frame results
// of the same estimator side by side.
std::string base_label(const EstimatorSpec& e) {
  switch (e.kind) {
    case EstimatorKind::sf: return "SF";
    case EstimatorKind::hartley: return "HAR";
    case EstimatorKind::sfrr: return "SFRR";
    case EstimatorKind::cal: break;
  }
  std::string n = "CAL";
  if (e.aux_case != 1 || e.restricted)
    switch (e.distance) {
      case Distance::euclidean: n += "-EUC"; break;
      case Distance::raking: n += "-RAK"; break;
      case Distance::logit: n += "-LOG"; break;
      case Distance::kullback_leibler: n += "-KL"; break;
    }
  n += "(" + std::to_string(e.aux_case) + ")";
  if (e.restricted) n += " +restr";
  return n;
}

}  // namespace

std::string render_report_table(const MonteCarloReport& report) {
  std::ostringstream out;
  out << "scenario " << to_string(report.config.overlap) << " overlap"
      << "  N=" << report.config.N << "  seed=" << report.config.seed
      << "  replicates=" << report.replicates << '\n';
  out << "realized N_A=" << report.realized_NA << " N_B=" << report.realized_NB
      << " N_ab=" << report.realized_Nab << "  Y=" << std::setprecision(10)
      << report.Y << '\n';
  out << std::setprecision(3) << std::fixed;
  out << "corr(xA,y)=" << report.corr_xA_y << " corr(xB,y)=" << report.corr_xB_y
      << " corr(z,y)=" << report.corr_z_y << "\n\n";

  out << std::left << std::setw(18) << "" << std::right << std::setw(32)
      << "--- single frame ---" << std::setw(32) << "---- dual frame ----" << '\n';
  out << std::left << std::setw(18) << "estimator";
  for (int i = 0; i < 2; ++i)
    out << std::right << std::setw(9) << "RB%" << std::setw(13) << "100*RMSE%"
        << std::setw(10) << "GE%";
  out << '\n';

  // Pair rows by everything except the approach, keeping first appearance
  // order.
  std::vector<std::pair<std::string, std::array<const McRow*, 2>>> blocks;
  for (const auto& row : report.rows) {
    const std::string label = base_label(row.spec);
    auto it = std::find_if(blocks.begin(), blocks.end(),
                           [&](const auto& b) { return b.first == label; });
    if (it == blocks.end()) {
      blocks.push_back({label, {nullptr, nullptr}});
      it = blocks.end() - 1;
    }
    it->second[row.spec.approach == Approach::single ? 0 : 1] = &row;
  }

  for (const auto& [label, pair] : blocks) {
    out << std::left << std::setw(18) << label;
    for (const McRow* row : pair) {
      if (!row) {
        out << std::right << std::setw(9) << "-" << std::setw(13) << "-"
            << std::setw(10) << "-";
        continue;
      }
      out << std::right << std::setw(9) << row->rb_pct << std::setw(13)
          << row->rmse100_pct << std::setw(10);
      if (row->ge_pct) out << *row->ge_pct;
      else out << "-";
    }
    out << '\n';
    auto emit_ci = [&](const char* side, const char* label_ci,
                       const std::optional<CiStats>& ci) {
      if (!ci) return;
      out << "    " << side << ' ' << std::left << std::setw(14) << label_ci
          << std::right << "len=" << std::setw(12) << std::setprecision(1)
          << ci->avg_length << std::setprecision(3) << "  inf%=" << std::setw(6)
          << ci->inferior_pct << "  sup%=" << std::setw(6) << ci->superior_pct
          << "  cov%=" << std::setw(6) << ci->coverage_pct << '\n';
    };
    for (int i = 0; i < 2; ++i) {
      if (!pair[i]) continue;
      const char* side = i == 0 ? "SF" : "DF";
      emit_ci(side, "linearization", pair[i]->linearization);
      emit_ci(side, "jackknife-fpc", pair[i]->jackknife_fpc);
    }
    int fails = 0, negs = 0;
    for (const McRow* row : pair)
      if (row) {
        fails += row->failures;
        negs += row->negative_weight_reps;
      }
    if (fails > 0 || negs > 0)
      out << "    (failures " << fails << ", replicates with negative weights "
          << negs << ")\n";
  }
  return out.str();
}

std::string render_report_csv(const MonteCarloReport& report) {
  std::ostringstream out;
  out << "estimator,approach,aux_case,distance,restricted,rb_pct,rmse100_pct,ge_pct,"
         "failures,negative_weight_reps,lin_len,lin_cov,lin_inf,lin_sup,"
         "jack_len,jack_cov,jack_inf,jack_sup\n";
  out << std::setprecision(17);
  for (const auto& row : report.rows) {
    out << row.spec.name() << ',' << (row.spec.approach == Approach::dual ? "dual" : "single")
        << ',' << row.spec.aux_case << ',' << to_string(row.spec.distance) << ','
        << (row.spec.restricted ? 1 : 0) << ',' << row.rb_pct << ',' << row.rmse100_pct
        << ',';
    if (row.ge_pct) out << *row.ge_pct;
    out << ',' << row.failures << ',' << row.negative_weight_reps;
    auto emit_ci = [&](const std::optional<CiStats>& ci) {
      if (ci)
        out << ',' << ci->avg_length << ',' << ci->coverage_pct << ','
            << ci->inferior_pct << ',' << ci->superior_pct;
      else
        out << ",,,,";
    };
    emit_ci(row.linearization);
    emit_ci(row.jackknife_fpc);
    out << '\n';
  }
  return out.str();
}

}  // namespace dualframe
