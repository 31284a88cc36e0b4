#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualframe/calibration.hpp"
#include "dualframe/estimators.hpp"
#include "dualframe/simulation.hpp"
#include "dualframe/survey_data.hpp"
#include "dualframe/variance.hpp"

namespace dualframe::cli {

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
}

// Echo of every option that affects the run; replaying these lines as flags
// reproduces the outputs.
std::string config_echo(const RunConfig& c) {
  std::ostringstream out;
  out << "# " << kVersion << '\n';
  out << "subcommand = " << c.subcommand << '\n';
  auto kv = [&](const char* k, const auto& v) { out << k << " = " << v << '\n'; };
  if (c.subcommand == "simulate") {
    kv("scenario", c.scenario);
    kv("na", c.na);
    kv("nb", c.nb);
    kv("replicates", c.replicates);
    kv("seed", c.seed ? std::to_string(*c.seed) : "");
    kv("estimators", c.estimators);
    kv("distances", c.distances);
    kv("aux-cases", c.aux_cases);
    kv("overlap-constraint", c.overlap_constraint ? "true" : "false");
    kv("fresh-binomial", c.fresh_binomial ? "true" : "false");
    kv("with-variance", c.with_variance ? "true" : "false");
    return out.str();
  }
  kv("input", c.input_path);
  kv("meta", c.meta_path);
  kv("approach", c.approach);
  kv("eta", c.eta);
  kv("variable", c.variable);
  kv("design-a", c.design_a);
  kv("design-b", c.design_b);
  if (!c.variance.empty()) {
    kv("variance", c.variance);
    kv("ci", c.ci_level);
  }
  if (c.subcommand == "estimate") {
    kv("estimator", c.estimator);
  } else {
    kv("distance", c.distance);
    kv("aux-case", c.aux_case);
    kv("xa-var", c.x_a);
    kv("xb-var", c.x_b);
    if (!c.group_var.empty()) kv("group-var", c.group_var);
    if (!c.overlap_constraint_var.empty())
      kv("overlap-constraint", c.overlap_constraint_var);
    kv("tolerance", c.tolerance);
    kv("max-iterations", c.max_iterations);
    out << "logit-bounds = " << c.logit_l << ',' << c.logit_u << '\n';
  }
  return out.str();
}

FrameDesign resolve_design(const std::string& request, Frame frame,
                           const DualFrameSample& sample) {
  const auto& strata =
      frame == Frame::A ? sample.meta.strata_A : sample.meta.strata_B;
  const auto& N = frame == Frame::A ? sample.meta.N_A : sample.meta.N_B;
  std::string kind = request;
  if (kind == "auto") {
    if (!strata.empty()) kind = "stratified";
    else if (N) kind = "srswor";
    else kind = "unequal";
  }
  if (kind == "stratified") {
    if (strata.empty())
      throw ValidationError("stratified design needs strata.* metadata");
    return FrameDesign::Stratified({strata.begin(), strata.end()});
  }
  if (kind == "srswor") {
    if (!N) throw ValidationError("srswor design needs the frame size in metadata");
    return FrameDesign::Srswor(*N);
  }
  if (kind == "unequal") return FrameDesign::UnequalHajekDeville();
  throw ValidationError("unknown design '" + request + "'");
}

double resolve_eta(const RunConfig& c, const DualFrameSample& sample,
                   const DesignPair& designs) {
  if (c.eta == "estimate") {
    const DomainSizeEstimates sizes = domain_size_estimates(sample, designs);
    return estimate_eta(sample.meta, sizes);
  }
  double v = 0;
  auto [p, ec] = std::from_chars(c.eta.data(), c.eta.data() + c.eta.size(), v);
  if (ec != std::errc() || p != c.eta.data() + c.eta.size())
    throw ValidationError("eta must be a number or 'estimate'");
  return v;
}

AuxSpec resolve_aux(const RunConfig& c, const FrameMeta& meta, double eta,
                    Approach approach) {
  if (c.aux_case == "1") return build_aux_case1(meta, eta, approach);
  if (c.aux_case == "2") return build_aux_case2(meta);
  if (c.aux_case == "3") return build_aux_case3(meta, eta, approach, c.x_a, c.x_b);
  if (c.aux_case == "4") return build_aux_case4(meta, c.x_a, c.x_b);
  if (c.aux_case == "xa") return build_aux_xa(meta, eta, approach, c.x_a);
  if (c.aux_case == "xazb") return build_aux_xa_zb(meta, c.x_a, c.x_b);
  if (c.aux_case == "xwhole") return build_aux_x_whole(meta, eta, c.x_a);
  if (c.aux_case == "groups") {
    if (c.group_var.empty()) throw ValidationError("--group-var required");
    return build_group_poststrat(meta, eta, /*complete=*/true, approach, c.group_var);
  }
  if (c.aux_case == "groups-margins") {
    if (c.group_var.empty()) throw ValidationError("--group-var required");
    return build_group_poststrat(meta, eta, /*complete=*/false, approach, c.group_var);
  }
  throw ValidationError("unknown aux case '" + c.aux_case + "'");
}

json variance_json(const VarianceEstimate& v) {
  return json{{"method", to_string(v.method)},
              {"variance", v.variance},
              {"ci_level", v.ci_level},
              {"lb", v.lb},
              {"ub", v.ub},
              {"length", v.length}};
}

std::string render_weights_csv(const DualFrameSample& sample, const WeightVector& base,
                               const WeightVector& calibrated) {
  std::ostringstream out;
  out << "id,base_weight,calibrated_weight,ratio\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < sample.units.size(); ++i) {
    const double b = base[i];
    out << sample.units[i].id << ',' << b << ',' << calibrated[i] << ','
        << (b != 0 ? calibrated[i] / b : 0.0) << '\n';
  }
  return out.str();
}

int run_estimate(const RunConfig& c) {
  const DualFrameSample sample = load_sample(c.input_path);
  DualFrameSample with_meta = sample;
  if (!c.meta_path.empty()) with_meta.meta = load_frame_meta(c.meta_path);

  const Approach approach =
      c.approach == "single" ? Approach::single : Approach::dual;
  const auto issues = validate_for_approach(with_meta, approach);

  const DesignPair designs{resolve_design(c.design_a, Frame::A, with_meta),
                           resolve_design(c.design_b, Frame::B, with_meta)};

  double eta = 0.5;
  WeightVector w;
  if (c.estimator == "sf") {
    w = single_frame_weights(with_meta);
  } else {
    eta = resolve_eta(c, with_meta, designs);
    w = hartley_weights(with_meta, eta);
  }
  const double point = weighted_total(with_meta, w, c.variable);

  json machine{{"version", kVersion},
               {"subcommand", "estimate"},
               {"estimator", c.estimator},
               {"approach", c.approach},
               {"variable", c.variable},
               {"point", point},
               {"n_A", with_meta.n_A()},
               {"n_B", with_meta.n_B()}};
  if (w.tag == WeightTag::hartley) machine["eta"] = eta;
  if (!issues.empty()) machine["validation"] = issues;

  std::ostringstream report;
  report << config_echo(c) << '\n';
  for (const auto& s : issues) report << "warning: " << s << '\n';
  report << "estimator: " << c.estimator << "  approach: " << c.approach << '\n';
  if (w.tag == WeightTag::hartley)
    report << "eta: " << std::setprecision(10) << eta << '\n';
  report << "point estimate of total(" << c.variable
         << "): " << std::setprecision(15) << point << '\n';

  if (!c.variance.empty()) {
    const VarianceMethod method = variance_method_from_string(c.variance);
    VarianceEstimate v;
    if (method == VarianceMethod::linearization) {
      // Frame-split design variance of the weighted total itself.
      auto values = [&](Frame f) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < with_meta.units.size(); ++i) {
          const UnitRecord& u = with_meta.units[i];
          const bool in = f == Frame::A ? in_frame_a(u.domain) : in_frame_b(u.domain);
          if (!in) continue;
          const double d_frame = f == Frame::A ? u.d_A.value() : u.d_B.value();
          vals.push_back(w[i] / d_frame * u.value(c.variable));
        }
        return vals;
      };
      v.point = point;
      v.method = method;
      v.ci_level = c.ci_level;
      v.variance = design_variance_ht(with_meta, Frame::A, values(Frame::A), designs.A) +
                   design_variance_ht(with_meta, Frame::B, values(Frame::B), designs.B);
      const Interval ci = confidence_interval(point, v.variance, c.ci_level);
      v.lb = ci.lb;
      v.ub = ci.ub;
      v.length = ci.length;
    } else {
      const bool is_sf = w.tag == WeightTag::single_frame;
      const std::string var = c.variable;
      auto closure = [is_sf, eta, var](const DualFrameSample& s) {
        const WeightVector ww =
            is_sf ? single_frame_weights(s) : hartley_weights(s, eta);
        return weighted_total(s, ww, var);
      };
      v = jackknife_variance(with_meta, closure, designs,
                             method == VarianceMethod::jackknife_fpc, c.ci_level);
    }
    machine["variance"] = variance_json(v);
    report << "variance (" << to_string(v.method) << "): " << v.variance << '\n'
           << "ci" << c.ci_level * 100 << "%: [" << v.lb << ", " << v.ub
           << "]  length " << v.length << '\n';
  }

  report << "\nmachine: " << machine.dump() << '\n';
  std::cout << report.str();
  write_file(c.out_path, report.str());
  write_file(c.json_path, machine.dump(2) + "\n");
  if (!c.csv_path.empty()) {
    std::ostringstream csv;
    csv << std::setprecision(17) << "estimator,approach,variable,point";
    if (machine.contains("variance"))
      csv << ",variance,lb,ub,length";
    csv << '\n' << c.estimator << ',' << c.approach << ',' << c.variable << ','
        << point;
    if (machine.contains("variance")) {
      const auto& v = machine["variance"];
      csv << ',' << v["variance"].get<double>() << ',' << v["lb"].get<double>()
          << ',' << v["ub"].get<double>() << ',' << v["length"].get<double>();
    }
    csv << '\n';
    write_file(c.csv_path, csv.str());
  }
  return kOk;
}

int run_calibrate(const RunConfig& c) {
  DualFrameSample sample = load_sample(c.input_path);
  if (!c.meta_path.empty()) sample.meta = load_frame_meta(c.meta_path);

  const Approach approach =
      c.approach == "single" ? Approach::single : Approach::dual;
  const DesignPair designs{resolve_design(c.design_a, Frame::A, sample),
                           resolve_design(c.design_b, Frame::B, sample)};
  const double eta = resolve_eta(c, sample, designs);

  const WeightVector base = approach == Approach::single
                                ? single_frame_weights(sample)
                                : hartley_weights(sample, eta);
  AuxSpec spec = resolve_aux(c, sample.meta, eta, approach);
  if (!c.overlap_constraint_var.empty())
    spec = with_overlap_mean_constraint(spec, eta, sample.meta,
                                        c.overlap_constraint_var);

  DistanceKind distance{distance_from_string(c.distance), c.logit_l, c.logit_u};
  CalibrateOptions opts;
  opts.tolerance = c.tolerance;
  opts.max_iterations = c.max_iterations;
  const CalibrationResult result = calibrate(sample, base, spec, distance, opts);
  const double point = weighted_total(sample, result.weights, c.variable);

  json machine{{"version", kVersion},
               {"subcommand", "calibrate"},
               {"approach", c.approach},
               {"distance", to_string(distance.kind)},
               {"aux_case", c.aux_case},
               {"eta", eta},
               {"variable", c.variable},
               {"point", point},
               {"converged", result.converged},
               {"iterations", result.iterations},
               {"max_constraint_residual", result.max_constraint_residual},
               {"negative_weights", result.negative_weights},
               {"lambda", result.lambda},
               {"columns", spec.column_names},
               {"targets", spec.targets}};

  std::ostringstream report;
  report << config_echo(c) << '\n';
  report << "eta: " << std::setprecision(10) << eta << '\n';
  report << "distance: " << to_string(distance.kind) << "  aux case: " << c.aux_case
         << '\n';
  report << "converged: " << (result.converged ? "yes" : "no")
         << "  iterations: " << result.iterations
         << "  max residual: " << result.max_constraint_residual
         << "  negative weights: " << result.negative_weights << '\n';
  report << "lambda:";
  for (double l : result.lambda) report << ' ' << l;
  report << '\n';
  report << "point estimate of total(" << c.variable
         << "): " << std::setprecision(15) << point << '\n';

  if (!result.converged) {
    report << "error: calibration did not converge\n";
    std::cout << report.str();
    write_file(c.out_path, report.str());
    write_file(c.json_path, machine.dump(2) + "\n");
    return kConvergence;
  }

  if (!c.variance.empty()) {
    const VarianceMethod method = variance_method_from_string(c.variance);
    VarianceEstimate v;
    if (method == VarianceMethod::linearization) {
      v = linearization_variance(sample, base, spec, result, c.variable, designs,
                                 c.ci_level);
    } else {
      const RunConfig cc = c;
      const FrameMeta meta = sample.meta;
      const Approach ap = approach;
      auto closure = [cc, meta, eta, ap, distance, opts](const DualFrameSample& s) {
        const WeightVector b =
            ap == Approach::single ? single_frame_weights(s) : hartley_weights(s, eta);
        AuxSpec sp = resolve_aux(cc, meta, eta, ap);
        if (!cc.overlap_constraint_var.empty())
          sp = with_overlap_mean_constraint(sp, eta, meta, cc.overlap_constraint_var);
        const CalibrationResult r = calibrate(s, b, sp, distance, opts);
        return weighted_total(s, r.weights, cc.variable);
      };
      v = jackknife_variance(sample, closure, designs,
                             method == VarianceMethod::jackknife_fpc, c.ci_level);
    }
    machine["variance"] = variance_json(v);
    report << "variance (" << to_string(v.method) << "): " << v.variance << '\n'
           << "ci" << c.ci_level * 100 << "%: [" << v.lb << ", " << v.ub
           << "]  length " << v.length << '\n';
  }

  report << "\nmachine: " << machine.dump() << '\n';
  std::cout << report.str();
  write_file(c.out_path, report.str());
  write_file(c.json_path, machine.dump(2) + "\n");
  write_file(c.weights_out, render_weights_csv(sample, base, result.weights));
  if (!c.csv_path.empty()) write_file(c.csv_path, render_weights_csv(sample, base, result.weights));
  return kOk;
}

int run_simulate(const RunConfig& c) {
  if (!c.seed) throw ValidationError("--seed is required for simulate");
  ScenarioConfig config;
  config.overlap = overlap_from_string(c.scenario);
  config.na = c.na == "large" ? SampleSize::large : SampleSize::small;
  config.nb = c.nb == "large" ? SampleSize::large : SampleSize::small;
  config.replicates = c.replicates;
  config.seed = *c.seed;
  config.fixed_sizes = !c.fresh_binomial;

  std::vector<Distance> distances;
  for (const auto& d : split_list(c.distances))
    distances.push_back(distance_from_string(d));
  std::vector<int> cases;
  for (const auto& s : split_list(c.aux_cases)) cases.push_back(std::stoi(s));

  const auto wanted = split_list(c.estimators);
  auto want = [&](const std::string& k) {
    return std::find(wanted.begin(), wanted.end(), k) != wanted.end();
  };
  std::vector<EstimatorSpec> all =
      default_estimator_set(distances, cases, c.overlap_constraint);
  std::vector<EstimatorSpec> estimators;
  for (const auto& e : all) {
    const bool keep = (e.kind == EstimatorKind::sf && want("sf")) ||
                      (e.kind == EstimatorKind::hartley && want("har")) ||
                      (e.kind == EstimatorKind::sfrr && want("sfrr")) ||
                      (e.kind == EstimatorKind::cal && want("cal"));
    if (keep) estimators.push_back(e);
  }
  if (c.with_variance)
    for (auto& e : estimators)
      if (e.kind == EstimatorKind::cal && e.aux_case == 1 && !e.restricted &&
          e.distance == Distance::euclidean)
        e.with_variance = true;

  const MonteCarloReport report = run_monte_carlo(config, estimators);

  std::ostringstream out;
  out << config_echo(c) << '\n' << render_report_table(report);
  std::cout << out.str();
  write_file(c.out_path, out.str());
  if (!c.csv_path.empty()) write_file(c.csv_path, render_report_csv(report));
  return kOk;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    if (config.subcommand == "estimate") return run_estimate(config);
    if (config.subcommand == "calibrate") return run_calibrate(config);
    if (config.subcommand == "simulate") return run_simulate(config);
    throw ValidationError("unknown subcommand '" + config.subcommand + "'");
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}

int main(int argc, const char* const* argv) {
  RunConfig c;
  CLI::App app{std::string(kVersion) + " - dual-frame calibration estimation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config");
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", c.input_path, "sample CSV")->required();
    sub->add_option("--meta", c.meta_path, "frame metadata file");
    sub->add_option("--approach", c.approach, "dual | single")
        ->check(CLI::IsMember({"dual", "single"}));
    sub->add_option("--eta", c.eta, "mixing weight in [0,1], or 'estimate'");
    sub->add_option("--variable", c.variable, "response variable name");
    sub->add_option("--variance", c.variance,
                    "linearization | jackknife | jackknife-fpc");
    sub->add_option("--ci", c.ci_level, "confidence level");
    sub->add_option("--design-a", c.design_a, "auto | srswor | stratified | unequal");
    sub->add_option("--design-b", c.design_b, "auto | srswor | stratified | unequal");
    sub->add_option("--out", c.out_path, "write the report here as well");
    sub->add_option("--json", c.json_path, "write the machine block here");
  };

  CLI::App* est = app.add_subcommand("estimate", "point estimators without calibration");
  add_common(est);
  est->add_option("--estimator", c.estimator, "hartley | sf")
      ->check(CLI::IsMember({"hartley", "sf"}));
  est->add_option("--csv", c.csv_path, "one-row CSV summary path");

  CLI::App* cal = app.add_subcommand("calibrate", "calibration estimators");
  add_common(cal);
  cal->add_option("--distance", c.distance, "euclidean | raking | logit | kl");
  cal->add_option("--aux-case", c.aux_case,
                  "1 | 2 | 3 | 4 | xa | xazb | xwhole | groups | groups-margins");
  cal->add_option("--xa-var", c.x_a, "frame-A numeric auxiliary");
  cal->add_option("--xb-var", c.x_b, "frame-B numeric auxiliary");
  cal->add_option("--group-var", c.group_var, "group variable for groups cases");
  cal->add_option("--overlap-constraint", c.overlap_constraint_var,
                  "force equal calibrated overlap means of this variable");
  cal->add_option("--tolerance", c.tolerance, "relative residual tolerance");
  cal->add_option("--max-iterations", c.max_iterations, "iteration cap");
  cal->add_option("--logit-l", c.logit_l, "logit lower ratio bound");
  cal->add_option("--logit-u", c.logit_u, "logit upper ratio bound");
  cal->add_option("--weights-out", c.weights_out, "weights CSV path");
  cal->add_option("--csv", c.csv_path, "alias for --weights-out");

  CLI::App* sim = app.add_subcommand("simulate", "synthetic-population study");
  sim->add_option("--scenario", c.scenario, "small | large | medium")
      ->check(CLI::IsMember({"small", "large", "medium"}));
  sim->add_option("--na", c.na, "small | large frame-A sample size")
      ->check(CLI::IsMember({"small", "large"}));
  sim->add_option("--nb", c.nb, "small | large frame-B sample size")
      ->check(CLI::IsMember({"small", "large"}));
  sim->add_option("--replicates", c.replicates, "replicate count");
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt =
      sim->add_option("--seed", seed_value, "master seed")->required();
  sim->add_option("--estimators", c.estimators, "subset of sf,har,sfrr,cal");
  sim->add_option("--distances", c.distances, "subset of euclidean,raking,logit,kl");
  sim->add_option("--aux-cases", c.aux_cases, "subset of 1,2,3,4");
  sim->add_flag("--overlap-constraint", c.overlap_constraint,
                "add the restricted calibration rows");
  sim->add_flag("--fresh-binomial", c.fresh_binomial,
                "redraw domain assignment instead of fixed sizes");
  sim->add_flag("--with-variance", c.with_variance,
                "track linearization and jackknife CIs on CAL-EUC case 1");
  sim->add_option("--output", c.out_path, "report path");
  sim->add_option("--csv", c.csv_path, "CSV report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  if (est->parsed()) c.subcommand = "estimate";
  if (cal->parsed()) c.subcommand = "calibrate";
  if (sim->parsed()) {
    c.subcommand = "simulate";
    if (seed_opt->count() > 0) c.seed = seed_value;
  }
  return run(c);
}

}  // namespace dualframe::cli
