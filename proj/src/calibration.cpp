#include "dualframe/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dualframe {

Distance distance_from_string(const std::string& s) {
  if (s == "euclidean" || s == "linear" || s == "euc") return Distance::euclidean;
  if (s == "raking" || s == "rak") return Distance::raking;
  if (s == "logit" || s == "log") return Distance::logit;
  if (s == "kl" || s == "kullback-leibler" || s == "kullback_leibler")
    return Distance::kullback_leibler;
  throw ValidationError("unknown distance '" + s + "'");
}

const char* to_string(Distance d) {
  switch (d) {
    case Distance::euclidean: return "euclidean";
    case Distance::raking: return "raking";
    case Distance::logit: return "logit";
    case Distance::kullback_leibler: return "kl";
  }
  return "?";
}

double DistanceKind::F(double u) const {
  switch (kind) {
    case Distance::euclidean:
      return 1.0 + u;
    case Distance::raking:
      return std::exp(u);
    case Distance::logit: {
      const double L = logit_L, U = logit_U;
      const double A = (U - L) / ((1.0 - L) * (U - 1.0));
      if (A * u >= 0) {
        // Divide through by exp(Au) so saturation stays finite.
        const double e = std::exp(-A * u);
        return (L * (U - 1.0) * e + U * (1.0 - L)) / ((U - 1.0) * e + (1.0 - L));
      }
      const double e = std::exp(A * u);
      return (L * (U - 1.0) + U * (1.0 - L) * e) / ((U - 1.0) + (1.0 - L) * e);
    }
    case Distance::kullback_leibler:
      return 1.0 / (1.0 - u);
  }
  return 1.0;
}

double DistanceKind::F_prime(double u) const {
  switch (kind) {
    case Distance::euclidean:
      return 1.0;
    case Distance::raking:
      return std::exp(u);
    case Distance::logit: {
      const double L = logit_L, U = logit_U;
      const double A = (U - L) / ((1.0 - L) * (U - 1.0));
      if (A * u >= 0) {
        const double e = std::exp(-A * u);
        const double den = (U - 1.0) * e + (1.0 - L);
        return (U - L) * (U - L) * e / (den * den);
      }
      const double e = std::exp(A * u);
      const double den = (U - 1.0) + (1.0 - L) * e;
      return (U - L) * (U - L) * e / (den * den);
    }
    case Distance::kullback_leibler: {
      const double d = 1.0 - u;
      return 1.0 / (d * d);
    }
  }
  return 1.0;
}

double DistanceKind::Psi(double u) const {
  switch (kind) {
    case Distance::euclidean:
      return u + 0.5 * u * u;
    case Distance::raking:
      return std::exp(u);
    case Distance::logit: {
      const double L = logit_L, U = logit_U;
      const double A = (U - L) / ((1.0 - L) * (U - 1.0));
      // log((U-1) + (1-L) e^{Au}) evaluated without overflow.
      const double au = A * u;
      const double logD = au > 0
                              ? au + std::log((U - 1.0) * std::exp(-au) + (1.0 - L))
                              : std::log((U - 1.0) + (1.0 - L) * std::exp(au));
      return L * u + (U - L) / A * logD;
    }
    case Distance::kullback_leibler:
      return -std::log(1.0 - u);
  }
  return 0;
}

bool DistanceKind::in_domain(double u) const {
  switch (kind) {
    case Distance::euclidean:
      return std::isfinite(u);
    case Distance::raking:
      return u < 700.0;  // keep exp finite
    case Distance::logit:
      return std::isfinite(u);
    case Distance::kullback_leibler:
      return u < 1.0 - 1e-12;
  }
  return false;
}

std::vector<double> AuxSpec::row(const UnitRecord& u) const {
  std::vector<double> out(size(), 0.0);
  fill_row(u, out);
  return out;
}

// --- constraint builders -----------------------------------------------------

namespace {

double require_meta(const std::optional<double>& v, const char* name) {
  if (!v) throw ValidationError(std::string("missing ") + name);
  return *v;
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in [0, 1]");
}

}  // namespace

AuxSpec build_aux_case1(const FrameMeta& meta, double eta, Approach approach) {
  check_eta(eta);
  require_meta(meta.N_ab, "N_ab");
  AuxSpec spec;
  spec.tag = AuxCase::case1;
  if (approach == Approach::dual) {
    spec.column_names = {"a", "ab", "ba", "b"};
    spec.targets = {meta.N_a(), eta * *meta.N_ab, (1.0 - eta) * *meta.N_ab, meta.N_b()};
    spec.fill_row = [](const UnitRecord& u, std::span<double> out) {
      out[static_cast<int>(u.domain)] = 1.0;
    };
  } else {
    spec.column_names = {"a", "ab+ba", "b"};
    spec.targets = {meta.N_a(), *meta.N_ab, meta.N_b()};
    spec.fill_row = [](const UnitRecord& u, std::span<double> out) {
      if (u.domain == DomainLabel::a) out[0] = 1.0;
      else if (u.domain == DomainLabel::b) out[2] = 1.0;
      else out[1] = 1.0;
    };
  }
  return spec;
}

AuxSpec build_aux_case2(const FrameMeta& meta) {
  AuxSpec spec;
  spec.tag = AuxCase::case2;
  spec.column_names = {"A", "B"};
  spec.targets = {require_meta(meta.N_A, "N_A"), require_meta(meta.N_B, "N_B")};
  spec.fill_row = [](const UnitRecord& u, std::span<double> out) {
    if (u.domain != DomainLabel::b) out[0] = 1.0;  // a, ab, ba
    if (u.domain != DomainLabel::a) out[1] = 1.0;  // ab, ba, b
  };
  return spec;
}

AuxSpec build_aux_case3(const FrameMeta& meta, double eta, Approach approach,
                        const std::string& x_a, const std::string& x_b) {
  AuxSpec spec = build_aux_case1(meta, eta, approach);
  spec.tag = AuxCase::case3;
  const double XA = meta.require_total(x_a, FrameMeta::Scope::A);
  const double XB = meta.require_total(x_b, FrameMeta::Scope::B);
  spec.column_names.push_back(x_a + ":A");
  spec.column_names.push_back(x_b + ":B");
  spec.targets.push_back(XA);
  spec.targets.push_back(XB);
  const std::size_t p0 = spec.size() - 2;
  auto base = spec.fill_row;
  spec.fill_row = [base, p0, x_a, x_b](const UnitRecord& u, std::span<double> out) {
    base(u, out);
    // Overlap units belong to both frames, so both gated columns are live.
    if (u.domain != DomainLabel::b) out[p0] = u.value(x_a);
    if (u.domain != DomainLabel::a) out[p0 + 1] = u.value(x_b);
  };
  return spec;
}

AuxSpec build_aux_case4(const FrameMeta& meta, const std::string& x_a,
                        const std::string& x_b) {
  AuxSpec spec = build_aux_xa_zb(meta, x_a, x_b);
  spec.tag = AuxCase::case4;
  return spec;
}

AuxSpec build_aux_xa(const FrameMeta& meta, double eta, Approach approach,
                     const std::string& x_a) {
  AuxSpec spec = build_aux_case1(meta, eta, approach);
  spec.tag = AuxCase::custom;
  spec.column_names.push_back(x_a + ":A");
  spec.targets.push_back(meta.require_total(x_a, FrameMeta::Scope::A));
  const std::size_t p0 = spec.size() - 1;
  auto base = spec.fill_row;
  spec.fill_row = [base, p0, x_a](const UnitRecord& u, std::span<double> out) {
    base(u, out);
    if (u.domain != DomainLabel::b) out[p0] = u.value(x_a);
  };
  return spec;
}

AuxSpec build_aux_xa_zb(const FrameMeta& meta, const std::string& x_a,
                        const std::string& z_b) {
  AuxSpec spec = build_aux_case2(meta);
  spec.tag = AuxCase::custom;
  spec.column_names.push_back(x_a + ":A");
  spec.column_names.push_back(z_b + ":B");
  spec.targets.push_back(meta.require_total(x_a, FrameMeta::Scope::A));
  spec.targets.push_back(meta.require_total(z_b, FrameMeta::Scope::B));
  auto base = spec.fill_row;
  spec.fill_row = [base, x_a, z_b](const UnitRecord& u, std::span<double> out) {
    base(u, out);
    if (u.domain != DomainLabel::b) out[2] = u.value(x_a);
    if (u.domain != DomainLabel::a) out[3] = u.value(z_b);
  };
  return spec;
}

AuxSpec build_aux_x_whole(const FrameMeta& meta, double eta, const std::string& x) {
  AuxSpec spec = build_aux_case1(meta, eta, Approach::dual);
  spec.tag = AuxCase::custom;
  spec.column_names.push_back(x + ":U");
  spec.targets.push_back(meta.require_total(x, FrameMeta::Scope::U));
  const std::size_t p0 = spec.size() - 1;
  auto base = spec.fill_row;
  spec.fill_row = [base, p0, x](const UnitRecord& u, std::span<double> out) {
    base(u, out);
    out[p0] = u.value(x);
  };
  return spec;
}

AuxSpec build_group_poststrat(const FrameMeta& meta, double eta, bool complete,
                              Approach approach, const std::string& group_var) {
  check_eta(eta);
  if (meta.group_totals.empty()) throw ValidationError("missing group totals");
  meta.check_invariants();

  std::vector<long long> levels;
  for (const auto& [g, cell] : meta.group_totals) levels.push_back(g);

  AuxSpec spec;
  const std::size_t H = levels.size();
  if (complete) {
    spec.tag = AuxCase::groups_complete;
    const std::size_t per = approach == Approach::dual ? 4 : 3;
    for (std::size_t h = 0; h < H; ++h) {
      const auto& cell = meta.group_totals.at(levels[h]);
      const double na = require_meta(cell.a, "group domain-a count");
      const double nab = require_meta(cell.ab, "group domain-ab count");
      const double nb = require_meta(cell.b, "group domain-b count");
      const std::string g = std::to_string(levels[h]);
      if (approach == Approach::dual) {
        spec.column_names.insert(spec.column_names.end(),
                                 {"a:" + g, "ab:" + g, "ba:" + g, "b:" + g});
        spec.targets.insert(spec.targets.end(),
                            {na, eta * nab, (1.0 - eta) * nab, nb});
      } else {
        spec.column_names.insert(spec.column_names.end(),
                                 {"a:" + g, "ab+ba:" + g, "b:" + g});
        spec.targets.insert(spec.targets.end(), {na, nab, nb});
      }
    }
    spec.fill_row = [levels, per, group_var, approach](const UnitRecord& u,
                                                       std::span<double> out) {
      const long long g = std::llround(u.value(group_var));
      for (std::size_t h = 0; h < levels.size(); ++h) {
        if (levels[h] != g) continue;
        std::size_t slot;
        if (approach == Approach::dual) {
          slot = static_cast<std::size_t>(u.domain);
        } else {
          slot = u.domain == DomainLabel::a ? 0 : u.domain == DomainLabel::b ? 2 : 1;
        }
        out[per * h + slot] = 1.0;
        return;
      }
      throw ValidationError("unit " + u.id + ": group level not in totals");
    };
  } else {
    spec.tag = AuxCase::groups_margins;
    for (std::size_t h = 0; h < H; ++h) {
      const auto& cell = meta.group_totals.at(levels[h]);
      const std::string g = std::to_string(levels[h]);
      spec.column_names.insert(spec.column_names.end(), {"A:" + g, "B:" + g});
      spec.targets.insert(spec.targets.end(),
                          {require_meta(cell.A, "group frame-A margin"),
                           require_meta(cell.B, "group frame-B margin")});
    }
    spec.fill_row = [levels, group_var](const UnitRecord& u, std::span<double> out) {
      const long long g = std::llround(u.value(group_var));
      for (std::size_t h = 0; h < levels.size(); ++h) {
        if (levels[h] != g) continue;
        if (u.domain != DomainLabel::b) out[2 * h] = 1.0;
        if (u.domain != DomainLabel::a) out[2 * h + 1] = 1.0;
        return;
      }
      throw ValidationError("unit " + u.id + ": group level not in totals");
    };
  }
  return spec;
}

AuxSpec with_overlap_mean_constraint(AuxSpec spec, double eta, const FrameMeta& meta,
                                     const std::string& y_name) {
  if (spec.tag != AuxCase::case1 && spec.tag != AuxCase::case3)
    throw ValidationError(
        "overlap-mean restriction applies on top of case-1 or case-3 systems");
  if (!(eta > 0.0 && eta < 1.0))
    throw ValidationError("overlap-mean restriction needs eta strictly inside (0, 1)");
  const double nab = require_meta(meta.N_ab, "N_ab");
  const double ca = 1.0 / (eta * nab);
  const double cb = 1.0 / ((1.0 - eta) * nab);
  spec.column_names.push_back("mean(" + y_name + "):ab-ba");
  spec.targets.push_back(0.0);
  spec.variable_tag = y_name;
  if (spec.tag == AuxCase::case1 || spec.tag == AuxCase::case3)
    spec.tag = AuxCase::overlap_mean;
  const std::size_t p0 = spec.size() - 1;
  auto base = spec.fill_row;
  spec.fill_row = [base, p0, ca, cb, y_name](const UnitRecord& u, std::span<double> out) {
    base(u, out);
    if (u.domain == DomainLabel::ab) out[p0] = ca * u.value(y_name);
    else if (u.domain == DomainLabel::ba) out[p0] = -cb * u.value(y_name);
  };
  return spec;
}

// --- solver --------------------------------------------------------------

namespace {

struct ConstraintSystem {
  Eigen::MatrixXd X;       // n x p, reduced columns
  Eigen::VectorXd d;       // base weights (zeros allowed)
  Eigen::VectorXd t;       // reduced targets
  std::vector<int> cols;   // reduced -> original column index
  std::vector<bool> forced_zero;  // per unit
};

// Drops zero-target columns whose sample entries are all of one sign; the
// units loading on them get weight zero. This is how a zero cell total
// (eta at 0 or 1, empty group target) stays feasible for ratio distances.
ConstraintSystem reduce_system(const DualFrameSample& sample, const WeightVector& base,
                               const AuxSpec& spec) {
  const std::size_t n = sample.units.size();
  const std::size_t p = spec.size();
  Eigen::MatrixXd X(n, p);
  std::vector<double> rowbuf(p);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(rowbuf.begin(), rowbuf.end(), 0.0);
    spec.fill_row(sample.units[i], rowbuf);
    for (std::size_t j = 0; j < p; ++j) X(i, j) = rowbuf[j];
  }

  ConstraintSystem sys;
  sys.forced_zero.assign(n, false);
  std::vector<bool> drop(p, false);
  for (std::size_t j = 0; j < p; ++j) {
    if (spec.targets[j] != 0.0) continue;
    bool nonneg = true, nonpos = true, any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = X(i, j);
      if (v > 0) { nonpos = false; any = true; }
      if (v < 0) { nonneg = false; any = true; }
    }
    if (any && (nonneg || nonpos)) {
      drop[j] = true;
      for (std::size_t i = 0; i < n; ++i)
        if (X(i, j) != 0.0) sys.forced_zero[i] = true;
    }
  }

  for (std::size_t j = 0; j < p; ++j)
    if (!drop[j]) sys.cols.push_back(static_cast<int>(j));

  sys.X.resize(n, sys.cols.size());
  sys.t.resize(sys.cols.size());
  for (std::size_t jj = 0; jj < sys.cols.size(); ++jj) {
    sys.X.col(jj) = X.col(sys.cols[jj]);
    sys.t(jj) = spec.targets[sys.cols[jj]];
  }
  sys.d.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    sys.d(i) = sys.forced_zero[i] ? 0.0 : base[i];
  return sys;
}

void check_rank(const ConstraintSystem& sys, const AuxSpec& spec) {
  // Pivoted QR of sqrt(d) X; factoring X^T D X instead would square the
  // condition number and mistake scale disparity for collinearity.
  Eigen::MatrixXd W = sys.X;
  for (Eigen::Index i = 0; i < W.rows(); ++i) W.row(i) *= std::sqrt(sys.d(i));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank < W.cols()) {
    const auto& perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "infeasible or collinear constraints; dependent columns:";
    for (Eigen::Index j = rank; j < W.cols(); ++j)
      msg << ' ' << spec.column_names[sys.cols[perm(j)]];
    throw ConvergenceError(msg.str());
  }
}

}  // namespace

CalibrationResult calibrate(const DualFrameSample& sample, const WeightVector& base,
                            const AuxSpec& spec, const DistanceKind& distance,
                            const CalibrateOptions& opts) {
  if (base.size() != sample.units.size())
    throw ValidationError("weight vector does not match sample");
  for (double v : base.values)
    if (v < 0 || !std::isfinite(v))
      throw ValidationError("base weights must be nonnegative");

  ConstraintSystem sys = reduce_system(sample, base, spec);
  const auto n = sys.X.rows();
  const auto p = sys.X.cols();
  check_rank(sys, spec);

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd u(n), w(n), fp(n);

  auto evaluate = [&](const Eigen::VectorXd& lam, Eigen::VectorXd& uu,
                      Eigen::VectorXd& ww) -> bool {
    uu = sys.X * lam;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (sys.d(i) == 0.0) {
        ww(i) = 0.0;
        continue;
      }
      if (!distance.in_domain(uu(i))) return false;
      ww(i) = sys.d(i) * distance.F(uu(i));
    }
    return true;
  };

  auto residual_norm = [&](const Eigen::VectorXd& ww) {
    const Eigen::VectorXd r = sys.X.transpose() * ww - sys.t;
    double m = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double rel = std::abs(r(j)) / std::max(1.0, std::abs(sys.t(j)));
      if (!std::isfinite(rel)) return std::numeric_limits<double>::infinity();
      m = std::max(m, rel);
    }
    return m;
  };

  // Line-search merit: the convex dual sum d Psi(x lambda) - lambda't, whose
  // gradient is the constraint residual. Newton with backtracking on this
  // objective converges whenever the constraints are attainable.
  auto dual_objective = [&](const Eigen::VectorXd& lam, const Eigen::VectorXd& uu) {
    double val = -lam.dot(sys.t);
    for (Eigen::Index i = 0; i < n; ++i)
      if (sys.d(i) != 0.0) val += sys.d(i) * distance.Psi(uu(i));
    return val;
  };

  if (!evaluate(lambda, u, w))
    throw ConvergenceError("base weights outside the distance domain");
  double res = residual_norm(w);
  double obj = dual_objective(lambda, u);

  CalibrationResult out;
  out.iterations = 1;
  bool converged = res <= opts.tolerance;

  while (!converged && out.iterations < opts.max_iterations) {
    for (Eigen::Index i = 0; i < n; ++i)
      fp(i) = sys.d(i) == 0.0 ? 0.0 : sys.d(i) * distance.F_prime(u(i));
    const Eigen::MatrixXd J = sys.X.transpose() * fp.asDiagonal() * sys.X;
    const Eigen::VectorXd grad = sys.X.transpose() * w - sys.t;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
    if (ldlt.info() != Eigen::Success)
      throw ConvergenceError("singular Jacobian in calibration step");
    const Eigen::VectorXd delta = ldlt.solve(-grad);
    if (!delta.allFinite())
      throw ConvergenceError("singular Jacobian in calibration step");
    const double slope = grad.dot(delta);  // negative along a descent direction

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd lam_try, u_try(n), w_try(n);
    while (step >= opts.step_floor) {
      lam_try = lambda + step * delta;
      if (evaluate(lam_try, u_try, w_try)) {
        const double res_try = residual_norm(w_try);
        const double obj_try = dual_objective(lam_try, u_try);
        const bool armijo =
            std::isfinite(obj_try) && obj_try <= obj + 1e-4 * step * slope;
        if (armijo || res_try <= opts.tolerance) {
          lambda = lam_try;
          u = u_try;
          w = w_try;
          res = res_try;
          obj = obj_try;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("calibration step damping reached its floor");
    ++out.iterations;
    converged = res <= opts.tolerance;
  }

  out.converged = converged;
  out.max_constraint_residual = res;
  out.lambda.assign(spec.size(), 0.0);
  for (std::size_t jj = 0; jj < sys.cols.size(); ++jj)
    out.lambda[sys.cols[jj]] = lambda(jj);
  out.weights.tag = WeightTag::calibrated;
  out.weights.values.resize(sample.units.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.weights.values[i] = w(i);
    if (w(i) < 0) ++out.negative_weights;
  }
  return out;
}

WeightVector poststrat_closed_form(const DualFrameSample& sample, const FrameMeta& meta,
                                   double eta, Approach approach,
                                   const std::optional<std::string>& group_var) {
  check_eta(eta);
  // Cell key: group level (0 when ungrouped) x merged-or-split domain.
  struct Cell {
    double d_hat = 0;  // estimated cell count under the relevant base weight
    double target = 0;
  };
  std::map<std::pair<long long, int>, Cell> cells;

  auto domain_slot = [&](DomainLabel d) {
    if (approach == Approach::single && in_overlap(d)) return 1;
    switch (d) {
      case DomainLabel::a: return 0;
      case DomainLabel::ab: return 1;
      case DomainLabel::ba: return 2;
      case DomainLabel::b: return 3;
    }
    return 0;
  };
  auto base_weight = [&](const UnitRecord& u) -> double {
    if (approach == Approach::single && in_overlap(u.domain))
      return 1.0 / (1.0 / u.d_A.value() + 1.0 / u.d_B.value());
    if (in_frame_a(u.domain)) return u.d_A.value();
    return u.d_B.value();
  };
  auto level_of = [&](const UnitRecord& u) -> long long {
    return group_var ? std::llround(u.value(*group_var)) : 0;
  };

  for (const auto& u : sample.units)
    cells[{level_of(u), domain_slot(u.domain)}].d_hat += base_weight(u);

  auto cell_target = [&](long long level, int slot) -> double {
    double na, nab, nb;
    if (group_var) {
      auto it = meta.group_totals.find(level);
      if (it == meta.group_totals.end())
        throw ValidationError("group level " + std::to_string(level) +
                              " missing from totals");
      na = require_meta(it->second.a, "group domain-a count");
      nab = require_meta(it->second.ab, "group domain-ab count");
      nb = require_meta(it->second.b, "group domain-b count");
    } else {
      require_meta(meta.N_ab, "N_ab");
      na = meta.N_a();
      nab = *meta.N_ab;
      nb = meta.N_b();
    }
    if (approach == Approach::single) {
      return slot == 0 ? na : slot == 1 ? nab : nb;
    }
    switch (slot) {
      case 0: return na;
      case 1: return eta * nab;
      case 2: return (1.0 - eta) * nab;
      default: return nb;
    }
  };

  WeightVector out;
  out.tag = WeightTag::calibrated;
  out.values.reserve(sample.units.size());
  for (const auto& u : sample.units) {
    const auto key = std::make_pair(level_of(u), domain_slot(u.domain));
    const Cell& cell = cells.at(key);
    const double target = cell_target(key.first, key.second);
    if (target == 0.0) {
      out.values.push_back(0.0);
      continue;
    }
    if (cell.d_hat == 0.0) {
      std::ostringstream msg;
      msg << "empty cell (domain slot " << key.second;
      if (group_var) msg << ", group " << key.first;
      msg << ") with nonzero target";
      throw ValidationError(msg.str());
    }
    out.values.push_back(base_weight(u) * target / cell.d_hat);
  }
  return out;
}

double nab_calibrated(const DualFrameSample& sample, const FrameMeta& meta, double eta) {
  check_eta(eta);
  const double NA = require_meta(meta.N_A, "N_A");
  const double NB = require_meta(meta.N_B, "N_B");
  const DomainSizeEstimates s = domain_size_estimates(sample);
  const double nab_h = eta * s.Nab + (1.0 - eta) * s.Nba;
  const double NA_hat = s.Na + nab_h;
  const double NB_hat = s.Nb + nab_h;
  const double num = s.Na * NB + s.Nb * NA - s.Na * s.Nb;
  const double den = s.Na * NB_hat + s.Nb * NA_hat - s.Na * s.Nb;
  if (den == 0.0) throw ConvergenceError("overlap adjustment has zero denominator");
  return nab_h * num / den;
}

GregResult greg_estimate(const DualFrameSample& sample, const WeightVector& base,
                         const AuxSpec& spec, const std::string& variable) {
  const std::size_t n = sample.units.size();
  const std::size_t p = spec.size();
  if (base.size() != n) throw ValidationError("weight vector does not match sample");

  // Weighted least squares through QR of sqrt(d) X (rank-revealing without
  // squaring the condition number).
  Eigen::MatrixXd W(n, p);
  Eigen::VectorXd wy(n);
  Eigen::VectorXd t_hat = Eigen::VectorXd::Zero(p);
  double base_total = 0;
  std::vector<double> rowbuf(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = base[i];
    std::fill(rowbuf.begin(), rowbuf.end(), 0.0);
    spec.fill_row(sample.units[i], rowbuf);
    Eigen::Map<const Eigen::VectorXd> x(rowbuf.data(), p);
    const double yv = d != 0.0 ? sample.units[i].value(variable) : 0.0;
    const double sq = std::sqrt(d);
    W.row(i) = sq * x.transpose();
    wy(i) = sq * yv;
    if (d != 0.0) {
      t_hat.noalias() += d * x;
      base_total += d * yv;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(p))
    throw ConvergenceError("singular moment matrix");
  const Eigen::VectorXd beta = qr.solve(wy);

  GregResult out;
  out.beta.assign(beta.data(), beta.data() + p);
  Eigen::Map<const Eigen::VectorXd> t(spec.targets.data(), p);
  out.estimate = base_total + (t - t_hat).dot(beta);
  return out;
}

CombinedRegressionResult xa_combined_regression(const DualFrameSample& sample,
                                                const FrameMeta& meta, double eta,
                                                const std::string& x_a,
                                                const std::string& variable) {
  check_eta(eta);
  require_meta(meta.N_ab, "N_ab");

  struct DomainStats {
    double n_hat = 0, x_sum = 0, y_sum = 0;
    double sxx = 0, sxy = 0;
    double x_bar = 0, y_bar = 0;
  };
  auto collect = [&](DomainLabel dom, bool with_x) {
    DomainStats s;
    for (const auto& u : sample.units) {
      if (u.domain != dom) continue;
      const double d = in_frame_a(dom) ? u.d_A.value() : u.d_B.value();
      s.n_hat += d;
      s.y_sum += d * u.value(variable);
      if (with_x) s.x_sum += d * u.value(x_a);
    }
    if (s.n_hat == 0.0)
      throw ValidationError(std::string("domain ") + to_string(dom) + " unsampled");
    s.x_bar = s.x_sum / s.n_hat;
    s.y_bar = s.y_sum / s.n_hat;
    if (with_x) {
      for (const auto& u : sample.units) {
        if (u.domain != dom) continue;
        const double d = in_frame_a(dom) ? u.d_A.value() : u.d_B.value();
        const double dx = u.value(x_a) - s.x_bar;
        s.sxx += d * dx * dx;
        s.sxy += d * dx * (u.value(variable) - s.y_bar);
      }
    }
    return s;
  };

  const DomainStats sa = collect(DomainLabel::a, true);
  const DomainStats sab = collect(DomainLabel::ab, true);
  const DomainStats sba = collect(DomainLabel::ba, true);
  const DomainStats sb = collect(DomainLabel::b, false);

  const double sxx = sa.sxx + eta * sab.sxx + (1.0 - eta) * sba.sxx;
  if (sxx == 0.0)
    throw ValidationError("degenerate regressor: zero pooled variance of " + x_a);
  const double sxy = sa.sxy + eta * sab.sxy + (1.0 - eta) * sba.sxy;

  const double XA = meta.require_total(x_a, FrameMeta::Scope::A);
  const double nab = *meta.N_ab;
  const double y_haj = meta.N_a() * sa.y_bar + eta * nab * sab.y_bar +
                       (1.0 - eta) * nab * sba.y_bar + meta.N_b() * sb.y_bar;
  const double xa_haj =
      meta.N_a() * sa.x_bar + eta * nab * sab.x_bar + (1.0 - eta) * nab * sba.x_bar;

  CombinedRegressionResult out;
  out.beta_A = sxy / sxx;
  out.estimate = y_haj + (XA - xa_haj) * out.beta_A;
  return out;
}

}  // namespace dualframe
