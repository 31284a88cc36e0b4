#include "dualframe/survey_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dualframe {

const char* to_string(DomainLabel d) {
  switch (d) {
    case DomainLabel::a: return "a";
    case DomainLabel::ab: return "ab";
    case DomainLabel::ba: return "ba";
    case DomainLabel::b: return "b";
  }
  return "?";
}

DomainLabel domain_from_string(const std::string& s) {
  if (s == "a") return DomainLabel::a;
  if (s == "ab") return DomainLabel::ab;
  if (s == "ba") return DomainLabel::ba;
  if (s == "b") return DomainLabel::b;
  throw ValidationError("unknown domain label '" + s + "'");
}

const char* to_string(FrameMeta::Scope s) {
  switch (s) {
    case FrameMeta::Scope::A: return "A";
    case FrameMeta::Scope::B: return "B";
    case FrameMeta::Scope::U: return "U";
  }
  return "?";
}

double UnitRecord::value(const std::string& name) const {
  if (auto it = y.find(name); it != y.end()) return it->second;
  if (auto it = aux.find(name); it != aux.end()) return it->second;
  throw ValidationError("unknown variable '" + name + "' on unit " + id);
}

bool UnitRecord::has_variable(const std::string& name) const {
  return y.count(name) > 0 || aux.count(name) > 0;
}

void UnitRecord::check_invariants() const {
  auto check_weight = [&](const std::optional<double>& w, const char* which) {
    if (!w) throw ValidationError("unit " + id + ": missing required weight " + which);
    if (!(*w > 0) || !std::isfinite(*w))
      throw ValidationError("unit " + id + ": non-positive weight " + which);
  };
  if (in_frame_a(domain)) check_weight(d_A, "d_A");
  if (in_frame_b(domain)) check_weight(d_B, "d_B");
  // The off-frame weight is optional but must be positive when present.
  if (d_A && !(*d_A > 0 && std::isfinite(*d_A)))
    throw ValidationError("unit " + id + ": non-positive weight d_A");
  if (d_B && !(*d_B > 0 && std::isfinite(*d_B)))
    throw ValidationError("unit " + id + ": non-positive weight d_B");
}

double FrameMeta::N_a() const {
  if (!sizes_known()) throw ValidationError("N_a requires N_A, N_B, N_ab known");
  return *N_A - *N_ab;
}

double FrameMeta::N_b() const {
  if (!sizes_known()) throw ValidationError("N_b requires N_A, N_B, N_ab known");
  return *N_B - *N_ab;
}

double FrameMeta::N() const { return N_a() + N_b() + *N_ab; }

std::optional<double> FrameMeta::total(const std::string& name, Scope scope) const {
  auto it = numeric_totals.find(name);
  if (it == numeric_totals.end()) return std::nullopt;
  auto jt = it->second.find(scope);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

double FrameMeta::require_total(const std::string& name, Scope scope) const {
  auto t = total(name, scope);
  if (!t)
    throw ValidationError("missing total for variable '" + name + "' on scope " +
                          to_string(scope));
  return *t;
}

void FrameMeta::check_invariants() const {
  if (sizes_known()) {
    if (*N_ab > std::min(*N_A, *N_B))
      throw ValidationError("N_ab exceeds a frame size");
    if (!(N_a() > 0)) throw ValidationError("N_a must be positive");
    if (!(N_b() > 0)) throw ValidationError("N_b must be positive");
  }
  for (const auto& [n, v] : {std::pair{"N_A", N_A}, {"N_B", N_B}, {"N_ab", N_ab}})
    if (v && (*v < 0 || !std::isfinite(*v)))
      throw ValidationError(std::string(n) + " must be nonnegative");
  // Group cells, when complete for a domain, must add up to the domain size.
  if (sizes_known() && !group_totals.empty()) {
    double sa = 0, sab = 0, sb = 0;
    bool all_a = true, all_ab = true, all_b = true;
    for (const auto& [g, cell] : group_totals) {
      if (cell.a) sa += *cell.a; else all_a = false;
      if (cell.ab) sab += *cell.ab; else all_ab = false;
      if (cell.b) sb += *cell.b; else all_b = false;
    }
    auto mismatch = [](double got, double want) {
      return std::abs(got - want) > 1e-6 * std::max(1.0, std::abs(want));
    };
    if (all_a && mismatch(sa, N_a()))
      throw ValidationError("group totals for domain a do not sum to N_a");
    if (all_ab && mismatch(sab, *N_ab))
      throw ValidationError("group totals for domain ab do not sum to N_ab");
    if (all_b && mismatch(sb, N_b()))
      throw ValidationError("group totals for domain b do not sum to N_b");
  }
}

std::size_t DualFrameSample::n_A() const {
  return static_cast<std::size_t>(
      std::count_if(units.begin(), units.end(),
                    [](const UnitRecord& u) { return in_frame_a(u.domain); }));
}

std::size_t DualFrameSample::n_B() const {
  return units.size() - n_A();
}

std::size_t DualFrameSample::domain_count(DomainLabel d) const {
  return static_cast<std::size_t>(
      std::count_if(units.begin(), units.end(),
                    [d](const UnitRecord& u) { return u.domain == d; }));
}

std::vector<std::size_t> DualFrameSample::domain_indices(DomainLabel d) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units.size(); ++i)
    if (units[i].domain == d) out.push_back(i);
  return out;
}

std::vector<std::size_t> DualFrameSample::frame_indices(Frame f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const bool in = f == Frame::A ? in_frame_a(units[i].domain)
                                  : in_frame_b(units[i].domain);
    if (in) out.push_back(i);
  }
  return out;
}

void DualFrameSample::check_invariants() const {
  std::set<std::string> ids;
  for (const auto& u : units) {
    u.check_invariants();
    if (!ids.insert(u.id).second)
      throw ValidationError("duplicate id '" + u.id + "'");
  }
  meta.check_invariants();
}

// --- CSV ------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ValidationError("cannot parse number '" + s + "' (" + context + ")");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool csv_needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string csv_escape(const std::string& s) {
  if (!csv_needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

DualFrameSample load_sample(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);

  auto column = [&](const std::string& name) -> int {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (trim(header[j]) == name) return static_cast<int>(j);
    return -1;
  };

  const int c_id = column(schema.id);
  const int c_domain = column(schema.domain);
  if (c_id < 0) throw ValidationError("missing column '" + schema.id + "'");
  if (c_domain < 0) throw ValidationError("missing column '" + schema.domain + "'");
  const int c_dA = column(schema.d_A);
  const int c_dB = column(schema.d_B);
  const int c_sA = column(schema.stratum_A);
  const int c_sB = column(schema.stratum_B);

  std::vector<std::pair<int, std::string>> var_columns;  // (index, name)
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string name = trim(header[j]);
    const int ji = static_cast<int>(j);
    if (ji == c_id || ji == c_domain || ji == c_dA || ji == c_dB || ji == c_sA ||
        ji == c_sB)
      continue;
    var_columns.emplace_back(ji, name);
  }

  auto is_aux = [&](const std::string& name) {
    return std::find(schema.aux_columns.begin(), schema.aux_columns.end(), name) !=
           schema.aux_columns.end();
  };

  DualFrameSample sample;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    auto field = [&](int j) -> std::string {
      return j >= 0 && j < static_cast<int>(f.size()) ? trim(f[j]) : "";
    };

    UnitRecord u;
    u.id = field(c_id);
    if (u.id.empty())
      throw ValidationError("line " + std::to_string(lineno) + ": empty id");
    u.domain = domain_from_string(field(c_domain));
    if (std::string v = field(c_dA); !v.empty()) u.d_A = parse_double(v, "d_A");
    if (std::string v = field(c_dB); !v.empty()) u.d_B = parse_double(v, "d_B");
    if (std::string v = field(c_sA); !v.empty()) u.stratum_A = v;
    if (std::string v = field(c_sB); !v.empty()) u.stratum_B = v;
    for (const auto& [j, name] : var_columns) {
      std::string v = field(j);
      if (v.empty()) continue;
      (is_aux(name) ? u.aux : u.y)[name] = parse_double(v, name);
    }
    sample.units.push_back(std::move(u));
  }

  sample.check_invariants();
  return sample;
}

void save_sample(const DualFrameSample& sample, const std::string& path,
                 const CsvSchema& schema) {
  // Union of variable names over all units, in sorted order.
  std::set<std::string> y_names, aux_names;
  for (const auto& u : sample.units) {
    for (const auto& [k, v] : u.y) y_names.insert(k);
    for (const auto& [k, v] : u.aux) aux_names.insert(k);
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << schema.id << ',' << schema.domain << ',' << schema.d_A << ',' << schema.d_B
      << ',' << schema.stratum_A << ',' << schema.stratum_B;
  for (const auto& n : y_names) out << ',' << csv_escape(n);
  for (const auto& n : aux_names) out << ',' << csv_escape(n);
  out << '\n';

  for (const auto& u : sample.units) {
    out << csv_escape(u.id) << ',' << to_string(u.domain) << ','
        << (u.d_A ? format_double(*u.d_A) : "") << ','
        << (u.d_B ? format_double(*u.d_B) : "") << ','
        << (u.stratum_A ? csv_escape(*u.stratum_A) : "") << ','
        << (u.stratum_B ? csv_escape(*u.stratum_B) : "");
    auto emit = [&](const std::map<std::string, double>& m, const std::string& n) {
      out << ',';
      if (auto it = m.find(n); it != m.end()) out << format_double(it->second);
    };
    for (const auto& n : y_names) emit(u.y, n);
    for (const auto& n : aux_names) emit(u.aux, n);
    out << '\n';
  }
}

// --- metadata config --------------------------------------------------------

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

FrameMeta load_frame_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  FrameMeta meta;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const double value = parse_double(line.substr(eq + 1), key);

    if (key == "N_A") { meta.N_A = value; continue; }
    if (key == "N_B") { meta.N_B = value; continue; }
    if (key == "N_ab") { meta.N_ab = value; continue; }

    const auto parts = split_on(key, '.');
    if (parts.size() == 3 && parts[0] == "totals") {
      FrameMeta::Scope scope;
      if (parts[2] == "A") scope = FrameMeta::Scope::A;
      else if (parts[2] == "B") scope = FrameMeta::Scope::B;
      else if (parts[2] == "U") scope = FrameMeta::Scope::U;
      else throw ValidationError("bad totals scope '" + parts[2] + "'");
      meta.numeric_totals[parts[1]][scope] = value;
      continue;
    }
    if (parts.size() == 3 && parts[0] == "groups") {
      const long long level = std::stoll(parts[1]);
      GroupCell& cell = meta.group_totals[level];
      if (parts[2] == "a") cell.a = value;
      else if (parts[2] == "ab") cell.ab = value;
      else if (parts[2] == "b") cell.b = value;
      else if (parts[2] == "A") cell.A = value;
      else if (parts[2] == "B") cell.B = value;
      else throw ValidationError("bad group cell '" + parts[2] + "'");
      continue;
    }
    if (parts.size() == 3 && parts[0] == "strata") {
      if (parts[1] == "A") meta.strata_A[parts[2]] = value;
      else if (parts[1] == "B") meta.strata_B[parts[2]] = value;
      else throw ValidationError("bad strata frame '" + parts[1] + "'");
      continue;
    }
    throw ValidationError("unknown metadata key '" + key + "'");
  }
  meta.check_invariants();
  return meta;
}

void save_frame_meta(const FrameMeta& meta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  if (meta.N_A) out << "N_A = " << format_double(*meta.N_A) << '\n';
  if (meta.N_B) out << "N_B = " << format_double(*meta.N_B) << '\n';
  if (meta.N_ab) out << "N_ab = " << format_double(*meta.N_ab) << '\n';
  for (const auto& [name, scopes] : meta.numeric_totals)
    for (const auto& [scope, v] : scopes)
      out << "totals." << name << '.' << to_string(scope) << " = " << format_double(v)
          << '\n';
  for (const auto& [level, cell] : meta.group_totals) {
    auto emit = [&](const std::optional<double>& v, const char* tag) {
      if (v) out << "groups." << level << '.' << tag << " = " << format_double(*v) << '\n';
    };
    emit(cell.a, "a");
    emit(cell.ab, "ab");
    emit(cell.b, "b");
    emit(cell.A, "A");
    emit(cell.B, "B");
  }
  for (const auto& [id, n] : meta.strata_A)
    out << "strata.A." << id << " = " << format_double(n) << '\n';
  for (const auto& [id, n] : meta.strata_B)
    out << "strata.B." << id << " = " << format_double(n) << '\n';
}

std::vector<std::string> validate_for_approach(const DualFrameSample& sample,
                                               Approach approach) {
  std::vector<std::string> report;
  for (DomainLabel d : {DomainLabel::a, DomainLabel::ab, DomainLabel::ba, DomainLabel::b})
    if (sample.domain_count(d) == 0)
      report.push_back(std::string("domain ") + to_string(d) + " unsampled");
  for (const auto& u : sample.units) {
    if (in_frame_a(u.domain) && !u.d_A)
      report.push_back("unit " + u.id + " lacks d_A");
    if (in_frame_b(u.domain) && !u.d_B)
      report.push_back("unit " + u.id + " lacks d_B");
    if (approach == Approach::single && in_overlap(u.domain)) {
      if (!u.d_A) report.push_back("overlap unit " + u.id + " lacks d_A (single-frame)");
      if (!u.d_B) report.push_back("overlap unit " + u.id + " lacks d_B (single-frame)");
    }
  }
  return report;
}

}  // namespace dualframe
