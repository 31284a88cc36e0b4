#ifndef DUALFRAME_SURVEY_DATA_HPP
#define DUALFRAME_SURVEY_DATA_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualframe/errors.hpp"

namespace dualframe {

// Domains of a two-frame population. Units covered by both frames form one
// population domain, observed either from frame A (ab) or from frame B (ba).
enum class DomainLabel { a, ab, ba, b };

enum class Approach { dual, single };
enum class Frame { A, B };

const char* to_string(DomainLabel d);
DomainLabel domain_from_string(const std::string& s);

inline bool in_frame_a(DomainLabel d) { return d == DomainLabel::a || d == DomainLabel::ab; }
inline bool in_frame_b(DomainLabel d) { return d == DomainLabel::ba || d == DomainLabel::b; }
inline bool in_overlap(DomainLabel d) { return d == DomainLabel::ab || d == DomainLabel::ba; }

// One sampled unit. Design weights are reciprocals of the first-order
// inclusion probabilities in the frame the unit can be selected from;
// a weight may be absent when the corresponding probability is unknown.
struct UnitRecord {
  std::string id;
  DomainLabel domain = DomainLabel::a;
  std::optional<double> d_A;  // frame-A design weight 1/pi_A
  std::optional<double> d_B;  // frame-B design weight 1/pi_B
  std::optional<std::string> stratum_A;
  std::optional<std::string> stratum_B;
  std::map<std::string, double> y;    // response variables
  std::map<std::string, double> aux;  // auxiliary variables

  // Looks a variable up in the response map first, then in the auxiliaries.
  double value(const std::string& name) const;
  bool has_variable(const std::string& name) const;

  // Throws ValidationError on a missing/non-positive required weight.
  void check_invariants() const;
};

// Per-group known counts. Domain cells (a, ab, b) feed complete
// post-stratification; frame margins (A, B) feed the margins variant.
struct GroupCell {
  std::optional<double> a, ab, b;  // domain counts (ba count equals ab)
  std::optional<double> A, B;      // frame margins
};

// Frame-level population information: sizes, group counts, numeric totals.
// Absent means unknown; zero is a legitimate known value.
struct FrameMeta {
  std::optional<double> N_A, N_B, N_ab;

  enum class Scope { A, B, U };
  // variable name -> scope -> known population total
  std::map<std::string, std::map<Scope, double>> numeric_totals;
  // group level -> known counts
  std::map<long long, GroupCell> group_totals;
  // stratum id -> stratum population size, per frame (used by variance designs)
  std::map<std::string, double> strata_A, strata_B;

  bool sizes_known() const { return N_A && N_B && N_ab; }
  double N_a() const;  // N_A - N_ab; throws if sizes unknown
  double N_b() const;  // N_B - N_ab
  double N() const;    // N_a + N_b + N_ab

  std::optional<double> total(const std::string& name, Scope scope) const;
  double require_total(const std::string& name, Scope scope) const;

  void check_invariants() const;
};

const char* to_string(FrameMeta::Scope s);

// A dual-frame sample: unit records plus frame metadata. Immutable by
// convention after construction; all estimation routines take it by
// const reference and may be called concurrently.
struct DualFrameSample {
  std::vector<UnitRecord> units;
  FrameMeta meta;

  std::size_t n_A() const;
  std::size_t n_B() const;
  std::size_t domain_count(DomainLabel d) const;
  std::vector<std::size_t> domain_indices(DomainLabel d) const;
  std::vector<std::size_t> frame_indices(Frame f) const;

  // Basic invariants: unique ids, per-domain weight requirements.
  void check_invariants() const;
};

// Column mapping for CSV ingestion. Columns not mentioned anywhere are
// loaded as response variables; names listed in aux_columns are loaded
// as auxiliaries instead.
struct CsvSchema {
  std::string id = "id";
  std::string domain = "domain";
  std::string d_A = "d_A";
  std::string d_B = "d_B";
  std::string stratum_A = "stratum_A";
  std::string stratum_B = "stratum_B";
  std::vector<std::string> aux_columns;
};

// Reads a header CSV into a validated sample. Throws IoError on file
// problems, ValidationError on malformed rows (unknown domain label,
// non-positive weight, duplicate id, missing required column).
DualFrameSample load_sample(const std::string& path, const CsvSchema& schema = {});

// Writes the sample back as CSV, weights at full round-trip precision.
void save_sample(const DualFrameSample& sample, const std::string& path,
                 const CsvSchema& schema = {});

// Key-value metadata file: N_A / N_B / N_ab, totals.<name>.<scope>,
// groups.<level>.<cell>, strata.<frame>.<id>.
FrameMeta load_frame_meta(const std::string& path);
void save_frame_meta(const FrameMeta& meta, const std::string& path);

// Lists every requirement the sample violates under the given approach.
// Empty result means the sample is usable. Never throws on content.
std::vector<std::string> validate_for_approach(const DualFrameSample& sample,
                                               Approach approach);

}  // namespace dualframe

#endif  // DUALFRAME_SURVEY_DATA_HPP
