#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaclab/characteristics.hpp"
#include "vaclab/exponents.hpp"
#include "vaclab/pde_solver.hpp"
#include "vaclab/vacuum.hpp"

namespace vaclab {

/// Configuration error carrying the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
public:
  ConfigError(const std::string& location, const std::string& message)
      : std::invalid_argument(location + ": " + message), location_(location) {}
  const std::string& location() const { return location_; }

private:
  std::string location_;
};

/// Axis-aligned region removed from the support of an initial field.
struct Region {
  enum class Shape { ball, box };
  Shape shape = Shape::ball;
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(const Point& x, int dim) const;
};

/// Initial data: constant, cosine (mean + amplitude Π cos(2π k_a (x_a − c_a)/L_a))
/// or gaussian (mean + amplitude exp(−|x−c|²/w²)), then set to exactly zero
/// on every vacuum region.
struct InitialSpec {
  std::string kind = "constant";
  double value = 1.0;
  double mean = 1.0;
  double amplitude = 0.0;
  double width = 0.1;
  std::vector<double> center;
  std::vector<double> modes;
  std::vector<Region> vacuum;

  InitialData function(const Domain& domain) const;
};

struct FieldSpec {
  std::string name;
  Equation equation = Equation::continuity;
  InitialSpec initial;
  /// "oracle" (characteristics) or "solver".
  std::string source = "oracle";
  Scheme scheme = Scheme::upwind_fv;
};

struct HypothesisSpec {
  Exponent p = Exponent::infinity();
  Exponent q = Exponent::infinity();
  ExponentTuple rho;
  ExponentTuple s;
  /// vacuum_continuity, vacuum_inclusion, time_shift, product,
  /// product_time_integrated, renormalization.
  std::vector<std::string> checks;
};

struct HypothesisVerdict {
  std::string check;
  Verdict verdict;
};

struct AnalysisSpec {
  std::string type;
  nlohmann::json params;
  std::string location;
};

struct Scenario {
  std::string name;
  DomainKind domain_kind = DomainKind::lipschitz_box;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> cells;
  double t_final = 1.0;
  std::string velocity_id;
  ParamMap velocity_params;
  std::vector<FieldSpec> fields;
  SolverConfig solver;
  int oracle_steps_per_unit = 2048;
  std::optional<HypothesisSpec> hypotheses;
  std::vector<AnalysisSpec> analyses;

  Domain domain() const;
  GridPtr grid() const;
  VelocityField velocity() const;
  const FieldSpec& field(const std::string& name) const;
  /// The same scenario with 2^level times more cells and output intervals.
  Scenario refined(int level) const;
};

/// Parses JSON scenario text. Unknown keys, missing fields, unknown ids and
/// (when `enforce_gate`) violated theorem hypotheses raise ConfigError.
Scenario parse_config(const std::string& text, bool enforce_gate = true);

/// Verdict of each requested theorem check.
std::vector<HypothesisVerdict> evaluate_hypotheses(const Scenario& s);

struct RunOptions {
  bool dump_fields = false;
};

struct ScenarioCriterion {
  Criterion criterion;
  /// An error measure expected to shrink at least at first order under refinement.
  bool refines = false;
};

struct Report {
  std::string scenario;
  std::vector<ScenarioCriterion> criteria;
  /// Output files keyed by relative path; contents are deterministic.
  std::map<std::string, std::string> files;
  std::vector<std::string> diagnostics;

  bool passed() const;
  nlohmann::json summary() const;
};

/// Generates every field at the solver output times and runs the analyses.
Report run_scenario(const Scenario& s, const RunOptions& opts = {});

/// Trajectory of one field at the given times from its oracle or solver.
struct FieldRun {
  Trajectory trajectory;
  CellMask valid;
  bool completed = true;
  std::string diagnostic;
};
FieldRun generate_field(const Scenario& s, const FieldSpec& f, const std::vector<double>& times);

struct ReplaySegment {
  double start;
  double end;
  double product_deviation;
  double max_inclusion_defect;
  double r_vacuum_measure_max;
};

struct ReplayReport {
  std::vector<ReplaySegment> segments;
  /// Σ over segments of the per-segment conserved product deviation.
  double stitched_product_deviation = 0.0;
  double max_inclusion_defect = 0.0;
  nlohmann::json to_json() const;
};

/// Replays R shifted in time, R̃_k(t) = R(t − a_k) with a_k = t0 − τ + kτ,
/// over segments covering [0, t_final], and checks inclusion and product
/// conservation against ρ on each. Uses fields "rho" and "R". Rejects
/// time-dependent velocities.
ReplayReport time_shift_replay(const Scenario& s, double t0, double tau, double threshold = 0.0);

struct ConvergeRow {
  std::string name;
  std::vector<double> values;
  std::vector<double> ratios;
  /// |v_k| ≤ 1.3 |v_0| 2^{−k} for every level k.
  bool first_order = false;
};

struct ConvergeReport {
  std::vector<ConvergeRow> rows;
  bool passed() const;
  nlohmann::json to_json() const;
  std::string csv() const;
};

/// Runs the scenario at refinement levels 0..levels−1 and tabulates every
/// criterion flagged as refining.
ConvergeReport converge(const Scenario& s, int levels);

}  // namespace vaclab
