#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaclab/domain_fields.hpp"
#include "vaclab/weak_forms.hpp"

namespace vaclab {

/// 1 where |ρ| ≤ threshold, 0 elsewhere; threshold 0 is the exact-zero test.
ScalarField vacuum_indicator(const ScalarField& rho, double threshold);

/// |{|ρ| ≤ threshold}|.
double vacuum_measure(const ScalarField& rho, double threshold);

struct ModulusRow {
  std::size_t stride;
  double gap;
  double max_jump;
};

struct MeasureSeries {
  std::vector<double> times;
  std::vector<double> measures;
  std::vector<ModulusRow> modulus;
  /// Exponent s of max_jump ≈ C gap^s over the resolved rows; +∞ when every
  /// jump vanishes, NaN with fewer than two resolved rows.
  double fitted_exponent = 0.0;
  bool continuous = false;
};

/// Per-snapshot vacuum measures and, for index strides 1, 2, 4, … up to a
/// quarter of the series, the largest jump over that stride. Rows whose jump
/// is below `resolution` are unresolved and excluded from the fit.
MeasureSeries vacuum_measure_series(const Trajectory& traj, double threshold, double resolution = 0.0);

/// Measure of {|ρ(t)| ≤ thr} ∩ {R(t) > thr} at every snapshot.
std::vector<double> inclusion_defect(const Trajectory& rho, const Trajectory& R, double threshold);

struct ProductSeries {
  std::vector<double> times;
  /// ∫ s_ρ(t) R(t) dx.
  std::vector<double> integral;
  /// ∫ s_ρ(0) R(t) dx.
  std::vector<double> integral_fixed_initial;
  double max_deviation = 0.0;
  double max_deviation_fixed_initial = 0.0;
};

ProductSeries conserved_product_deviation(const Trajectory& rho, const Trajectory& R, double threshold);

/// Pointwise product ρ·s at every snapshot.
Trajectory product_trajectory(const Trajectory& rho, const Trajectory& s);

/// Continuity residual of ρ·s for the given notion on [0, last time].
double product_residual(const Trajectory& rho, const Trajectory& s, const VelocityField& u, const TestFunction& phi,
                        Notion notion = Notion::time_integrated_weak);

struct BdeltaRow {
  double delta;
  double gap;
  /// δ/(δ+m)·|Ω| with m the least value above the threshold; absent when
  /// every cell is vacuum.
  std::optional<double> bound;
};

struct BdeltaTable {
  std::vector<BdeltaRow> rows;
  bool monotone = false;
  bool within_bound = false;
};

/// ‖b_δ(ρ) − s_ρ‖_{L¹} for each δ of a strictly decreasing positive list.
BdeltaTable bdelta_limit_error(const ScalarField& rho, const std::vector<double>& deltas, double threshold);

struct Criterion {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

nlohmann::json to_json(const Criterion& c);

struct VacuumReport {
  double threshold = 0.0;
  MeasureSeries measure;
  std::vector<double> inclusion_defects;
  std::optional<ProductSeries> product;
  std::vector<Criterion> criteria;

  nlohmann::json to_json() const;
  void write_series_csv(std::ostream& os) const;
};

/// Measure series always; inclusion and product series when R is given.
VacuumReport make_vacuum_report(const Trajectory& rho, const Trajectory* R, double threshold,
                                double resolution = 0.0);

}  // namespace vaclab
