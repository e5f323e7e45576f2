#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vaclab/domain_fields.hpp"
#include "vaclab/velocity_catalog.hpp"

namespace vaclab {

/// Endpoint of one characteristic together with L = ∫ div u(σ, X(σ)) dσ taken
/// in the direction of integration.
struct Characteristic {
  Point x{};
  double log_jacobian = 0.0;
  bool escaped = false;
};

/// Classical RK4 on (X, L) from t0 to t1 (t1 < t0 integrates backwards) in
/// `steps` equal steps. On a box, leaving the closure flags an escape.
Characteristic trace_characteristic(const VelocityField& u, const Domain& domain, const Point& x, double t0,
                                    double t1, int steps);

/// Forward flow X(t; x) and log-Jacobian L(t; x) from every cell centre,
/// recorded at the requested times.
struct FlowMap {
  std::shared_ptr<const VelocityField> velocity;
  GridPtr grid;
  double t_start = 0.0;
  std::vector<double> times;  // offsets from t_start, increasing, first 0
  double step = 0.0;
  int order = 4;
  std::vector<std::vector<Point>> positions;
  std::vector<std::vector<double>> log_jacobian;
  std::vector<CellMask> valid;

  std::size_t time_index(double t) const;
  double horizon() const { return times.back(); }
  /// Step count for integrating over |span| at the flow's nominal step.
  int steps_for(double span) const;
};

/// `rk_steps` RK4 steps cover [t_start, t_start + max(times)].
FlowMap compute_flow(const VelocityField& u, GridPtr grid, std::vector<double> times, int rk_steps,
                     double t_start = 0.0);

struct OracleField {
  ScalarField field;
  CellMask valid;
  std::size_t escaped = 0;
};

using InitialData = std::function<double(const Point&)>;

/// ρ(t, y) = ρ₀(X⁻¹(t; y)) e^{−L}, by backward characteristics from each cell
/// centre. Escaped cells hold 0 and are marked invalid.
OracleField exact_continuity(const InitialData& rho0, const FlowMap& flow, double t);
OracleField exact_continuity(const ScalarField& rho0, const FlowMap& flow, double t);

/// s(t, y) = s₀(X⁻¹(t; y)).
OracleField exact_transport(const InitialData& s0, const FlowMap& flow, double t);
OracleField exact_transport(const ScalarField& s0, const FlowMap& flow, double t);

/// ∫_{ρ₀=0} e^{L(t;x)} dx over non-escaped cells.
double exact_vacuum_measure(const ScalarField& rho0, const FlowMap& flow, double t);

enum class Equation { continuity, transport };

struct OracleTrajectory {
  Trajectory trajectory;
  std::vector<CellMask> valid;
  std::size_t escaped = 0;
};

/// Oracle solution at every output time. Time-independent velocities reuse a
/// single backward sweep per cell; otherwise each time is traced separately.
/// `steps_per_unit` RK4 steps per unit time.
OracleTrajectory oracle_trajectory(Equation eq, const InitialData& initial, const VelocityField& u,
                                   const GridPtr& grid, const std::vector<double>& times,
                                   int steps_per_unit, bool nonnegative);

/// Valid where every mask in the list is valid.
CellMask intersect_masks(const std::vector<CellMask>& masks, std::size_t cells);

}  // namespace vaclab
