#pragma once

#include <string>
#include <vector>

#include "vaclab/domain_fields.hpp"
#include "vaclab/velocity_catalog.hpp"

namespace vaclab {

enum class Scheme { upwind_fv, semi_lagrangian };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct SolverConfig {
  double cfl = 0.9;
  Scheme scheme = Scheme::upwind_fv;
  double t_final = 1.0;
  /// Explicit output times; 0 is prepended when missing. Empty means
  /// `outputs` equal intervals over [0, t_final].
  std::vector<double> output_times;
  int outputs = 64;

  void validate() const;
  std::vector<double> resolved_output_times() const;
};

/// Normal velocity on every cell face at time t. Lower face of cell c along
/// axis a is faces[a][c]; the upper face of the last cell on a periodic axis
/// is the lower face of the first. Box boundaries store the upper wall in
/// upper_wall[a] indexed by the transverse cell.
struct FaceVelocities {
  std::array<std::vector<double>, 3> lower;
  std::array<std::vector<double>, 3> upper_wall;
};

/// Face-averaged normal velocities: exact stream-function differences when
/// the field has one (discretely divergence free), face-centre samples
/// otherwise. Zero-trace fields get exactly zero wall velocity.
FaceVelocities face_velocities(const VelocityField& u, const Grid& grid, double t);

/// Largest dt with dt·Σ_a (outflow through the faces normal to a)/h_a ≤ cfl
/// in every cell at time t; t_final when nothing flows.
double cfl_dt(const VelocityField& u, const Grid& grid, double cfl, double t = 0.0);

/// Conservative first-order upwind step for ∂_t ρ + div(ρu) = 0 with face
/// velocities at t + dt/2. Walls carry no flux for zero-trace fields and
/// upwind flux with vacuum exterior data otherwise. Throws std::domain_error
/// when dt violates the positivity bound.
ScalarField step_continuity(const ScalarField& rho, const VelocityField& u, double dt, double t = 0.0);
ScalarField step_continuity(const ScalarField& rho, const FaceVelocities& faces, double dt);

struct StepStats {
  std::size_t boundary_extensions = 0;
};

/// Semi-Lagrangian step for ∂_t s + u·∇s = 0: midpoint backtrace, then
/// multilinear interpolation. Departure points outside a box are clamped to
/// the closure and counted. Throws std::domain_error when the backtrace
/// could cross more than one cell.
ScalarField step_transport(const ScalarField& s, const VelocityField& u, double dt, double t = 0.0,
                           StepStats* stats = nullptr);

struct SolveResult {
  Trajectory trajectory;
  bool completed = true;
  std::string diagnostic;
  std::size_t steps = 0;
  double dt = 0.0;
  std::size_t boundary_extensions = 0;
};

/// Fixed step min(cfl_dt over the run, t_final), shortened so snapshots land
/// exactly on every output time. Step errors stop the run and return the
/// partial trajectory with a diagnostic.
SolveResult solve(const ScalarField& initial, const VelocityField& u, const SolverConfig& cfg);

}  // namespace vaclab
