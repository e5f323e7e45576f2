#pragma once

#include <iosfwd>
#include <vector>

#include "vaclab/domain_fields.hpp"
#include "vaclab/velocity_catalog.hpp"

namespace vaclab {

/// Standard bump j(x) = exp(−1/(1−|x|²)) on B(0,1), scaled to radius ε and
/// sampled on the grid offsets strictly inside the ball. Weights are divided
/// by their discrete mass so that Σ w · cell volume = 1.
class MollifierKernel {
public:
  MollifierKernel(double epsilon, const Grid& grid);

  double epsilon() const { return epsilon_; }
  const std::vector<std::array<int, 3>>& offsets() const { return offsets_; }
  const std::vector<double>& weights() const { return weights_; }
  double cell_volume() const { return volume_; }
  double discrete_mass() const;
  /// Largest offset along each axis, in cells.
  const std::array<int, 3>& reach() const { return reach_; }

private:
  double epsilon_;
  double volume_;
  std::array<int, 3> reach_{0, 0, 0};
  std::vector<std::array<int, 3>> offsets_;
  std::vector<double> weights_;
};

/// Rejects ε < 2·max_h.
MollifierKernel make_kernel(double epsilon, const Grid& grid);

/// [f]_ε at every cell: periodic wrap on a torus, zero extension outside a box.
ScalarField mollify(const ScalarField& f, const MollifierKernel& k);
std::vector<double> mollify_values(std::span<const double> values, const Grid& grid, const MollifierKernel& k);

/// Cells of Ω_ε = {dist(x, ∂Ω) > ε}; every cell on a torus.
CellMask interior_mask(const Grid& grid, double epsilon);

enum class CommutatorForm {
  /// [u·∇f]_ε − u·∇[f]_ε with u·∇f := div(fu) − f div u.
  friedrichs,
  /// div([f]_ε u) − div[f u]_ε.
  flux,
};

struct CommutatorField {
  ScalarField r;
  CellMask interior;
};

/// Commutator at time f.time() from central differences of mollified
/// products; values outside Ω_ε are set to 0. Throws if Ω_ε has no cell.
CommutatorField friedrichs_commutator(const ScalarField& f, const VelocityField& u, const MollifierKernel& k,
                                      CommutatorForm form = CommutatorForm::friedrichs);

struct DecayRow {
  double epsilon;
  double norm;
};

struct DecayStudy {
  std::vector<DecayRow> rows;
  /// Fitted exponent s in norm ≈ C ε^s.
  double slope = 0.0;
  /// Nonincreasing as ε decreases, up to 5% relative noise.
  bool monotone = false;
  /// Strictly decreasing as ε decreases.
  bool strictly_decreasing = false;

  void write_csv(std::ostream& os) const;
};

/// ‖r_ε‖ in L^t(0,T; L^r(Ω_{ε_max})) for each ε of a strictly decreasing list, using
/// every `stride`-th snapshot (the last one is always included).
DecayStudy decay_study(const Trajectory& f, const VelocityField& u, const std::vector<double>& eps_list,
                       const Exponent& t_exp = Exponent::finite(1, 1), const Exponent& r_exp = Exponent::finite(1, 1),
                       std::size_t stride = 1, CommutatorForm form = CommutatorForm::friedrichs);

}  // namespace vaclab
