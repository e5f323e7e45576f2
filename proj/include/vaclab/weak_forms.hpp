#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vaclab/domain_fields.hpp"
#include "vaclab/exponents.hpp"
#include "vaclab/velocity_catalog.hpp"

namespace vaclab {

/// Temporal factor ψ of a separable test function.
class TimeProfile {
public:
  enum class Kind { constant_one, smooth_bump, hat_plus, hat_minus, affine };

  static TimeProfile constant_one();
  /// exp(−1/(1−z²)) with z = (2t − a − b)/(b − a) on (a, b), 0 elsewhere.
  static TimeProfile smooth_bump(double a, double b);
  /// t/h on [0,h], 1 on [h,τ], 1 − (t−τ)/h on [τ,τ+h], 0 afterwards.
  static TimeProfile hat_plus(double tau, double h);
  /// t/h on [0,h], 1 on [h,τ−h], 1 − (t−τ+h)/h on [τ−h,τ], 0 afterwards.
  static TimeProfile hat_minus(double tau, double h);
  /// a + b t.
  static TimeProfile affine(double a, double b);

  Kind kind() const { return kind_; }
  double value(double t) const;
  /// Derivative; at a kink, the right derivative.
  double derivative(double t) const;
  /// Points in the interior of the profile's domain where the derivative jumps.
  std::vector<double> kinks() const;
  std::string id() const;

private:
  TimeProfile(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

/// Spatial factor η with analytic gradient.
struct SpatialPart {
  std::function<double(const Point&)> value;
  std::function<Vec(const Point&)> grad;
  /// Vanishes in a neighbourhood of ∂Ω.
  bool compact = false;
  std::string id;
};

/// ξ_n(x) = χ(n·dist(x, ∂Ω)), χ a smooth monotone step from 0 on [0,1/4]
/// to 1 on [1/2, ∞); the strip A_n = {dist ≤ 1/(2n)}.
class BoundaryCutoff {
public:
  BoundaryCutoff(const Domain& domain, int n);

  static double chi(double s);
  static double chi_prime(double s);
  /// Supremum of χ', so that |∇ξ_n| ≤ gradient_constant()·n.
  static double gradient_constant() { return 8.0; }

  int n() const { return n_; }
  double value(const Point& x) const;
  Vec grad(const Point& x) const;
  bool in_strip(const Point& x) const;

private:
  Domain domain_;
  int n_;
};

SpatialPart one_spatial();
/// exp(−1/(1−|x−c|²/r²)) inside B(c, r). Throws unless the closed ball lies
/// inside the open box (on a torus, inside the fundamental cell).
SpatialPart bump_spatial(const Domain& domain, const Point& center, double radius);
/// Π_a cos(ω_a (x_a − c_a)). On a torus ω_a L_a / 2π must be an integer.
SpatialPart cosine_spatial(const Domain& domain, const Point& center, const std::vector<double>& omega);
/// η·ξ_n, or η·(1 − ξ_n) when `complement` is set.
SpatialPart with_cutoff(const SpatialPart& eta, const BoundaryCutoff& xi, bool complement);

struct TestFunction {
  SpatialPart eta;
  TimeProfile psi = TimeProfile::constant_one();

  double value(double t, const Point& x) const { return psi.value(t) * eta.value(x); }
  std::string id() const { return eta.id + "*" + psi.id(); }
};

/// Factory by name: "one", "bump" (center, radius), "cosine" (center, omega).
SpatialPart make_spatial(const std::string& kind, const Domain& domain, const ParamMap& params);

enum class RenormKind { ren_generic, trunc_k, bdelta, power };

std::string to_string(RenormKind k);
RenormKind parse_renorm_kind(const std::string& name);

struct RenormFunction {
  RenormKind kind;
  double param;
  std::function<double(double)> b;
  std::function<double(double)> db;
  /// z b'(z) − b(z), evaluated without forming 0·∞ at z = 0.
  std::function<double(double)> defect;
  GrowthMetadata growth;
  std::string id() const;
};

/// ren_generic: b(z) = z − z³/(3k²) on [0,k], 2k/3 afterwards (b' ∈ C_c).
/// trunc_k: k T(z/k) with T(s) = s on [0,1], 1 + y − y²/4 (y = s−1) on
/// [1,3], 2 afterwards; requires k > 1. bdelta: δ/(δ+z), δ > 0. power: z^θ,
/// θ > 0, rounded to a multiple of 1e-6 for the growth metadata.
RenormFunction make_renorm(RenormKind kind, double param);

std::set<RenormClass> classify_renorm_growth(const RenormFunction& b, const ExponentTuple& e);

enum class Problem { continuity, transport };

enum class Notion {
  distributional,
  weak,
  time_integrated_distributional,
  time_integrated_weak,
  renormalized_distributional,
  renormalized_weak,
  renormalized_time_integrated_distributional,
  renormalized_time_integrated_weak,
};

std::string to_string(Problem p);
std::string to_string(Notion n);
Notion parse_notion(const std::string& name);
const std::vector<Notion>& all_notions();
bool is_renormalized(Notion n);
bool is_time_integrated(Notion n);
bool requires_compact_support(Notion n);

/// Left side of the defining identity of the notion on [0, τ], the target
/// being zero. Spatial integrals use midpoint quadrature at the snapshots;
/// in time the piecewise-linear snapshot interpolant is integrated against
/// ψ exactly on every subinterval between snapshots and kinks of ψ.
/// Throws std::invalid_argument for a missing b, a test function whose
/// spatial part is not compact for a distributional notion (or fails to
/// vanish on the outer cell ring), a profile not vanishing at 0 and τ for a
/// notion without boundary terms, or τ outside the trajectory.
double residual(Problem problem, Notion notion, const Trajectory& traj, const VelocityField& u,
                const RenormFunction* b, const TestFunction& phi, double tau);

/// As above with τ the last snapshot time.
double residual(Problem problem, Notion notion, const Trajectory& traj, const VelocityField& u,
                const RenormFunction* b, const TestFunction& phi);

struct ResidualRow {
  Notion notion;
  std::string b_id;
  std::string phi_id;
  double tau;
  double value;
};

void write_residual_csv(const std::vector<ResidualRow>& rows, std::ostream& os);

struct HardyResult {
  double quotient_norm = 0.0;
  double gradient_norm = 0.0;
  double ratio = 0.0;
  /// Quotient on the twice-refined grid, used for the divergence verdict.
  double refined_quotient_norm = 0.0;
  bool divergent = false;
};

/// ‖u/dist(·,∂Ω)‖_{L^q} and ‖∇u‖_{L^q} at time 0 by midpoint quadrature. The
/// field is flagged divergent when it fails the trace check or its quotient
/// grows by more than 10% under one refinement. Requires a box.
HardyResult hardy_quotient(const VelocityField& u, const Grid& grid, const Exponent& q);

struct BoundaryTermRow {
  int n;
  double strip_measure;
  /// |ρψη(1−ξ_n)| at τ, the same at 0, |ρ ∂_tψ η(1−ξ_n)| over [0,τ],
  /// |ψ ρ u·∇(η(1−ξ_n))| over [0,τ].
  std::array<double, 4> terms;
};

/// Remainder integrals left over when φ is replaced by φξ_n in the weak
/// identity, for each n; τ is the last snapshot time. Requires a box.
std::vector<BoundaryTermRow> boundary_term_decay(const Trajectory& traj, const VelocityField& u,
                                                 const TestFunction& phi, const std::vector<int>& n_list);

}  // namespace vaclab
