#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaclab/domain_fields.hpp"
#include "vaclab/exponents.hpp"

namespace vaclab {

using Vec = std::array<double, 3>;
using Mat = std::array<std::array<double, 3>, 3>;

/// u ∈ L^p(I; W^{1,q}); with q_open the membership holds for every r < q only.
struct SobolevClass {
  Exponent p = Exponent::infinity();
  Exponent q = Exponent::infinity();
  bool q_open = false;
};

/// Catalog parameters: scalars are one-element vectors.
using ParamMap = std::map<std::string, std::vector<double>>;

/// Analytic velocity with exact gradient and divergence closures.
class VelocityField {
public:
  struct Closures {
    std::function<Vec(double, const Point&)> eval;
    std::function<Mat(double, const Point&)> grad;
    std::function<double(double, const Point&)> div;
    /// 2-D stream function ψ with u = (∂ψ/∂y, −∂ψ/∂x), when one exists.
    std::function<double(double, const Point&)> stream;
  };

  struct Traits {
    bool zero_trace = false;
    bool time_independent = true;
    /// Lipschitz bound of u on a neighbourhood of the boundary.
    double boundary_lipschitz = 0.0;
    SobolevClass declared_class;
  };

  VelocityField(std::string id, int dim, Closures closures, Traits traits);

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  Vec eval(double t, const Point& x) const { return fns_.eval(t, x); }
  Mat grad(double t, const Point& x) const { return fns_.grad(t, x); }
  double div(double t, const Point& x) const { return fns_.div(t, x); }
  bool has_stream() const { return static_cast<bool>(fns_.stream); }
  double stream(double t, const Point& x) const { return fns_.stream(t, x); }

  bool zero_trace() const { return traits_.zero_trace; }
  bool time_independent() const { return traits_.time_independent; }
  double boundary_lipschitz() const { return traits_.boundary_lipschitz; }
  const SobolevClass& declared_class() const { return traits_.declared_class; }

private:
  std::string id_;
  int dim_;
  Closures fns_;
  Traits traits_;
};

/// Catalog ids: uniform, solid_rotation, shear, sine_zero_trace,
/// divfree_stream, radial_power, zero. Every entry accepts `frequency`
/// (u is multiplied by cos(2π f t); f ≠ 0 makes it time dependent).
/// Throws std::invalid_argument for unknown ids or parameters.
VelocityField make_velocity(std::string_view id, const Domain& domain, const ParamMap& params = {});

const std::vector<std::string>& velocity_catalog_ids();

double euclidean_norm(const Vec& v, int dim);
double frobenius_norm(const Mat& m, int dim);

/// Discrete ‖u‖_{L^p(0,T; W^{1,q})} with T = grid.t_final(): pointwise
/// (|u|^q + |∇u|^q)^{1/q}, midpoint rule in space, trapezoid in time.
double sobolev_norm_estimate(const VelocityField& u, const Grid& grid, const Exponent& p,
                             const Exponent& q, int time_samples = 33);

/// True iff |u| ≤ C·h on every boundary-adjacent cell centre, C the field's
/// boundary Lipschitz bound. Periodic domains pass vacuously.
bool trace_check(const VelocityField& u, const Grid& grid);

}  // namespace vaclab
