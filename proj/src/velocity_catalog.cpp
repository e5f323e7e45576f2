#include "vaclab/velocity_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace vaclab {

namespace {

constexpr double pi = std::numbers::pi;

class Params {
public:
  Params(std::string_view id, const ParamMap& map, std::set<std::string> allowed) : id_(id), map_(map) {
    allowed.insert("frequency");
    for (const auto& [key, _] : map_) {
      if (!allowed.count(key)) {
        throw std::invalid_argument("velocity '" + id_ + "': unknown parameter '" + key + "'");
      }
    }
  }

  double scalar(const std::string& key, double fallback) const {
    auto it = map_.find(key);
    if (it == map_.end()) return fallback;
    if (it->second.size() != 1) {
      throw std::invalid_argument("velocity '" + id_ + "': parameter '" + key + "' must be a scalar");
    }
    return it->second.front();
  }

  Point point(const std::string& key, const Point& fallback, int dim) const {
    auto it = map_.find(key);
    if (it == map_.end()) return fallback;
    if (static_cast<int>(it->second.size()) != dim) {
      throw std::invalid_argument("velocity '" + id_ + "': parameter '" + key + "' needs " +
                                  std::to_string(dim) + " components");
    }
    Point p{};
    std::copy(it->second.begin(), it->second.end(), p.begin());
    return p;
  }

private:
  std::string id_;
  const ParamMap& map_;
};

VelocityField modulate(std::string id, int dim, VelocityField::Closures c, VelocityField::Traits traits,
                       double frequency) {
  if (frequency == 0.0) return VelocityField(std::move(id), dim, std::move(c), traits);
  traits.time_independent = false;
  const double w = 2.0 * pi * frequency;
  VelocityField::Closures m;
  m.eval = [e = c.eval, w](double t, const Point& x) {
    Vec v = e(t, x);
    const double f = std::cos(w * t);
    for (auto& vi : v) vi *= f;
    return v;
  };
  m.grad = [g = c.grad, w](double t, const Point& x) {
    Mat a = g(t, x);
    const double f = std::cos(w * t);
    for (auto& row : a)
      for (auto& aij : row) aij *= f;
    return a;
  };
  m.div = [d = c.div, w](double t, const Point& x) { return std::cos(w * t) * d(t, x); };
  if (c.stream) {
    m.stream = [s = c.stream, w](double t, const Point& x) { return std::cos(w * t) * s(t, x); };
  }
  return VelocityField(std::move(id), dim, std::move(m), traits);
}

double min_length(const Domain& d) {
  double m = d.length(0);
  for (int a = 1; a < d.dim(); ++a) m = std::min(m, d.length(a));
  return m;
}

VelocityField make_uniform(const Domain& domain, const Params& prm, bool zero) {
  const int dim = domain.dim();
  Point dflt{};
  if (!zero) dflt[0] = 1.0;
  const Vec v = zero ? Vec{} : prm.point("v", dflt, dim);
  VelocityField::Closures c;
  c.eval = [v](double, const Point&) { return v; };
  c.grad = [](double, const Point&) { return Mat{}; };
  c.div = [](double, const Point&) { return 0.0; };
  if (dim == 2) {
    c.stream = [v](double, const Point& x) { return v[0] * x[1] - v[1] * x[0]; };
  }
  VelocityField::Traits tr;
  tr.zero_trace = euclidean_norm(v, dim) == 0.0;
  tr.boundary_lipschitz = 0.0;
  return modulate(zero ? "zero" : "uniform", dim, std::move(c), tr, prm.scalar("frequency", 0.0));
}

VelocityField make_rotation(const Domain& domain, const Params& prm) {
  const int dim = domain.dim();
  if (dim < 2) throw std::invalid_argument("velocity 'solid_rotation' needs d ≥ 2");
  const double w = prm.scalar("omega", 1.0);
  const Point c0 = prm.point("center", domain.center(), dim);
  VelocityField::Closures c;
  c.eval = [w, c0](double, const Point& x) { return Vec{-w * (x[1] - c0[1]), w * (x[0] - c0[0]), 0.0}; };
  c.grad = [w](double, const Point&) {
    Mat g{};
    g[0][1] = -w;
    g[1][0] = w;
    return g;
  };
  c.div = [](double, const Point&) { return 0.0; };
  if (dim == 2) {
    c.stream = [w, c0](double, const Point& x) {
      const double dx = x[0] - c0[0], dy = x[1] - c0[1];
      return -0.5 * w * (dx * dx + dy * dy);
    };
  }
  VelocityField::Traits tr;
  tr.boundary_lipschitz = std::abs(w);
  return modulate("solid_rotation", dim, std::move(c), tr, prm.scalar("frequency", 0.0));
}

VelocityField make_shear(const Domain& domain, const Params& prm) {
  const int dim = domain.dim();
  if (dim < 2) throw std::invalid_argument("velocity 'shear' needs d ≥ 2");
  const double amp = prm.scalar("amplitude", 1.0);
  const double k = 2.0 * pi / domain.length(1);
  const double y0 = domain.lower(1);
  VelocityField::Closures c;
  c.eval = [amp, k, y0](double, const Point& x) { return Vec{amp * std::sin(k * (x[1] - y0)), 0.0, 0.0}; };
  c.grad = [amp, k, y0](double, const Point& x) {
    Mat g{};
    g[0][1] = amp * k * std::cos(k * (x[1] - y0));
    return g;
  };
  c.div = [](double, const Point&) { return 0.0; };
  if (dim == 2) {
    c.stream = [amp, k, y0](double, const Point& x) { return -amp / k * std::cos(k * (x[1] - y0)); };
  }
  VelocityField::Traits tr;
  tr.boundary_lipschitz = std::abs(amp) * k;
  return modulate("shear", dim, std::move(c), tr, prm.scalar("frequency", 0.0));
}

// u_i = A sin(2π(x_i − c_i)/L_i) Π_{j≠i} sin(π(x_j − lo_j)/L_j): vanishes on every face.
VelocityField make_sine(const Domain& domain, const Params& prm) {
  const int dim = domain.dim();
  const double amp = prm.scalar("amplitude", 1.0);
  struct Axis {
    double c, lo, len;
  };
  std::array<Axis, 3> ax{};
  for (int a = 0; a < dim; ++a) {
    ax[a] = {0.5 * (domain.lower(a) + domain.upper(a)), domain.lower(a), domain.length(a)};
  }
  auto S = [ax](int i, const Point& x) { return std::sin(2.0 * pi * (x[i] - ax[i].c) / ax[i].len); };
  auto dS = [ax](int i, const Point& x) {
    return 2.0 * pi / ax[i].len * std::cos(2.0 * pi * (x[i] - ax[i].c) / ax[i].len);
  };
  auto P = [ax](int j, const Point& x) { return std::sin(pi * (x[j] - ax[j].lo) / ax[j].len); };
  auto dP = [ax](int j, const Point& x) { return pi / ax[j].len * std::cos(pi * (x[j] - ax[j].lo) / ax[j].len); };

  VelocityField::Closures c;
  c.eval = [=](double, const Point& x) {
    Vec v{};
    for (int i = 0; i < dim; ++i) {
      double prod = amp * S(i, x);
      for (int j = 0; j < dim; ++j)
        if (j != i) prod *= P(j, x);
      v[i] = prod;
    }
    return v;
  };
  c.grad = [=](double, const Point& x) {
    Mat g{};
    for (int i = 0; i < dim; ++i) {
      for (int k = 0; k < dim; ++k) {
        double prod = amp * (k == i ? dS(i, x) : S(i, x));
        for (int j = 0; j < dim; ++j) {
          if (j == i) continue;
          prod *= (j == k) ? dP(j, x) : P(j, x);
        }
        g[i][k] = prod;
      }
    }
    return g;
  };
  c.div = [=](double, const Point& x) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      double prod = amp * dS(i, x);
      for (int j = 0; j < dim; ++j)
        if (j != i) prod *= P(j, x);
      s += prod;
    }
    return s;
  };
  VelocityField::Traits tr;
  tr.zero_trace = !domain.periodic();
  tr.boundary_lipschitz = dim * std::abs(amp) * 2.0 * pi / min_length(domain);
  return modulate("sine_zero_trace", dim, std::move(c), tr, prm.scalar("frequency", 0.0));
}

// ψ = A sin²(πx̂) sin²(πŷ), u = (∂ψ/∂y, −∂ψ/∂x): divergence free, zero on ∂Ω.
VelocityField make_stream(const Domain& domain, const Params& prm) {
  if (domain.dim() != 2) throw std::invalid_argument("velocity 'divfree_stream' is two-dimensional");
  const double amp = prm.scalar("amplitude", 1.0 / pi);
  const double x0 = domain.lower(0), y0 = domain.lower(1);
  const double lx = domain.length(0), ly = domain.length(1);
  auto sx = [=](const Point& x) { return std::sin(pi * (x[0] - x0) / lx); };
  auto sy = [=](const Point& x) { return std::sin(pi * (x[1] - y0) / ly); };
  auto s2x = [=](const Point& x) { return std::sin(2.0 * pi * (x[0] - x0) / lx); };
  auto s2y = [=](const Point& x) { return std::sin(2.0 * pi * (x[1] - y0) / ly); };
  auto c2x = [=](const Point& x) { return std::cos(2.0 * pi * (x[0] - x0) / lx); };
  auto c2y = [=](const Point& x) { return std::cos(2.0 * pi * (x[1] - y0) / ly); };

  VelocityField::Closures c;
  c.stream = [=](double, const Point& x) {
    const double a = sx(x), b = sy(x);
    return amp * a * a * b * b;
  };
  c.eval = [=](double, const Point& x) {
    const double a = sx(x), b = sy(x);
    return Vec{amp * pi / ly * a * a * s2y(x), -amp * pi / lx * s2x(x) * b * b, 0.0};
  };
  c.grad = [=](double, const Point& x) {
    const double a = sx(x), b = sy(x);
    Mat g{};
    g[0][0] = amp * pi * pi / (lx * ly) * s2x(x) * s2y(x);
    g[0][1] = 2.0 * amp * pi * pi / (ly * ly) * a * a * c2y(x);
    g[1][0] = -2.0 * amp * pi * pi / (lx * lx) * c2x(x) * b * b;
    g[1][1] = -amp * pi * pi / (lx * ly) * s2x(x) * s2y(x);
    return g;
  };
  c.div = [](double, const Point&) { return 0.0; };
  VelocityField::Traits tr;
  tr.zero_trace = !domain.periodic();
  const double l = min_length(domain);
  tr.boundary_lipschitz = 4.0 * std::abs(amp) * pi * pi / (l * l);
  return modulate("divfree_stream", 2, std::move(c), tr, prm.scalar("frequency", 0.0));
}

// u(x) = A (x−c)|x−c|^{a−1}: W^{1,q} exactly for q(1−a) < d, div u unbounded at c.
VelocityField make_radial(const Domain& domain, const Params& prm) {
  const int dim = domain.dim();
  const double a = prm.scalar("a", 0.5);
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("velocity 'radial_power': a must lie in (0,1)");
  const double amp = prm.scalar("amplitude", 1.0);
  const Point c0 = prm.point("center", domain.center(), dim);
  auto radius = [=](const Point& x) {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += (x[i] - c0[i]) * (x[i] - c0[i]);
    return std::sqrt(r2);
  };
  VelocityField::Closures c;
  c.eval = [=](double, const Point& x) {
    const double r = radius(x);
    Vec v{};
    if (r == 0.0) return v;
    const double f = amp * std::pow(r, a - 1.0);
    for (int i = 0; i < dim; ++i) v[i] = f * (x[i] - c0[i]);
    return v;
  };
  c.grad = [=](double, const Point& x) {
    const double r = radius(x);
    Mat g{};
    if (r == 0.0) return g;
    const double f = amp * std::pow(r, a - 1.0);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const double xi = (x[i] - c0[i]) / r, xj = (x[j] - c0[j]) / r;
        g[i][j] = f * ((i == j ? 1.0 : 0.0) + (a - 1.0) * xi * xj);
      }
    }
    return g;
  };
  c.div = [=](double, const Point& x) {
    const double r = radius(x);
    if (r == 0.0) return 0.0;
    return amp * std::pow(r, a - 1.0) * (dim + a - 1.0);
  };
  VelocityField::Traits tr;
  tr.zero_trace = false;
  double rmin = min_length(domain) / 2.0;
  tr.boundary_lipschitz = std::abs(amp) * std::sqrt(double(dim)) * dim * std::pow(rmin, a - 1.0);
  // q < d/(1−a), with a rounded to 1e-6 so the bound is an exact rational
  const auto a_micro = static_cast<std::int64_t>(std::llround(a * 1e6));
  tr.declared_class.q = Exponent::finite(Rational(dim * 1000000LL, 1000000LL - a_micro));
  tr.declared_class.q_open = true;
  return modulate("radial_power", dim, std::move(c), tr, prm.scalar("frequency", 0.0));
}

}  // namespace

VelocityField::VelocityField(std::string id, int dim, Closures closures, Traits traits)
    : id_(std::move(id)), dim_(dim), fns_(std::move(closures)), traits_(traits) {
  if (!fns_.eval || !fns_.grad || !fns_.div) throw std::invalid_argument("velocity closures incomplete");
}

const std::vector<std::string>& velocity_catalog_ids() {
  static const std::vector<std::string> ids{"uniform",         "solid_rotation", "shear",
                                            "sine_zero_trace", "divfree_stream", "radial_power",
                                            "zero"};
  return ids;
}

VelocityField make_velocity(std::string_view id, const Domain& domain, const ParamMap& params) {
  if (id == "uniform") return make_uniform(domain, Params(id, params, {"v"}), false);
  if (id == "zero") return make_uniform(domain, Params(id, params, {}), true);
  if (id == "solid_rotation") return make_rotation(domain, Params(id, params, {"omega", "center"}));
  if (id == "shear") return make_shear(domain, Params(id, params, {"amplitude"}));
  if (id == "sine_zero_trace") return make_sine(domain, Params(id, params, {"amplitude"}));
  if (id == "divfree_stream") return make_stream(domain, Params(id, params, {"amplitude"}));
  if (id == "radial_power") return make_radial(domain, Params(id, params, {"a", "amplitude", "center"}));
  throw std::invalid_argument("unknown velocity id '" + std::string(id) + "'");
}

double euclidean_norm(const Vec& v, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

double frobenius_norm(const Mat& m, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += m[i][j] * m[i][j];
  return std::sqrt(s);
}

double sobolev_norm_estimate(const VelocityField& u, const Grid& grid, const Exponent& p, const Exponent& q,
                             int time_samples) {
  const int dim = grid.dim();
  const double T = grid.t_final();
  auto space_norm = [&](double t) {
    std::vector<double> w(grid.cell_count());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Point x = grid.cell_center(i);
      const double a = euclidean_norm(u.eval(t, x), dim);
      const double b = frobenius_norm(u.grad(t, x), dim);
      if (q.is_infinite()) {
        w[i] = std::max(a, b);
      } else {
        const double qq = q.to_double();
        w[i] = std::pow(std::pow(a, qq) + std::pow(b, qq), 1.0 / qq);
      }
    }
    return lp_norm(w, grid.cell_volume(), q);
  };
  if (u.time_independent() || time_samples < 2 || T == 0.0) {
    const double s = space_norm(0.0);
    if (p.is_infinite()) return s;
    return std::pow(T, 1.0 / p.to_double()) * s;
  }
  std::vector<double> times(time_samples), vals(time_samples);
  for (int k = 0; k < time_samples; ++k) {
    times[k] = T * k / (time_samples - 1);
    vals[k] = space_norm(times[k]);
  }
  return time_norm(times, vals, p);
}

bool trace_check(const VelocityField& u, const Grid& grid) {
  const auto& dom = grid.domain();
  if (dom.periodic()) return true;
  const double bound = u.boundary_lipschitz() * grid.max_h();
  const double T = grid.t_final();
  const std::array<double, 3> times{0.0, 0.5 * T, T};
  for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
    const auto ijk = grid.multi_index(idx);
    bool edge = false;
    for (int a = 0; a < grid.dim(); ++a) edge = edge || ijk[a] == 0 || ijk[a] == grid.n(a) - 1;
    if (!edge) continue;
    const Point x = grid.cell_center(ijk);
    for (double t : times) {
      if (euclidean_norm(u.eval(t, x), grid.dim()) > bound) return false;
    }
  }
  return true;
}

}  // namespace vaclab
