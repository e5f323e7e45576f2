#include "vaclab/weak_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vaclab/parallel.hpp"

namespace vaclab {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ---- time profiles -------------------------------------------------------

TimeProfile TimeProfile::constant_one() { return TimeProfile(Kind::constant_one, 0.0, 0.0); }

TimeProfile TimeProfile::smooth_bump(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("smooth_bump needs a < b");
  return TimeProfile(Kind::smooth_bump, a, b);
}

TimeProfile TimeProfile::hat_plus(double tau, double h) {
  if (!(h > 0.0) || tau < h) throw std::invalid_argument("hat_plus needs h > 0 and tau >= h");
  return TimeProfile(Kind::hat_plus, tau, h);
}

TimeProfile TimeProfile::hat_minus(double tau, double h) {
  if (!(h > 0.0) || tau < 2.0 * h) throw std::invalid_argument("hat_minus needs h > 0 and tau >= 2h");
  return TimeProfile(Kind::hat_minus, tau, h);
}

TimeProfile TimeProfile::affine(double a, double b) { return TimeProfile(Kind::affine, a, b); }

double TimeProfile::value(double t) const {
  switch (kind_) {
    case Kind::constant_one:
      return 1.0;
    case Kind::affine:
      return a_ + b_ * t;
    case Kind::smooth_bump: {
      if (t <= a_ || t >= b_) return 0.0;
      const double z = (2.0 * t - a_ - b_) / (b_ - a_);
      return std::exp(-1.0 / (1.0 - z * z));
    }
    case Kind::hat_plus: {
      const double tau = a_, h = b_;
      if (t <= 0.0) return 0.0;
      if (t < h) return t / h;
      if (t <= tau) return 1.0;
      if (t < tau + h) return 1.0 - (t - tau) / h;
      return 0.0;
    }
    case Kind::hat_minus: {
      const double tau = a_, h = b_;
      if (t <= 0.0) return 0.0;
      if (t < h) return t / h;
      if (t <= tau - h) return 1.0;
      if (t < tau) return 1.0 - (t - tau + h) / h;
      return 0.0;
    }
  }
  return 0.0;
}

double TimeProfile::derivative(double t) const {
  switch (kind_) {
    case Kind::constant_one:
      return 0.0;
    case Kind::affine:
      return b_;
    case Kind::smooth_bump: {
      if (t <= a_ || t >= b_) return 0.0;
      const double w = b_ - a_;
      const double z = (2.0 * t - a_ - b_) / w;
      const double q = 1.0 - z * z;
      return std::exp(-1.0 / q) * (-2.0 * z / (q * q)) * (2.0 / w);
    }
    case Kind::hat_plus: {
      const double tau = a_, h = b_;
      if (t < 0.0) return 0.0;
      if (t < h) return 1.0 / h;
      if (t < tau) return 0.0;
      if (t < tau + h) return -1.0 / h;
      return 0.0;
    }
    case Kind::hat_minus: {
      const double tau = a_, h = b_;
      if (t < 0.0) return 0.0;
      if (t < h) return 1.0 / h;
      if (t < tau - h) return 0.0;
      if (t < tau) return -1.0 / h;
      return 0.0;
    }
  }
  return 0.0;
}

std::vector<double> TimeProfile::kinks() const {
  switch (kind_) {
    case Kind::hat_plus:
      return {b_, a_, a_ + b_};
    case Kind::hat_minus:
      return {b_, a_ - b_, a_};
    default:
      return {};
  }
}

std::string TimeProfile::id() const {
  switch (kind_) {
    case Kind::constant_one:
      return "one";
    case Kind::affine:
      return "affine(" + fmt(a_) + ";" + fmt(b_) + ")";
    case Kind::smooth_bump:
      return "bump(" + fmt(a_) + ";" + fmt(b_) + ")";
    case Kind::hat_plus:
      return "hat+(" + fmt(a_) + ";" + fmt(b_) + ")";
    case Kind::hat_minus:
      return "hat-(" + fmt(a_) + ";" + fmt(b_) + ")";
  }
  return "?";
}

// ---- boundary cutoff -----------------------------------------------------

BoundaryCutoff::BoundaryCutoff(const Domain& domain, int n) : domain_(domain), n_(n) {
  if (domain.periodic()) throw std::invalid_argument("boundary cutoff needs a bounded box");
  if (n < 1) throw std::invalid_argument("boundary cutoff index must be positive");
}

double BoundaryCutoff::chi(double s) {
  if (s <= 0.25) return 0.0;
  if (s >= 0.5) return 1.0;
  const double y = 4.0 * (s - 0.25);
  const double a = std::exp(-1.0 / y), b = std::exp(-1.0 / (1.0 - y));
  return a / (a + b);
}

double BoundaryCutoff::chi_prime(double s) {
  if (s <= 0.25 || s >= 0.5) return 0.0;
  const double y = 4.0 * (s - 0.25);
  const double a = std::exp(-1.0 / y), b = std::exp(-1.0 / (1.0 - y));
  const double g = a * b * (1.0 / (y * y) + 1.0 / ((1.0 - y) * (1.0 - y))) / ((a + b) * (a + b));
  return 4.0 * g;
}

double BoundaryCutoff::value(const Point& x) const { return chi(n_ * dist_boundary(x, domain_)); }

Vec BoundaryCutoff::grad(const Point& x) const {
  const double d = chi_prime(n_ * dist_boundary(x, domain_)) * n_;
  const Point g = dist_boundary_gradient(x, domain_);
  return Vec{d * g[0], d * g[1], d * g[2]};
}

bool BoundaryCutoff::in_strip(const Point& x) const { return dist_boundary(x, domain_) <= 0.5 / n_; }

// ---- spatial parts -------------------------------------------------------

SpatialPart one_spatial() {
  return {[](const Point&) { return 1.0; }, [](const Point&) { return Vec{}; }, false, "one"};
}

SpatialPart bump_spatial(const Domain& domain, const Point& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
  const int dim = domain.dim();
  for (int a = 0; a < dim; ++a) {
    if (center[a] - radius <= domain.lower(a) || center[a] + radius >= domain.upper(a)) {
      throw std::invalid_argument("bump support overflows the domain");
    }
  }
  auto value = [=](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    r2 /= radius * radius;
    return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
  };
  auto grad = [=](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    r2 /= radius * radius;
    Vec g{};
    if (r2 >= 1.0) return g;
    const double q = 1.0 - r2;
    const double f = std::exp(-1.0 / q) * (-1.0 / (q * q)) * 2.0 / (radius * radius);
    for (int a = 0; a < dim; ++a) g[a] = f * (x[a] - center[a]);
    return g;
  };
  std::string id = "bump(r=" + fmt(radius) + ")";
  return {value, grad, true, id};
}

SpatialPart cosine_spatial(const Domain& domain, const Point& center, const std::vector<double>& omega) {
  const int dim = domain.dim();
  if (static_cast<int>(omega.size()) != dim) throw std::invalid_argument("cosine test function: omega needs d entries");
  if (domain.periodic()) {
    for (int a = 0; a < dim; ++a) {
      const double m = omega[a] * domain.length(a) / (2.0 * std::numbers::pi);
      if (std::abs(m - std::round(m)) > 1e-9) {
        throw std::invalid_argument("cosine test function is not periodic on the torus");
      }
    }
  }
  std::array<double, 3> w{0.0, 0.0, 0.0};
  std::copy(omega.begin(), omega.end(), w.begin());
  auto value = [=](const Point& x) {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= std::cos(w[a] * (x[a] - center[a]));
    return v;
  };
  auto grad = [=](const Point& x) {
    Vec g{};
    for (int a = 0; a < dim; ++a) {
      double v = -w[a] * std::sin(w[a] * (x[a] - center[a]));
      for (int b = 0; b < dim; ++b)
        if (b != a) v *= std::cos(w[b] * (x[b] - center[b]));
      g[a] = v;
    }
    return g;
  };
  return {value, grad, domain.periodic(), "cosine"};
}

SpatialPart with_cutoff(const SpatialPart& eta, const BoundaryCutoff& xi, bool complement) {
  auto value = [eta, xi, complement](const Point& x) {
    const double c = xi.value(x);
    return eta.value(x) * (complement ? 1.0 - c : c);
  };
  auto grad = [eta, xi, complement](const Point& x) {
    const double c = xi.value(x);
    const Vec gc = xi.grad(x);
    const Vec ge = eta.grad(x);
    const double e = eta.value(x);
    const double s = complement ? -1.0 : 1.0;
    const double f = complement ? 1.0 - c : c;
    return Vec{f * ge[0] + s * e * gc[0], f * ge[1] + s * e * gc[1], f * ge[2] + s * e * gc[2]};
  };
  const std::string tag = (complement ? "*(1-xi" : "*xi") + std::to_string(xi.n()) + (complement ? ")" : "");
  return {value, grad, complement ? eta.compact : true, eta.id + tag};
}

namespace {

Point param_point(const ParamMap& p, const std::string& key, const Point& fallback, int dim) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (static_cast<int>(it->second.size()) != dim) {
    throw std::invalid_argument("test function parameter '" + key + "' needs " + std::to_string(dim) + " entries");
  }
  Point out{};
  std::copy(it->second.begin(), it->second.end(), out.begin());
  return out;
}

void check_keys(const ParamMap& p, std::initializer_list<const char*> allowed, const std::string& kind) {
  for (const auto& [key, _] : p) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument("test function '" + kind + "': unknown parameter '" + key + "'");
    }
  }
}

}  // namespace

SpatialPart make_spatial(const std::string& kind, const Domain& domain, const ParamMap& params) {
  const int dim = domain.dim();
  if (kind == "one") {
    check_keys(params, {}, kind);
    return one_spatial();
  }
  if (kind == "bump") {
    check_keys(params, {"center", "radius"}, kind);
    const Point c = param_point(params, "center", domain.center(), dim);
    auto it = params.find("radius");
    double r = 0.25 * domain.length(0);
    for (int a = 1; a < dim; ++a) r = std::min(r, 0.25 * domain.length(a));
    if (it != params.end()) {
      if (it->second.size() != 1) throw std::invalid_argument("bump radius must be a scalar");
      r = it->second.front();
    }
    return bump_spatial(domain, c, r);
  }
  if (kind == "cosine") {
    check_keys(params, {"center", "omega"}, kind);
    const Point c = param_point(params, "center", domain.center(), dim);
    std::vector<double> w(dim);
    for (int a = 0; a < dim; ++a) {
      w[a] = domain.periodic() ? 2.0 * std::numbers::pi / domain.length(a) : std::numbers::pi / (2.0 * domain.length(a));
    }
    if (auto it = params.find("omega"); it != params.end()) w = it->second;
    return cosine_spatial(domain, c, w);
  }
  throw std::invalid_argument("unknown test function kind '" + kind + "'");
}

// ---- renormalizers -------------------------------------------------------

std::string to_string(RenormKind k) {
  switch (k) {
    case RenormKind::ren_generic:
      return "REN_GENERIC";
    case RenormKind::trunc_k:
      return "TRUNC_K";
    case RenormKind::bdelta:
      return "BDELTA";
    case RenormKind::power:
      return "POWER";
  }
  return "?";
}

RenormKind parse_renorm_kind(const std::string& name) {
  for (auto k : {RenormKind::ren_generic, RenormKind::trunc_k, RenormKind::bdelta, RenormKind::power}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown renormalizer kind '" + name + "'");
}

std::string RenormFunction::id() const { return to_string(kind) + "(" + fmt(param) + ")"; }

RenormFunction make_renorm(RenormKind kind, double param) {
  RenormFunction r{kind, param, {}, {}, {}, {}};
  switch (kind) {
    case RenormKind::ren_generic: {
      if (!(param > 0.0)) throw std::invalid_argument("REN_GENERIC needs k > 0");
      const double k = param;
      r.b = [k](double z) { return z <= k ? z - z * z * z / (3.0 * k * k) : 2.0 * k / 3.0; };
      r.db = [k](double z) { return z <= k ? 1.0 - z * z / (k * k) : 0.0; };
      r.defect = [k](double z) { return z <= k ? -2.0 * z * z * z / (3.0 * k * k) : -2.0 * k / 3.0; };
      r.growth = {true, Rational(0), Rational(0)};
      break;
    }
    case RenormKind::trunc_k: {
      if (!(param > 1.0)) throw std::invalid_argument("TRUNC_K needs k > 1");
      const double k = param;
      r.b = [k](double z) {
        if (z <= k) return z;
        const double s = z / k;
        if (s >= 3.0) return 2.0 * k;
        const double y = s - 1.0;
        return k * (1.0 + y - 0.25 * y * y);
      };
      r.db = [k](double z) {
        if (z <= k) return 1.0;
        const double s = z / k;
        if (s >= 3.0) return 0.0;
        return 1.0 - 0.5 * (s - 1.0);
      };
      r.defect = [k](double z) {
        if (z <= k) return 0.0;
        const double s = z / k;
        if (s >= 3.0) return -2.0 * k;
        const double y = s - 1.0;
        return z * (1.0 - 0.5 * y) - k * (1.0 + y - 0.25 * y * y);
      };
      r.growth = {true, Rational(0), Rational(0)};
      break;
    }
    case RenormKind::bdelta: {
      if (!(param > 0.0)) throw std::invalid_argument("BDELTA needs delta > 0");
      const double d = param;
      r.b = [d](double z) { return d / (d + z); };
      r.db = [d](double z) { return -d / ((d + z) * (d + z)); };
      r.defect = [d](double z) { return -d * z / ((d + z) * (d + z)) - d / (d + z); };
      r.growth = {false, Rational(0), Rational(0)};
      break;
    }
    case RenormKind::power: {
      if (!(param > 0.0)) throw std::invalid_argument("POWER needs theta > 0");
      const double th = param;
      r.b = [th](double z) { return z > 0.0 ? std::pow(z, th) : 0.0; };
      r.db = [th](double z) {
        if (z > 0.0) return th * std::pow(z, th - 1.0);
        if (th > 1.0) return 0.0;
        return th == 1.0 ? 1.0 : std::numeric_limits<double>::infinity();
      };
      r.defect = [th](double z) { return z > 0.0 ? (th - 1.0) * std::pow(z, th) : 0.0; };
      const Rational theta(std::llround(th * 1e6), 1000000);
      r.growth = {false, theta, th == 1.0 ? Rational(0) : theta};
      break;
    }
  }
  return r;
}

std::set<RenormClass> classify_renorm_growth(const RenormFunction& b, const ExponentTuple& e) {
  return classify_renorm_growth(b.growth, e);
}

// ---- notions -------------------------------------------------------------

std::string to_string(Problem p) { return p == Problem::continuity ? "continuity" : "transport"; }

const std::vector<Notion>& all_notions() {
  static const std::vector<Notion> all{Notion::distributional,
                                       Notion::weak,
                                       Notion::time_integrated_distributional,
                                       Notion::time_integrated_weak,
                                       Notion::renormalized_distributional,
                                       Notion::renormalized_weak,
                                       Notion::renormalized_time_integrated_distributional,
                                       Notion::renormalized_time_integrated_weak};
  return all;
}

std::string to_string(Notion n) {
  switch (n) {
    case Notion::distributional:
      return "distributional";
    case Notion::weak:
      return "weak";
    case Notion::time_integrated_distributional:
      return "time_integrated_distributional";
    case Notion::time_integrated_weak:
      return "time_integrated_weak";
    case Notion::renormalized_distributional:
      return "renormalized_distributional";
    case Notion::renormalized_weak:
      return "renormalized_weak";
    case Notion::renormalized_time_integrated_distributional:
      return "renormalized_time_integrated_distributional";
    case Notion::renormalized_time_integrated_weak:
      return "renormalized_time_integrated_weak";
  }
  return "?";
}

Notion parse_notion(const std::string& name) {
  for (Notion n : all_notions()) {
    if (to_string(n) == name) return n;
  }
  throw std::invalid_argument("unknown solution notion '" + name + "'");
}

bool is_renormalized(Notion n) {
  return n == Notion::renormalized_distributional || n == Notion::renormalized_weak ||
         n == Notion::renormalized_time_integrated_distributional ||
         n == Notion::renormalized_time_integrated_weak;
}

bool is_time_integrated(Notion n) {
  return n == Notion::time_integrated_distributional || n == Notion::time_integrated_weak ||
         n == Notion::renormalized_time_integrated_distributional ||
         n == Notion::renormalized_time_integrated_weak;
}

bool requires_compact_support(Notion n) {
  return n == Notion::distributional || n == Notion::time_integrated_distributional ||
         n == Notion::renormalized_distributional || n == Notion::renormalized_time_integrated_distributional;
}

// ---- residuals -----------------------------------------------------------

namespace {

// Linear interpolation of per-snapshot values.
double interp(const std::vector<double>& times, const std::vector<double>& vals, double t) {
  if (t <= times.front()) return vals.front();
  if (t >= times.back()) return vals.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double a = times[k - 1], b = times[k];
  const double w = (t - a) / (b - a);
  return (1.0 - w) * vals[k - 1] + w * vals[k];
}

std::vector<double> time_nodes(const std::vector<double>& times, const std::vector<double>& kinks, double tau) {
  std::vector<double> nodes;
  for (double t : times) {
    if (t < tau) nodes.push_back(t);
  }
  for (double k : kinks) {
    if (k > 0.0 && k < tau) nodes.push_back(k);
  }
  nodes.push_back(tau);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [tau](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, tau); }),
              nodes.end());
  return nodes;
}

// ∫_0^τ w(t) V(t) dt with V the linear interpolant of vals; Simpson on each
// subinterval. `weight(lo, hi, t)` is evaluated at t ∈ {lo, mid, hi}.
template <class W>
double integrate_time(const std::vector<double>& times, const std::vector<double>& vals,
                      const std::vector<double>& nodes, W&& weight) {
  CompensatedSum acc;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double a = nodes[i - 1], b = nodes[i], m = 0.5 * (a + b);
    const double fa = weight(a, b, a) * interp(times, vals, a);
    const double fm = weight(a, b, m) * interp(times, vals, m);
    const double fb = weight(a, b, b) * interp(times, vals, b);
    acc += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }
  return acc.value();
}

double psi_prime_on(const TimeProfile& psi, double lo, double hi, double t) {
  // the right derivative at lo, the left derivative at hi
  if (t >= hi) return psi.derivative(hi - 1e-9 * (hi - lo));
  return psi.derivative(t);
}

struct CellCache {
  std::vector<double> eta;
  std::vector<Vec> grad_eta;
};

CellCache cache_eta(const SpatialPart& eta, const Grid& g) {
  CellCache c;
  c.eta.resize(g.cell_count());
  c.grad_eta.resize(g.cell_count());
  parallel_for(g.cell_count(), [&](std::size_t i) {
    const Point x = g.cell_center(i);
    c.eta[i] = eta.value(x);
    c.grad_eta[i] = eta.grad(x);
  });
  return c;
}

bool vanishes_on_outer_ring(const std::vector<double>& eta, const Grid& g) {
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const auto ijk = g.multi_index(i);
    bool edge = false;
    for (int a = 0; a < g.dim(); ++a) edge = edge || ijk[a] == 0 || ijk[a] == g.n(a) - 1;
    if (edge && eta[i] != 0.0) return false;
  }
  return true;
}

struct VelocityCache {
  std::vector<double> u_dot_grad;
  std::vector<double> div;
};

VelocityCache cache_velocity(const VelocityField& u, const Grid& g, const CellCache& cc, double t) {
  VelocityCache v;
  v.u_dot_grad.resize(g.cell_count());
  v.div.resize(g.cell_count());
  parallel_for(g.cell_count(), [&](std::size_t i) {
    const Point x = g.cell_center(i);
    const Vec w = u.eval(t, x);
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += w[a] * cc.grad_eta[i][a];
    v.u_dot_grad[i] = s;
    v.div[i] = u.div(t, x);
  });
  return v;
}

}  // namespace

double residual(Problem problem, Notion notion, const Trajectory& traj, const VelocityField& u,
                const RenormFunction* b, const TestFunction& phi, double tau) {
  if (traj.empty()) throw std::invalid_argument("residual: empty trajectory");
  const Grid& g = traj.grid();
  if (u.dim() != g.dim()) throw std::invalid_argument("residual: dimension mismatch");
  const bool renorm = is_renormalized(notion);
  if (renorm && b == nullptr) {
    throw std::invalid_argument("notion '" + to_string(notion) + "' needs a renormalizer");
  }
  const std::vector<double> times = traj.times();
  if (tau < 0.0 || tau > times.back() * (1.0 + 1e-12)) {
    throw std::invalid_argument("residual: tau lies outside the trajectory");
  }
  tau = std::min(tau, times.back());
  const CellCache cc = cache_eta(phi.eta, g);
  if (requires_compact_support(notion) && !g.domain().periodic()) {
    if (!phi.eta.compact || !vanishes_on_outer_ring(cc.eta, g)) {
      throw std::invalid_argument("notion '" + to_string(notion) + "' needs a test function compactly supported in space");
    }
  }
  const bool integrated = is_time_integrated(notion);
  if (!integrated) {
    if (std::abs(phi.psi.value(0.0)) > 1e-14 || std::abs(phi.psi.value(tau)) > 1e-14) {
      throw std::invalid_argument("notion '" + to_string(notion) +
                                  "' needs a time profile vanishing at both ends of [0, tau]");
    }
  }

  std::vector<double> M(times.size()), G(times.size());
  VelocityCache vc;
  if (u.time_independent()) vc = cache_velocity(u, g, cc, 0.0);
  const double vol = g.cell_volume();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (!u.time_independent()) vc = cache_velocity(u, g, cc, times[k]);
    const ScalarField& f = traj[k].field;
    CompensatedSum m, gsum;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i];
      const double val = renorm ? b->b(z) : z;
      double zeroth = 0.0;
      if (problem == Problem::transport) {
        zeroth = val;
      } else if (renorm) {
        zeroth = -b->defect(z);
      }
      m += val * cc.eta[i];
      gsum += val * vc.u_dot_grad[i] + zeroth * vc.div[i] * cc.eta[i];
    }
    M[k] = m.value() * vol;
    G[k] = gsum.value() * vol;
  }

  const std::vector<double> nodes = time_nodes(times, phi.psi.kinks(), tau);
  const TimeProfile& psi = phi.psi;
  const double volume_part =
      integrate_time(times, M, nodes, [&](double lo, double hi, double t) { return psi_prime_on(psi, lo, hi, t); }) +
      integrate_time(times, G, nodes, [&](double, double, double t) { return psi.value(t); });
  if (!integrated) return volume_part;
  const double boundary = psi.value(tau) * interp(times, M, tau) - psi.value(0.0) * M.front();
  return boundary - volume_part;
}

double residual(Problem problem, Notion notion, const Trajectory& traj, const VelocityField& u,
                const RenormFunction* b, const TestFunction& phi) {
  if (traj.empty()) throw std::invalid_argument("residual: empty trajectory");
  return residual(problem, notion, traj, u, b, phi, traj.back().time);
}

void write_residual_csv(const std::vector<ResidualRow>& rows, std::ostream& os) {
  os << "notion,b,phi,tau,value\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << to_string(r.notion) << ',' << r.b_id << ',' << r.phi_id << ',' << r.tau << ',' << r.value << '\n';
  }
}

// ---- boundary machinery --------------------------------------------------

namespace {

double hardy_quotient_only(const VelocityField& u, const Grid& g, const Exponent& q) {
  std::vector<double> w(g.cell_count());
  parallel_for(g.cell_count(), [&](std::size_t i) {
    const Point x = g.cell_center(i);
    w[i] = euclidean_norm(u.eval(0.0, x), g.dim()) / dist_boundary(x, g.domain());
  });
  return lp_norm(w, g.cell_volume(), q);
}

}  // namespace

HardyResult hardy_quotient(const VelocityField& u, const Grid& grid, const Exponent& q) {
  if (grid.domain().periodic()) throw std::invalid_argument("hardy_quotient needs a bounded box");
  HardyResult r;
  r.quotient_norm = hardy_quotient_only(u, grid, q);
  std::vector<double> w(grid.cell_count());
  parallel_for(grid.cell_count(), [&](std::size_t i) {
    w[i] = frobenius_norm(u.grad(0.0, grid.cell_center(i)), grid.dim());
  });
  r.gradient_norm = lp_norm(w, grid.cell_volume(), q);
  if (r.quotient_norm == 0.0) {
    r.ratio = 0.0;
  } else {
    r.ratio = r.gradient_norm > 0.0 ? r.quotient_norm / r.gradient_norm : std::numeric_limits<double>::infinity();
  }
  r.refined_quotient_norm = hardy_quotient_only(u, *grid.refined(2), q);
  r.divergent = !trace_check(u, grid) || r.refined_quotient_norm > 1.1 * r.quotient_norm;
  return r;
}

std::vector<BoundaryTermRow> boundary_term_decay(const Trajectory& traj, const VelocityField& u,
                                                 const TestFunction& phi, const std::vector<int>& n_list) {
  if (traj.empty()) throw std::invalid_argument("boundary_term_decay: empty trajectory");
  const Grid& g = traj.grid();
  const std::vector<double> times = traj.times();
  const double tau = times.back();
  const TimeProfile& psi = phi.psi;
  const std::vector<double> nodes = time_nodes(times, psi.kinks(), tau);
  const double vol = g.cell_volume();
  std::vector<BoundaryTermRow> rows;
  for (int n : n_list) {
    const BoundaryCutoff xi(g.domain(), n);
    const SpatialPart rem = with_cutoff(phi.eta, xi, true);
    const CellCache cc = cache_eta(rem, g);
    double strip = 0.0;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      if (xi.in_strip(g.cell_center(i))) strip += vol;
    }
    VelocityCache vc;
    if (u.time_independent()) vc = cache_velocity(u, g, cc, 0.0);
    std::vector<double> a(times.size()), c(times.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (!u.time_independent()) vc = cache_velocity(u, g, cc, times[k]);
      const ScalarField& f = traj[k].field;
      CompensatedSum sa, sc;
      for (std::size_t i = 0; i < f.size(); ++i) {
        sa += std::abs(f[i] * cc.eta[i]);
        sc += std::abs(f[i] * vc.u_dot_grad[i]);
      }
      a[k] = sa.value() * vol;
      c[k] = sc.value() * vol;
    }
    BoundaryTermRow row{n, strip, {}};
    row.terms[0] = std::abs(psi.value(tau)) * a.back();
    row.terms[1] = std::abs(psi.value(0.0)) * a.front();
    row.terms[2] = integrate_time(times, a, nodes,
                                  [&](double lo, double hi, double t) { return std::abs(psi_prime_on(psi, lo, hi, t)); });
    row.terms[3] = integrate_time(times, c, nodes, [&](double, double, double t) { return std::abs(psi.value(t)); });
    rows.push_back(row);
  }
  return rows;
}

}  // namespace vaclab
