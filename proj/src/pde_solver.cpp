#include "vaclab/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vaclab/parallel.hpp"

namespace vaclab {

std::string to_string(Scheme s) { return s == Scheme::upwind_fv ? "upwind_fv" : "semi_lagrangian"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "upwind_fv") return Scheme::upwind_fv;
  if (name == "semi_lagrangian") return Scheme::semi_lagrangian;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be nonnegative");
  if (output_times.empty() && outputs < 1) throw std::invalid_argument("outputs must be positive");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    const double t = output_times[i];
    if (t < 0.0 || t > t_final * (1.0 + 1e-12)) throw std::invalid_argument("output time outside [0, t_final]");
    if (i > 0 && !(t > output_times[i - 1])) throw std::invalid_argument("output times must increase strictly");
  }
}

std::vector<double> SolverConfig::resolved_output_times() const {
  validate();
  std::vector<double> out;
  if (t_final == 0.0) return {0.0};
  if (output_times.empty()) {
    out.reserve(outputs + 1);
    for (int k = 0; k <= outputs; ++k) out.push_back(t_final * k / outputs);
    out.back() = t_final;
    return out;
  }
  if (output_times.front() != 0.0) out.push_back(0.0);
  out.insert(out.end(), output_times.begin(), output_times.end());
  return out;
}

namespace {

std::size_t stride(const Grid& g, int a) {
  std::size_t s = 1;
  for (int b = 0; b < a; ++b) s *= static_cast<std::size_t>(g.n(b));
  return s;
}

double upper_face(const FaceVelocities& f, const Grid& g, int a, std::size_t c, int ia) {
  const int n = g.n(a);
  if (ia < n - 1) return f.lower[a][c + stride(g, a)];
  if (g.domain().periodic()) return f.lower[a][c - static_cast<std::size_t>(n - 1) * stride(g, a)];
  return f.upper_wall[a][c];
}

double normal_sample(const VelocityField& u, double t, Point x, int a) { return u.eval(t, x)[a]; }

}  // namespace

FaceVelocities face_velocities(const VelocityField& u, const Grid& g, double t) {
  if (u.dim() != g.dim()) throw std::invalid_argument("face_velocities: dimension mismatch");
  const int dim = g.dim();
  const Domain& dom = g.domain();
  const bool walls = !dom.periodic();
  const bool stream = u.has_stream() && dim == 2;
  FaceVelocities f;
  for (int a = 0; a < dim; ++a) {
    f.lower[a].assign(g.cell_count(), 0.0);
    if (walls) f.upper_wall[a].assign(g.cell_count(), 0.0);
  }
  parallel_for(g.cell_count(), [&](std::size_t c) {
    const auto ijk = g.multi_index(c);
    const Point xc = g.cell_center(ijk);
    for (int a = 0; a < dim; ++a) {
      auto value_at = [&](double coord) {
        Point x = xc;
        x[a] = coord;
        if (!stream) return normal_sample(u, t, x, a);
        const int b = 1 - a;
        Point p = x, m = x;
        p[b] += 0.5 * g.h(b);
        m[b] -= 0.5 * g.h(b);
        const double diff = (u.stream(t, p) - u.stream(t, m)) / g.h(b);
        return a == 0 ? diff : -diff;
      };
      const double lo = dom.lower(a) + ijk[a] * g.h(a);
      const bool lower_wall = walls && ijk[a] == 0;
      f.lower[a][c] = (lower_wall && u.zero_trace()) ? 0.0 : value_at(lo);
      if (walls && ijk[a] == g.n(a) - 1) {
        f.upper_wall[a][c] = u.zero_trace() ? 0.0 : value_at(dom.upper(a));
      }
    }
  });
  return f;
}

namespace {

double max_outflow_rate(const FaceVelocities& f, const Grid& g) {
  std::vector<double> rate(g.cell_count(), 0.0);
  parallel_for(g.cell_count(), [&](std::size_t c) {
    const auto ijk = g.multi_index(c);
    double r = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double lo = f.lower[a][c];
      const double up = upper_face(f, g, a, c, ijk[a]);
      r += (std::max(up, 0.0) + std::max(-lo, 0.0)) / g.h(a);
    }
    rate[c] = r;
  });
  return *std::max_element(rate.begin(), rate.end());
}

}  // namespace

double cfl_dt(const VelocityField& u, const Grid& grid, double cfl, double t) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  const double rate = max_outflow_rate(face_velocities(u, grid, t), grid);
  if (rate == 0.0) return grid.t_final();
  return std::min(cfl / rate, grid.t_final());
}

ScalarField step_continuity(const ScalarField& rho, const FaceVelocities& f, double dt) {
  const Grid& g = rho.grid();
  const bool periodic = g.domain().periodic();
  std::vector<double> out(rho.size());
  std::vector<std::uint8_t> violated(rho.size(), 0);
  parallel_for(rho.size(), [&](std::size_t c) {
    const auto ijk = g.multi_index(c);
    const double rc = rho[c];
    double div_flux = 0.0;
    double outflow = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const int n = g.n(a);
      const std::size_t s = stride(g, a);
      const double ulo = f.lower[a][c];
      const double uup = upper_face(f, g, a, c, ijk[a]);
      double left = 0.0, right = 0.0;
      if (ijk[a] > 0) {
        left = rho[c - s];
      } else if (periodic) {
        left = rho[c + static_cast<std::size_t>(n - 1) * s];
      }
      if (ijk[a] < n - 1) {
        right = rho[c + s];
      } else if (periodic) {
        right = rho[c - static_cast<std::size_t>(n - 1) * s];
      }
      const double flo = ulo > 0.0 ? ulo * left : ulo * rc;
      const double fup = uup > 0.0 ? uup * rc : uup * right;
      div_flux += (fup - flo) / g.h(a);
      outflow += (std::max(uup, 0.0) + std::max(-ulo, 0.0)) / g.h(a);
    }
    if (dt * outflow > 1.0 + 1e-12) violated[c] = 1;
    out[c] = rc - dt * div_flux;
  });
  if (std::any_of(violated.begin(), violated.end(), [](auto v) { return v != 0; })) {
    throw std::domain_error("CFL violation: upwind step would lose positivity");
  }
  if (rho.nonnegative()) {
    // roundoff can leave −1e-17 where a cell fully drains
    for (auto& v : out) v = std::max(v, 0.0);
  }
  return ScalarField(rho.grid_ptr(), std::move(out), rho.time() + dt, rho.nonnegative());
}

ScalarField step_continuity(const ScalarField& rho, const VelocityField& u, double dt, double t) {
  return step_continuity(rho, face_velocities(u, rho.grid(), t + 0.5 * dt), dt);
}

ScalarField step_transport(const ScalarField& s, const VelocityField& u, double dt, double t, StepStats* stats) {
  const Grid& g = s.grid();
  const Domain& dom = g.domain();
  const int dim = g.dim();
  std::vector<double> out(s.size());
  std::vector<std::uint8_t> flagged(s.size(), 0), too_far(s.size(), 0);
  parallel_for(s.size(), [&](std::size_t c) {
    const Point y = g.cell_center(c);
    const Vec v1 = u.eval(t + dt, y);
    Point mid = y;
    for (int a = 0; a < dim; ++a) mid[a] -= 0.5 * dt * v1[a];
    const Vec v2 = u.eval(t + 0.5 * dt, dom.wrap(mid));
    Point x = y;
    for (int a = 0; a < dim; ++a) {
      const double disp = dt * v2[a];
      if (std::abs(disp) > g.h(a) * (1.0 + 1e-9)) too_far[c] = 1;
      x[a] -= disp;
    }
    if (!dom.contains_closure(x)) {
      flagged[c] = 1;
      for (int a = 0; a < dim; ++a) x[a] = std::clamp(x[a], dom.lower(a), dom.upper(a));
    }
    out[c] = interpolate(s, dom.wrap(x));
  });
  if (std::any_of(too_far.begin(), too_far.end(), [](auto v) { return v != 0; })) {
    throw std::domain_error("CFL violation: semi-Lagrangian backtrace leaves the cell ring");
  }
  if (stats) {
    stats->boundary_extensions += static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
  }
  return ScalarField(s.grid_ptr(), std::move(out), s.time() + dt, s.nonnegative());
}

SolveResult solve(const ScalarField& initial, const VelocityField& u, const SolverConfig& cfg) {
  cfg.validate();
  const std::vector<double> times = cfg.resolved_output_times();
  const GridPtr grid = initial.grid().with_t_final(cfg.t_final);
  SolveResult res;
  res.trajectory = Trajectory(TrajectoryMeta{to_string(cfg.scheme), cfg.cfl, u.id()});
  ScalarField cur(grid, std::vector<double>(initial.values().begin(), initial.values().end()), 0.0,
                  initial.nonnegative());
  res.trajectory.append(cur);
  if (times.size() == 1) return res;

  double dt = cfl_dt(u, *grid, cfg.cfl, 0.0);
  if (!u.time_independent()) {
    constexpr int samples = 16;
    for (int k = 1; k <= samples; ++k) dt = std::min(dt, cfl_dt(u, *grid, cfg.cfl, cfg.t_final * k / samples));
  }
  res.dt = dt;

  FaceVelocities cached;
  const bool reuse = u.time_independent() && cfg.scheme == Scheme::upwind_fv;
  if (reuse) cached = face_velocities(u, *grid, 0.0);
  StepStats stats;
  try {
    for (std::size_t k = 1; k < times.size(); ++k) {
      const double gap = times[k] - times[k - 1];
      const int m = std::max(1, static_cast<int>(std::ceil(gap / dt - 1e-9)));
      const double step = gap / m;
      for (int i = 0; i < m; ++i) {
        const double t = times[k - 1] + i * step;
        if (cfg.scheme == Scheme::upwind_fv) {
          cur = reuse ? step_continuity(cur, cached, step) : step_continuity(cur, u, step, t);
        } else {
          cur = step_transport(cur, u, step, t, &stats);
        }
        ++res.steps;
      }
      cur = cur.with_time(times[k]);
      res.trajectory.append(cur);
    }
  } catch (const std::exception& e) {
    res.completed = false;
    res.diagnostic = e.what();
  }
  res.boundary_extensions = stats.boundary_extensions;
  return res;
}

}  // namespace vaclab
