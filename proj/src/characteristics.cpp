#include "vaclab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vaclab/parallel.hpp"

namespace vaclab {

namespace {

double escape_slack(const Domain& d) {
  double m = 0.0;
  for (int a = 0; a < d.dim(); ++a) m = std::max(m, d.length(a));
  return 1e-9 * m;
}

struct State {
  Point x;
  double l;
};

State rk4_step(const VelocityField& u, const Domain& dom, const State& s, double t, double k) {
  const int dim = u.dim();
  auto rhs = [&](double tt, const Point& x, Point& dx, double& dl) {
    const Point xw = dom.wrap(x);
    const Vec v = u.eval(tt, xw);
    for (int a = 0; a < dim; ++a) dx[a] = v[a];
    dl = u.div(tt, xw);
  };
  auto shifted = [&](const Point& dx, double f) {
    Point y = s.x;
    for (int a = 0; a < dim; ++a) y[a] += f * dx[a];
    return y;
  };
  Point k1{}, k2{}, k3{}, k4{};
  double l1, l2, l3, l4;
  rhs(t, s.x, k1, l1);
  rhs(t + 0.5 * k, shifted(k1, 0.5 * k), k2, l2);
  rhs(t + 0.5 * k, shifted(k2, 0.5 * k), k3, l3);
  rhs(t + k, shifted(k3, k), k4, l4);
  State out = s;
  for (int a = 0; a < dim; ++a) out.x[a] += k / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
  out.l += k / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  return out;
}

// Advances in place; returns false on escape.
bool advance(const VelocityField& u, const Domain& dom, State& s, double t0, double t1, int steps,
             double slack) {
  if (steps <= 0 || t0 == t1) return true;
  const double k = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    s = rk4_step(u, dom, s, t0 + i * k, k);
    if (!dom.contains_closure(s.x, slack)) return false;
  }
  return true;
}

int steps_over(double span, double per_unit) {
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) * per_unit - 1e-9)));
}

void check_times(const std::vector<double>& times) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("output times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("output times must increase strictly");
  }
}

double initial_value(const InitialData& f, const Domain& dom, const Point& x) { return f(dom.wrap(x)); }

}  // namespace

Characteristic trace_characteristic(const VelocityField& u, const Domain& domain, const Point& x, double t0,
                                    double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("trace_characteristic: steps must be positive");
  State s{x, 0.0};
  Characteristic c;
  c.escaped = !advance(u, domain, s, t0, t1, steps, escape_slack(domain));
  c.x = domain.wrap(s.x);
  c.log_jacobian = s.l;
  return c;
}

std::size_t FlowMap::time_index(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  }
  throw std::out_of_range("flow map has no record at t = " + std::to_string(t));
}

int FlowMap::steps_for(double span) const { return steps_over(span, 1.0 / step); }

FlowMap compute_flow(const VelocityField& u, GridPtr grid, std::vector<double> times, int rk_steps,
                     double t_start) {
  if (rk_steps < 1) throw std::invalid_argument("compute_flow: rk_steps must be positive");
  check_times(times);
  if (u.dim() != grid->dim()) throw std::invalid_argument("compute_flow: dimension mismatch");
  FlowMap fm;
  fm.velocity = std::make_shared<const VelocityField>(u);
  fm.grid = grid;
  fm.t_start = t_start;
  fm.times = std::move(times);
  const double horizon = fm.times.back();
  fm.step = horizon > 0.0 ? horizon / rk_steps : 1.0;
  const std::size_t cells = grid->cell_count();
  const std::size_t nt = fm.times.size();
  fm.positions.assign(nt, std::vector<Point>(cells));
  fm.log_jacobian.assign(nt, std::vector<double>(cells, 0.0));
  fm.valid.assign(nt, CellMask(cells, 1));
  const Domain& dom = grid->domain();
  const double slack = escape_slack(dom);
  parallel_for(cells, [&](std::size_t c) {
    State s{grid->cell_center(c), 0.0};
    fm.positions[0][c] = s.x;
    bool ok = true;
    for (std::size_t k = 1; k < nt; ++k) {
      if (ok) {
        const double a = t_start + fm.times[k - 1], b = t_start + fm.times[k];
        ok = advance(u, dom, s, a, b, fm.steps_for(b - a), slack);
      }
      fm.positions[k][c] = dom.wrap(s.x);
      fm.log_jacobian[k][c] = s.l;
      fm.valid[k][c] = ok ? 1 : 0;
    }
  });
  return fm;
}

namespace {

OracleField pull_back(const InitialData& init, const FlowMap& flow, double t, bool jacobian) {
  if (t < 0.0 || t > flow.horizon() * (1.0 + 1e-12) + 1e-15) {
    throw std::out_of_range("flow map does not cover t = " + std::to_string(t));
  }
  const Grid& g = *flow.grid;
  const Domain& dom = g.domain();
  const double slack = escape_slack(dom);
  const int steps = t > 0.0 ? flow.steps_for(t) : 0;
  std::vector<double> vals(g.cell_count(), 0.0);
  CellMask valid(g.cell_count(), 1);
  parallel_for(g.cell_count(), [&](std::size_t c) {
    State s{g.cell_center(c), 0.0};
    if (!advance(*flow.velocity, dom, s, flow.t_start + t, flow.t_start, steps, slack)) {
      valid[c] = 0;
      return;
    }
    const double v = initial_value(init, dom, s.x);
    vals[c] = jacobian ? v * std::exp(s.l) : v;
  });
  OracleField out{ScalarField(flow.grid, std::move(vals), t), std::move(valid), 0};
  out.escaped = static_cast<std::size_t>(std::count(out.valid.begin(), out.valid.end(), 0));
  return out;
}

InitialData from_field(const ScalarField& f) {
  return [&f](const Point& x) { return interpolate(f, x); };
}

}  // namespace

OracleField exact_continuity(const InitialData& rho0, const FlowMap& flow, double t) {
  return pull_back(rho0, flow, t, true);
}

OracleField exact_continuity(const ScalarField& rho0, const FlowMap& flow, double t) {
  return pull_back(from_field(rho0), flow, t, true);
}

OracleField exact_transport(const InitialData& s0, const FlowMap& flow, double t) {
  return pull_back(s0, flow, t, false);
}

OracleField exact_transport(const ScalarField& s0, const FlowMap& flow, double t) {
  return pull_back(from_field(s0), flow, t, false);
}

double exact_vacuum_measure(const ScalarField& rho0, const FlowMap& flow, double t) {
  if (!(rho0.grid() == *flow.grid)) throw std::invalid_argument("exact_vacuum_measure: grid mismatch");
  const std::size_t k = flow.time_index(t);
  CompensatedSum acc;
  for (std::size_t c = 0; c < rho0.size(); ++c) {
    if (rho0[c] == 0.0 && flow.valid[k][c]) acc += std::exp(flow.log_jacobian[k][c]);
  }
  return acc.value() * rho0.grid().cell_volume();
}

OracleTrajectory oracle_trajectory(Equation eq, const InitialData& initial, const VelocityField& u,
                                   const GridPtr& grid, const std::vector<double>& times,
                                   int steps_per_unit, bool nonnegative) {
  check_times(times);
  if (steps_per_unit < 1) throw std::invalid_argument("oracle_trajectory: steps_per_unit must be positive");
  const std::size_t cells = grid->cell_count();
  const std::size_t nt = times.size();
  const Domain& dom = grid->domain();
  const double slack = escape_slack(dom);
  const bool jac = eq == Equation::continuity;
  std::vector<std::vector<double>> vals(nt, std::vector<double>(cells, 0.0));
  std::vector<CellMask> valid(nt, CellMask(cells, 1));

  if (u.time_independent()) {
    // Autonomous flow: X⁻¹(t; y) is the backward flow of y for time t.
    parallel_for(cells, [&](std::size_t c) {
      State s{grid->cell_center(c), 0.0};
      vals[0][c] = initial_value(initial, dom, s.x);
      bool ok = true;
      for (std::size_t k = 1; k < nt; ++k) {
        if (ok) {
          const double span = times[k] - times[k - 1];
          ok = advance(u, dom, s, -times[k - 1], -times[k], steps_over(span, steps_per_unit), slack);
        }
        if (!ok) {
          valid[k][c] = 0;
          continue;
        }
        const double v = initial_value(initial, dom, s.x);
        vals[k][c] = jac ? v * std::exp(s.l) : v;
      }
    });
  } else {
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = times[k];
      const int steps = steps_over(t, steps_per_unit);
      parallel_for(cells, [&](std::size_t c) {
        State s{grid->cell_center(c), 0.0};
        if (t > 0.0 && !advance(u, dom, s, t, 0.0, steps, slack)) {
          valid[k][c] = 0;
          return;
        }
        const double v = initial_value(initial, dom, s.x);
        vals[k][c] = jac ? v * std::exp(s.l) : v;
      });
    }
  }

  OracleTrajectory out{Trajectory(TrajectoryMeta{"characteristics_rk4", 0.0, u.id()}), {}, 0};
  for (std::size_t k = 0; k < nt; ++k) {
    out.trajectory.append(ScalarField(grid, std::move(vals[k]), times[k], nonnegative));
  }
  out.escaped = static_cast<std::size_t>(std::count(valid.back().begin(), valid.back().end(), 0));
  out.valid = std::move(valid);
  return out;
}

CellMask intersect_masks(const std::vector<CellMask>& masks, std::size_t cells) {
  CellMask out(cells, 1);
  for (const auto& m : masks) {
    if (m.size() != cells) throw std::invalid_argument("intersect_masks: size mismatch");
    for (std::size_t i = 0; i < cells; ++i) out[i] = out[i] && m[i];
  }
  return out;
}

}  // namespace vaclab
