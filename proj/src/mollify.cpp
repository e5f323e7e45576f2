#include "vaclab/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "vaclab/parallel.hpp"

namespace vaclab {

MollifierKernel::MollifierKernel(double epsilon, const Grid& grid) : epsilon_(epsilon), volume_(grid.cell_volume()) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("mollifier radius must be positive");
  const int dim = grid.dim();
  for (int a = 0; a < dim; ++a) reach_[a] = static_cast<int>(std::floor(epsilon / grid.h(a)));
  std::vector<double> raw;
  for (int k = -reach_[2]; k <= reach_[2]; ++k) {
    for (int j = -reach_[1]; j <= reach_[1]; ++j) {
      for (int i = -reach_[0]; i <= reach_[0]; ++i) {
        const std::array<int, 3> o{i, j, k};
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double z = o[a] * grid.h(a) / epsilon;
          r2 += z * z;
        }
        if (r2 >= 1.0) continue;
        offsets_.push_back(o);
        raw.push_back(std::exp(-1.0 / (1.0 - r2)));
      }
    }
  }
  CompensatedSum total;
  for (double w : raw) total += w * volume_;
  weights_.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) weights_[i] = raw[i] / total.value();
}

double MollifierKernel::discrete_mass() const {
  CompensatedSum m;
  for (double w : weights_) m += w * volume_;
  return m.value();
}

MollifierKernel make_kernel(double epsilon, const Grid& grid) {
  if (epsilon < 2.0 * grid.max_h() * (1.0 - 1e-12)) {
    throw std::invalid_argument("mollifier radius " + std::to_string(epsilon) + " is below two cells");
  }
  return MollifierKernel(epsilon, grid);
}

std::vector<double> mollify_values(std::span<const double> values, const Grid& g, const MollifierKernel& k) {
  if (values.size() != g.cell_count()) throw std::invalid_argument("mollify: value count mismatch");
  const bool periodic = g.domain().periodic();
  const int dim = g.dim();
  const auto& offs = k.offsets();
  const auto& w = k.weights();
  const double vol = k.cell_volume();
  std::vector<double> out(values.size());
  parallel_for(values.size(), [&](std::size_t c) {
    const auto ijk = g.multi_index(c);
    double acc = 0.0;
    for (std::size_t m = 0; m < offs.size(); ++m) {
      std::array<int, 3> src{0, 0, 0};
      bool inside = true;
      for (int a = 0; a < dim; ++a) {
        int s = ijk[a] - offs[m][a];
        const int n = g.n(a);
        if (periodic) {
          s %= n;
          if (s < 0) s += n;
        } else if (s < 0 || s >= n) {
          inside = false;
          break;
        }
        src[a] = s;
      }
      if (inside) acc += w[m] * values[g.index(src[0], src[1], src[2])];
    }
    out[c] = acc * vol;
  });
  return out;
}

ScalarField mollify(const ScalarField& f, const MollifierKernel& k) {
  return ScalarField(f.grid_ptr(), mollify_values(f.values(), f.grid(), k), f.time(), f.nonnegative());
}

CellMask interior_mask(const Grid& g, double epsilon) {
  CellMask m(g.cell_count(), 1);
  if (g.domain().periodic()) return m;
  for (std::size_t c = 0; c < m.size(); ++c) m[c] = dist_boundary(g.cell_center(c), g.domain()) > epsilon ? 1 : 0;
  return m;
}

namespace {

// Central-difference divergence of the vector field with components comp[a].
double central_div(const std::array<std::vector<double>, 3>& comp, const Grid& g, std::size_t c) {
  const auto ijk = g.multi_index(c);
  double d = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    auto at = [&](int shift) {
      std::array<int, 3> q = ijk;
      const int n = g.n(a);
      q[a] = ((q[a] + shift) % n + n) % n;
      return comp[a][g.index(q[0], q[1], q[2])];
    };
    d += (at(1) - at(-1)) / (2.0 * g.h(a));
  }
  return d;
}

}  // namespace

CommutatorField friedrichs_commutator(const ScalarField& f, const VelocityField& u, const MollifierKernel& k,
                                      CommutatorForm form) {
  const Grid& g = f.grid();
  if (u.dim() != g.dim()) throw std::invalid_argument("friedrichs_commutator: dimension mismatch");
  CellMask interior = interior_mask(g, k.epsilon());
  if (std::none_of(interior.begin(), interior.end(), [](auto v) { return v != 0; })) {
    throw std::invalid_argument("interior set is empty for epsilon = " + std::to_string(k.epsilon()));
  }
  const int dim = g.dim();
  const double t = f.time();
  const std::size_t n = f.size();
  std::vector<Vec> uc(n);
  std::vector<double> divu(n);
  parallel_for(n, [&](std::size_t c) {
    const Point x = g.cell_center(c);
    uc[c] = u.eval(t, x);
    divu[c] = u.div(t, x);
  });

  const std::vector<double> fe = mollify_values(f.values(), g, k);
  std::array<std::vector<double>, 3> fu_e, fe_u;
  for (int a = 0; a < dim; ++a) {
    std::vector<double> prod(n);
    fe_u[a].resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      prod[c] = f[c] * uc[c][a];
      fe_u[a][c] = fe[c] * uc[c][a];
    }
    fu_e[a] = mollify_values(prod, g, k);
  }
  std::vector<double> fdiv_e;
  if (form == CommutatorForm::friedrichs) {
    std::vector<double> prod(n);
    for (std::size_t c = 0; c < n; ++c) prod[c] = f[c] * divu[c];
    fdiv_e = mollify_values(prod, g, k);
  }

  std::vector<double> r(n, 0.0);
  parallel_for(n, [&](std::size_t c) {
    if (!interior[c]) return;
    const double a = central_div(fu_e, g, c);
    const double b = central_div(fe_u, g, c);
    r[c] = form == CommutatorForm::friedrichs ? (a - fdiv_e[c]) - (b - fe[c] * divu[c]) : b - a;
  });
  return {ScalarField(f.grid_ptr(), std::move(r), t), std::move(interior)};
}

void DecayStudy::write_csv(std::ostream& os) const {
  os << "epsilon,norm\n";
  os.precision(17);
  for (const auto& row : rows) os << row.epsilon << ',' << row.norm << '\n';
}

DecayStudy decay_study(const Trajectory& f, const VelocityField& u, const std::vector<double>& eps_list,
                       const Exponent& t_exp, const Exponent& r_exp, std::size_t stride, CommutatorForm form) {
  if (f.empty()) throw std::invalid_argument("decay_study: empty trajectory");
  if (eps_list.empty()) throw std::invalid_argument("decay_study: empty epsilon list");
  for (std::size_t i = 1; i < eps_list.size(); ++i) {
    if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("decay_study: epsilons must decrease");
  }
  if (stride == 0) stride = 1;
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < f.size(); i += stride) picks.push_back(i);
  if (picks.back() != f.size() - 1) picks.push_back(f.size() - 1);

  DecayStudy out;
  const CellMask region = interior_mask(f.grid(), eps_list.front());
  for (double eps : eps_list) {
    const MollifierKernel k = make_kernel(eps, f.grid());
    std::vector<double> times, norms;
    for (std::size_t i : picks) {
      const CommutatorField cf = friedrichs_commutator(f[i].field, u, k, form);
      times.push_back(f[i].time);
      norms.push_back(lp_norm(cf.r, r_exp, region));
    }
    const double v = picks.size() == 1 ? norms.front() : time_norm(times, norms, t_exp);
    out.rows.push_back({eps, v});
  }
  out.monotone = true;
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (out.rows[i].norm > out.rows[i - 1].norm * 1.05) out.monotone = false;
    if (!(out.rows[i].norm < out.rows[i - 1].norm)) out.strictly_decreasing = false;
  }
  std::vector<double> xs, ys;
  for (const auto& row : out.rows) {
    if (row.norm > 0.0) {
      xs.push_back(row.epsilon);
      ys.push_back(row.norm);
    }
  }
  out.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
  return out;
}

}  // namespace vaclab
