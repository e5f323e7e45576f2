#include "vaclab/vacuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace vaclab {

ScalarField vacuum_indicator(const ScalarField& rho, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("vacuum threshold must be nonnegative");
  std::vector<double> v(rho.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(rho[i]) <= threshold ? 1.0 : 0.0;
  return ScalarField(rho.grid_ptr(), std::move(v), rho.time(), true);
}

double vacuum_measure(const ScalarField& rho, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("vacuum threshold must be nonnegative");
  std::size_t count = 0;
  for (double x : rho.values()) count += std::abs(x) <= threshold ? 1 : 0;
  return static_cast<double>(count) * rho.grid().cell_volume();
}

MeasureSeries vacuum_measure_series(const Trajectory& traj, double threshold, double resolution) {
  if (traj.empty()) throw std::invalid_argument("vacuum_measure_series: empty trajectory");
  MeasureSeries s;
  s.times = traj.times();
  for (const auto& snap : traj) s.measures.push_back(vacuum_measure(snap.field, threshold));
  const std::size_t n = s.times.size();
  for (std::size_t stride = 1; n > 1 && stride <= std::max<std::size_t>(1, (n - 1) / 4); stride *= 2) {
    ModulusRow row{stride, 0.0, 0.0};
    for (std::size_t k = 0; k + stride < n; ++k) {
      row.gap = std::max(row.gap, s.times[k + stride] - s.times[k]);
      row.max_jump = std::max(row.max_jump, std::abs(s.measures[k + stride] - s.measures[k]));
    }
    s.modulus.push_back(row);
  }
  std::vector<double> gx, jy;
  bool all_zero = true;
  for (const auto& r : s.modulus) {
    if (r.max_jump > 0.0) all_zero = false;
    if (r.max_jump > 0.0 && r.max_jump >= resolution) {
      gx.push_back(r.gap);
      jy.push_back(r.max_jump);
    }
  }
  if (all_zero) {
    s.fitted_exponent = std::numeric_limits<double>::infinity();
  } else if (gx.size() >= 2) {
    s.fitted_exponent = loglog_slope(gx, jy);
  } else {
    s.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  }
  s.continuous = s.fitted_exponent > 0.0;
  return s;
}

namespace {

void check_pair(const Trajectory& a, const Trajectory& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty trajectory");
  if (!(a.grid() == b.grid())) throw std::invalid_argument("trajectories live on different grids");
  if (a.size() != b.size()) throw std::invalid_argument("trajectories have different output times");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].time - b[k].time) > 1e-12 * std::max(1.0, std::abs(a[k].time))) {
      throw std::invalid_argument("trajectories have different output times");
    }
  }
}

}  // namespace

std::vector<double> inclusion_defect(const Trajectory& rho, const Trajectory& R, double threshold) {
  check_pair(rho, R);
  std::vector<double> out;
  const double vol = rho.grid().cell_volume();
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const ScalarField& a = rho[k].field;
    const ScalarField& b = R[k].field;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) count += (std::abs(a[i]) <= threshold && b[i] > threshold) ? 1 : 0;
    out.push_back(static_cast<double>(count) * vol);
  }
  return out;
}

ProductSeries conserved_product_deviation(const Trajectory& rho, const Trajectory& R, double threshold) {
  check_pair(rho, R);
  ProductSeries p;
  p.times = rho.times();
  const double vol = rho.grid().cell_volume();
  const ScalarField& rho0 = rho.front().field;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const ScalarField& a = rho[k].field;
    const ScalarField& b = R[k].field;
    CompensatedSum now, fixed;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i]) <= threshold) now += b[i];
      if (std::abs(rho0[i]) <= threshold) fixed += b[i];
    }
    p.integral.push_back(now.value() * vol);
    p.integral_fixed_initial.push_back(fixed.value() * vol);
  }
  for (std::size_t k = 0; k < p.integral.size(); ++k) {
    p.max_deviation = std::max(p.max_deviation, std::abs(p.integral[k] - p.integral.front()));
    p.max_deviation_fixed_initial =
        std::max(p.max_deviation_fixed_initial, std::abs(p.integral_fixed_initial[k] - p.integral_fixed_initial.front()));
  }
  return p;
}

Trajectory product_trajectory(const Trajectory& rho, const Trajectory& s) {
  check_pair(rho, s);
  TrajectoryMeta meta = rho.meta();
  meta.scheme += "*" + s.meta().scheme;
  Trajectory out(meta);
  for (std::size_t k = 0; k < rho.size(); ++k) out.append(rho[k].field * s[k].field);
  return out;
}

double product_residual(const Trajectory& rho, const Trajectory& s, const VelocityField& u, const TestFunction& phi,
                        Notion notion) {
  if (is_renormalized(notion)) throw std::invalid_argument("product_residual takes a plain notion");
  return residual(Problem::continuity, notion, product_trajectory(rho, s), u, nullptr, phi);
}

BdeltaTable bdelta_limit_error(const ScalarField& rho, const std::vector<double>& deltas, double threshold) {
  if (deltas.empty()) throw std::invalid_argument("bdelta_limit_error: empty delta list");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw std::invalid_argument("bdelta_limit_error: deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw std::invalid_argument("bdelta_limit_error: deltas must decrease");
  }
  const ScalarField s = vacuum_indicator(rho, threshold);
  double m = std::numeric_limits<double>::infinity();
  for (double z : rho.values()) {
    if (std::abs(z) > threshold) m = std::min(m, z);
  }
  const double vol = rho.grid().cell_volume();
  const double omega = vol * static_cast<double>(rho.size());
  BdeltaTable t;
  for (double d : deltas) {
    const RenormFunction b = make_renorm(RenormKind::bdelta, d);
    CompensatedSum acc;
    for (std::size_t i = 0; i < rho.size(); ++i) acc += std::abs(b.b(rho[i]) - s[i]);
    BdeltaRow row{d, acc.value() * vol, std::nullopt};
    if (std::isfinite(m) && threshold == 0.0) row.bound = d / (d + m) * omega;
    t.rows.push_back(row);
  }
  t.monotone = true;
  t.within_bound = true;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && t.rows[i].gap > t.rows[i - 1].gap) t.monotone = false;
    if (t.rows[i].bound && t.rows[i].gap > *t.rows[i].bound * (1.0 + 1e-12)) t.within_bound = false;
  }
  return t;
}

nlohmann::json to_json(const Criterion& c) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  return {{"name", c.name}, {"value", num(c.value)}, {"tolerance", num(c.tolerance)}, {"pass", c.pass}};
}

nlohmann::json VacuumReport::to_json() const {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["measure_series"] = nlohmann::json::array();
  for (std::size_t k = 0; k < measure.times.size(); ++k) {
    j["measure_series"].push_back({measure.times[k], measure.measures[k]});
  }
  j["modulus"] = nlohmann::json::array();
  for (const auto& r : measure.modulus) j["modulus"].push_back({{"gap", r.gap}, {"max_jump", r.max_jump}});
  j["fitted_exponent"] = std::isfinite(measure.fitted_exponent) ? nlohmann::json(measure.fitted_exponent)
                                                                 : nlohmann::json(std::isnan(measure.fitted_exponent) ? "nan" : "inf");
  if (!inclusion_defects.empty()) {
    j["inclusion_defects"] = nlohmann::json::array();
    for (std::size_t k = 0; k < inclusion_defects.size(); ++k) {
      j["inclusion_defects"].push_back({measure.times[k], inclusion_defects[k]});
    }
  }
  if (product) {
    j["product_integral_series"] = nlohmann::json::array();
    for (std::size_t k = 0; k < product->times.size(); ++k) {
      j["product_integral_series"].push_back(
          {product->times[k], product->integral[k], product->integral_fixed_initial[k]});
    }
    j["product_max_deviation"] = product->max_deviation;
    j["product_max_deviation_fixed_initial"] = product->max_deviation_fixed_initial;
  }
  j["criteria"] = nlohmann::json::array();
  for (const auto& c : criteria) j["criteria"].push_back(vaclab::to_json(c));
  return j;
}

void VacuumReport::write_series_csv(std::ostream& os) const {
  os.precision(17);
  os << "t,vacuum_measure";
  if (!inclusion_defects.empty()) os << ",inclusion_defect";
  if (product) os << ",product_integral,product_integral_fixed_initial";
  os << '\n';
  for (std::size_t k = 0; k < measure.times.size(); ++k) {
    os << measure.times[k] << ',' << measure.measures[k];
    if (!inclusion_defects.empty()) os << ',' << inclusion_defects[k];
    if (product) os << ',' << product->integral[k] << ',' << product->integral_fixed_initial[k];
    os << '\n';
  }
}

VacuumReport make_vacuum_report(const Trajectory& rho, const Trajectory* R, double threshold, double resolution) {
  VacuumReport r;
  r.threshold = threshold;
  r.measure = vacuum_measure_series(rho, threshold, resolution);
  if (R) {
    r.inclusion_defects = inclusion_defect(rho, *R, threshold);
    r.product = conserved_product_deviation(rho, *R, threshold);
  }
  return r;
}

}  // namespace vaclab
