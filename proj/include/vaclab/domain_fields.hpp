#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vaclab/exponents.hpp"

namespace vaclab {

using Point = std::array<double, 3>;

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

enum class DomainKind { periodic_box, lipschitz_box };

/// Axis-aligned box in 1–3 dimensions, either periodic (a torus) or a
/// bounded Lipschitz box with an exact distance-to-boundary evaluator.
class Domain {
public:
  Domain(DomainKind kind, std::vector<double> lower, std::vector<double> upper);

  static Domain unit_box(int dim, DomainKind kind = DomainKind::lipschitz_box);

  DomainKind kind() const { return kind_; }
  bool periodic() const { return kind_ == DomainKind::periodic_box; }
  int dim() const { return dim_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double length(int axis) const { return upper_[axis] - lower_[axis]; }
  double volume() const;
  Point center() const;

  /// Maps a point back into the fundamental cell (identity for boxes).
  Point wrap(const Point& x) const;
  bool contains_closure(const Point& x, double slack = 0.0) const;

private:
  DomainKind kind_;
  int dim_;
  std::array<double, 3> lower_{};
  std::array<double, 3> upper_{};
};

/// min over faces; throws std::logic_error on a periodic domain.
double dist_boundary(const Point& x, const Domain& domain);

/// Unit inward normal of the nearest face (the a.e. gradient of the distance).
Point dist_boundary_gradient(const Point& x, const Domain& domain);

/// Uniform cell-centred grid over a domain, with the simulated time span [0, t_final].
class Grid {
public:
  Grid(Domain domain, std::vector<int> cells, double t_final = 1.0);
  static std::shared_ptr<const Grid> make(Domain domain, std::vector<int> cells, double t_final = 1.0);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int n(int axis) const { return n_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double min_h() const;
  double max_h() const;
  double t_final() const { return t_final_; }
  std::size_t cell_count() const { return count_; }
  double cell_volume() const { return volume_; }

  std::size_t index(int i, int j = 0, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_[1]) * k);
  }
  std::array<int, 3> multi_index(std::size_t idx) const;
  Point cell_center(std::size_t idx) const;
  Point cell_center(const std::array<int, 3>& ijk) const;

  /// Same domain, `factor` times more cells per axis.
  std::shared_ptr<const Grid> refined(int factor) const;
  /// Same cells and domain, different time span.
  std::shared_ptr<const Grid> with_t_final(double t_final) const;

  bool operator==(const Grid& other) const;

private:
  Domain domain_;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  double t_final_;
  std::size_t count_;
  double volume_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Immutable snapshot of a scalar sampled at cell centres.
class ScalarField {
public:
  ScalarField(GridPtr grid, std::vector<double> values, double time = 0.0, bool nonnegative = false);

  static ScalarField constant(GridPtr grid, double value, double time = 0.0);
  static ScalarField sample(GridPtr grid, const std::function<double(const Point&)>& fn,
                            double time = 0.0, bool nonnegative = false);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double time() const { return time_; }
  bool nonnegative() const { return nonnegative_; }

  double min() const;
  double max() const;

  ScalarField with_values(std::vector<double> values, double time) const;
  ScalarField with_time(double time) const;

private:
  GridPtr grid_;
  std::vector<double> values_;
  double time_;
  bool nonnegative_;
};

struct Snapshot {
  double time;
  ScalarField field;
};

struct TrajectoryMeta {
  std::string scheme;
  double cfl = 0.0;
  std::string velocity_id;
};

/// Time-ordered snapshots on a single grid; the first snapshot is at t = 0.
class Trajectory {
public:
  Trajectory() = default;
  explicit Trajectory(TrajectoryMeta meta) : meta_(std::move(meta)) {}

  void append(ScalarField field);

  bool empty() const { return snapshots_.empty(); }
  std::size_t size() const { return snapshots_.size(); }
  const Snapshot& operator[](std::size_t i) const { return snapshots_[i]; }
  const Snapshot& front() const { return snapshots_.front(); }
  const Snapshot& back() const { return snapshots_.back(); }
  auto begin() const { return snapshots_.begin(); }
  auto end() const { return snapshots_.end(); }
  std::vector<double> times() const;
  const Grid& grid() const { return snapshots_.front().field.grid(); }
  const TrajectoryMeta& meta() const { return meta_; }
  TrajectoryMeta& meta() { return meta_; }

  /// Index of the snapshot at time t (within 1e-9 relative); throws if absent.
  std::size_t index_of(double t) const;

private:
  TrajectoryMeta meta_;
  std::vector<Snapshot> snapshots_;
};

using CellMask = std::vector<std::uint8_t>;

double integrate(const ScalarField& f);
double integrate(const ScalarField& f, std::span<const std::uint8_t> mask);
double lp_norm(const ScalarField& f, const Exponent& r);
double lp_norm(const ScalarField& f, const Exponent& r, std::span<const std::uint8_t> mask);
double lp_norm(std::span<const double> values, double cell_volume, const Exponent& r,
               std::span<const std::uint8_t> mask = {});
double bochner_norm(const Trajectory& traj, const Exponent& p, const Exponent& r);
/// Discrete L^p-in-time composition of per-snapshot values (trapezoid rule,
/// max for p = ∞).
double time_norm(std::span<const double> times, std::span<const double> values, const Exponent& p);

/// Least-squares slope of log y against log x; throws unless both are
/// positive and at least two points are given.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Multilinear interpolation of cell-centred samples. Periodic grids wrap;
/// boxes extend constantly over the outer half cell.
double interpolate(const ScalarField& f, const Point& x);

ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);

void write_csv(const ScalarField& f, std::ostream& os);
/// Little-endian binary dump: "VLF1", u32 dim, u32 kind, u32 n[dim],
/// f64 lower[dim], f64 h[dim], f64 time, then n cells of f64 (x fastest).
void write_binary(const ScalarField& f, std::ostream& os);
ScalarField read_binary(std::istream& is);

}  // namespace vaclab
