#include "vaclab/domain_fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "vaclab/parallel.hpp"

namespace vaclab {

namespace {

unsigned g_threads = 1;

}  // namespace

void set_thread_count(unsigned n) { g_threads = std::max(1u, n); }
unsigned thread_count() { return g_threads; }

Domain::Domain(DomainKind kind, std::vector<double> lower, std::vector<double> upper)
    : kind_(kind), dim_(static_cast<int>(lower.size())) {
  if (lower.size() != upper.size()) throw std::invalid_argument("domain bounds have mismatched dimension");
  if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("domain dimension must be 1, 2 or 3");
  for (int a = 0; a < dim_; ++a) {
    if (!(upper[a] > lower[a])) throw std::invalid_argument("degenerate domain axis " + std::to_string(a));
    lower_[a] = lower[a];
    upper_[a] = upper[a];
  }
}

Domain Domain::unit_box(int dim, DomainKind kind) {
  return Domain(kind, std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

double Domain::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= length(a);
  return v;
}

Point Domain::center() const {
  Point c{};
  for (int a = 0; a < dim_; ++a) c[a] = 0.5 * (lower_[a] + upper_[a]);
  return c;
}

Point Domain::wrap(const Point& x) const {
  if (!periodic()) return x;
  Point y = x;
  for (int a = 0; a < dim_; ++a) {
    const double len = length(a);
    double r = std::fmod(y[a] - lower_[a], len);
    if (r < 0) r += len;
    y[a] = lower_[a] + r;
  }
  return y;
}

bool Domain::contains_closure(const Point& x, double slack) const {
  if (periodic()) return true;
  for (int a = 0; a < dim_; ++a) {
    if (x[a] < lower_[a] - slack || x[a] > upper_[a] + slack) return false;
  }
  return true;
}

double dist_boundary(const Point& x, const Domain& domain) {
  if (domain.periodic()) throw std::logic_error("a periodic domain has no boundary");
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < domain.dim(); ++a) {
    d = std::min({d, x[a] - domain.lower(a), domain.upper(a) - x[a]});
  }
  return std::max(d, 0.0);
}

Point dist_boundary_gradient(const Point& x, const Domain& domain) {
  if (domain.periodic()) throw std::logic_error("a periodic domain has no boundary");
  double best = std::numeric_limits<double>::infinity();
  Point g{};
  for (int a = 0; a < domain.dim(); ++a) {
    const double lo = x[a] - domain.lower(a);
    const double hi = domain.upper(a) - x[a];
    if (lo < best) {
      best = lo;
      g = Point{};
      g[a] = 1.0;
    }
    if (hi < best) {
      best = hi;
      g = Point{};
      g[a] = -1.0;
    }
  }
  return g;
}

Grid::Grid(Domain domain, std::vector<int> cells, double t_final)
    : domain_(std::move(domain)), t_final_(t_final) {
  if (static_cast<int>(cells.size()) != domain_.dim()) {
    throw std::invalid_argument("grid cell counts do not match the domain dimension");
  }
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be non-negative");
  count_ = 1;
  volume_ = 1.0;
  for (int a = 0; a < domain_.dim(); ++a) {
    if (cells[a] < 1) throw std::invalid_argument("grid needs at least one cell per axis");
    n_[a] = cells[a];
    h_[a] = domain_.length(a) / cells[a];
    count_ *= static_cast<std::size_t>(cells[a]);
    volume_ *= h_[a];
  }
}

std::shared_ptr<const Grid> Grid::make(Domain domain, std::vector<int> cells, double t_final) {
  return std::make_shared<const Grid>(std::move(domain), std::move(cells), t_final);
}

double Grid::min_h() const { return *std::min_element(h_.begin(), h_.begin() + dim()); }
double Grid::max_h() const { return *std::max_element(h_.begin(), h_.begin() + dim()); }

std::array<int, 3> Grid::multi_index(std::size_t idx) const {
  std::array<int, 3> ijk{0, 0, 0};
  ijk[0] = static_cast<int>(idx % n_[0]);
  idx /= n_[0];
  ijk[1] = static_cast<int>(idx % n_[1]);
  ijk[2] = static_cast<int>(idx / n_[1]);
  return ijk;
}

Point Grid::cell_center(const std::array<int, 3>& ijk) const {
  Point x{};
  for (int a = 0; a < dim(); ++a) x[a] = domain_.lower(a) + (ijk[a] + 0.5) * h_[a];
  return x;
}

Point Grid::cell_center(std::size_t idx) const { return cell_center(multi_index(idx)); }

std::shared_ptr<const Grid> Grid::refined(int factor) const {
  std::vector<int> cells(dim());
  for (int a = 0; a < dim(); ++a) cells[a] = n_[a] * factor;
  return make(domain_, std::move(cells), t_final_);
}

std::shared_ptr<const Grid> Grid::with_t_final(double t_final) const {
  std::vector<int> cells(n_.begin(), n_.begin() + dim());
  return make(domain_, std::move(cells), t_final);
}

bool Grid::operator==(const Grid& other) const {
  if (dim() != other.dim() || domain_.kind() != other.domain_.kind()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (n_[a] != other.n_[a] || domain_.lower(a) != other.domain_.lower(a) ||
        domain_.upper(a) != other.domain_.upper(a)) {
      return false;
    }
  }
  return true;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values, double time, bool nonnegative)
    : grid_(std::move(grid)), values_(std::move(values)), time_(time), nonnegative_(nonnegative) {
  if (!grid_) throw std::invalid_argument("scalar field without a grid");
  if (values_.size() != grid_->cell_count()) {
    throw std::invalid_argument("scalar field value count does not match the grid cell count");
  }
  if (nonnegative_ && !values_.empty() && min() < 0.0) {
    throw std::invalid_argument("field flagged nonnegative has a negative value");
  }
}

ScalarField ScalarField::constant(GridPtr grid, double value, double time) {
  const auto n = grid->cell_count();
  return ScalarField(std::move(grid), std::vector<double>(n, value), time, value >= 0.0);
}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(const Point&)>& fn, double time,
                                bool nonnegative) {
  std::vector<double> v(grid->cell_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->cell_center(i));
  return ScalarField(std::move(grid), std::move(v), time, nonnegative);
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

ScalarField ScalarField::with_values(std::vector<double> values, double time) const {
  return ScalarField(grid_, std::move(values), time, nonnegative_);
}

ScalarField ScalarField::with_time(double time) const {
  return ScalarField(grid_, values_, time, nonnegative_);
}

void Trajectory::append(ScalarField field) {
  if (snapshots_.empty()) {
    if (field.time() != 0.0) throw std::invalid_argument("trajectory must start at t = 0");
  } else {
    if (!(field.time() > snapshots_.back().time)) {
      throw std::invalid_argument("trajectory times must be strictly increasing");
    }
    if (!(field.grid() == grid())) throw std::invalid_argument("trajectory snapshots must share one grid");
  }
  const double t = field.time();
  snapshots_.push_back(Snapshot{t, std::move(field)});
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots_.size());
  for (const auto& s : snapshots_) t.push_back(s.time);
  return t;
}

std::size_t Trajectory::index_of(double t) const {
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    if (std::abs(snapshots_[i].time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  }
  throw std::out_of_range("no snapshot at time " + std::to_string(t));
}

double integrate(const ScalarField& f) {
  CompensatedSum s;
  for (double v : f.values()) s += v;
  return s.value() * f.grid().cell_volume();
}

double integrate(const ScalarField& f, std::span<const std::uint8_t> mask) {
  CompensatedSum s;
  const auto v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) s += v[i];
  }
  return s.value() * f.grid().cell_volume();
}

double lp_norm(std::span<const double> values, double cell_volume, const Exponent& r,
               std::span<const std::uint8_t> mask) {
  const bool masked = !mask.empty();
  if (r.is_infinite()) {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!masked || mask[i]) m = std::max(m, std::abs(values[i]));
    }
    return m;
  }
  const double rr = r.to_double();
  CompensatedSum s;
  if (rr == 1.0) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!masked || mask[i]) s += std::abs(values[i]);
    }
    return s.value() * cell_volume;
  }
  if (rr == 2.0) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!masked || mask[i]) s += values[i] * values[i];
    }
    return std::sqrt(s.value() * cell_volume);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!masked || mask[i]) s += std::pow(std::abs(values[i]), rr);
  }
  return std::pow(s.value() * cell_volume, 1.0 / rr);
}

double lp_norm(const ScalarField& f, const Exponent& r) {
  return lp_norm(f.values(), f.grid().cell_volume(), r);
}

double lp_norm(const ScalarField& f, const Exponent& r, std::span<const std::uint8_t> mask) {
  return lp_norm(f.values(), f.grid().cell_volume(), r, mask);
}

double time_norm(std::span<const double> times, std::span<const double> values, const Exponent& p) {
  if (times.size() != values.size() || times.empty()) {
    throw std::invalid_argument("time_norm needs matching, non-empty series");
  }
  if (p.is_infinite()) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (times.size() == 1) return 0.0;
  const double pp = p.to_double();
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    s += 0.5 * dt * (std::pow(std::abs(values[k]), pp) + std::pow(std::abs(values[k + 1]), pp));
  }
  return std::pow(s.value(), 1.0 / pp);
}

double bochner_norm(const Trajectory& traj, const Exponent& p, const Exponent& r) {
  if (traj.empty()) throw std::invalid_argument("bochner_norm of an empty trajectory");
  std::vector<double> norms;
  norms.reserve(traj.size());
  for (const auto& s : traj) norms.push_back(lp_norm(s.field, r));
  const auto t = traj.times();
  return time_norm(t, norms, p);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need matching series of length >= 2");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope: abscissae must differ");
  return sxy / sxx;
}

double interpolate(const ScalarField& f, const Point& x) {
  const Grid& g = f.grid();
  const Domain& dom = g.domain();
  const int dim = g.dim();
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) {
    const int n = g.n(a);
    double s = (x[a] - dom.lower(a)) / g.h(a) - 0.5;
    if (dom.periodic()) {
      const double fl = std::floor(s);
      w[a] = s - fl;
      long i0 = static_cast<long>(fl) % n;
      if (i0 < 0) i0 += n;
      lo[a] = static_cast<int>(i0);
      hi[a] = (lo[a] + 1) % n;
    } else {
      s = std::clamp(s, 0.0, static_cast<double>(n - 1));
      const int i0 = std::min(static_cast<int>(s), n - 1);
      w[a] = s - i0;
      lo[a] = i0;
      hi[a] = std::min(i0 + 1, n - 1);
    }
  }
  double acc = 0.0;
  const int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> ijk{0, 0, 0};
    double weight = 1.0;
    for (int a = 0; a < dim; ++a) {
      const bool up = (c >> a) & 1;
      ijk[a] = up ? hi[a] : lo[a];
      weight *= up ? w[a] : 1.0 - w[a];
    }
    if (weight != 0.0) acc += weight * f[g.index(ijk[0], ijk[1], ijk[2])];
  }
  return acc;
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field product on mismatched grids");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  return ScalarField(a.grid_ptr(), std::move(v), a.time(), a.nonnegative() && b.nonnegative());
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field difference on mismatched grids");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return ScalarField(a.grid_ptr(), std::move(v), a.time());
}

void write_csv(const ScalarField& f, std::ostream& os) {
  const auto& g = f.grid();
  static constexpr const char* names[] = {"x", "y", "z"};
  for (int a = 0; a < g.dim(); ++a) os << names[a] << ',';
  os << "value\n";
  os.precision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto x = g.cell_center(i);
    for (int a = 0; a < g.dim(); ++a) os << x[a] << ',';
    os << f[i] << '\n';
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw std::runtime_error("truncated field dump");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_binary(const ScalarField& f, std::ostream& os) {
  const auto& g = f.grid();
  os.write("VLF1", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(os, g.domain().periodic() ? 0u : 1u);
  for (int a = 0; a < g.dim(); ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n(a)));
  for (int a = 0; a < g.dim(); ++a) put<double>(os, g.domain().lower(a));
  for (int a = 0; a < g.dim(); ++a) put<double>(os, g.h(a));
  put<double>(os, f.time());
  for (double v : f.values()) put<double>(os, v);
}

ScalarField read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "VLF1", 4) != 0) {
    throw std::runtime_error("not a field dump (bad magic)");
  }
  const auto dim = get<std::uint32_t>(is);
  if (dim < 1 || dim > 3) throw std::runtime_error("field dump has invalid dimension");
  const auto kind = get<std::uint32_t>(is) == 0 ? DomainKind::periodic_box : DomainKind::lipschitz_box;
  std::vector<int> n(dim);
  std::vector<double> lower(dim), upper(dim);
  for (auto& v : n) v = static_cast<int>(get<std::uint32_t>(is));
  for (auto& v : lower) v = get<double>(is);
  for (std::uint32_t a = 0; a < dim; ++a) upper[a] = lower[a] + n[a] * get<double>(is);
  const double time = get<double>(is);
  auto grid = Grid::make(Domain(kind, lower, upper), n);
  std::vector<double> values(grid->cell_count());
  for (auto& v : values) v = get<double>(is);
  return ScalarField(std::move(grid), std::move(values), time);
}

}  // namespace vaclab
