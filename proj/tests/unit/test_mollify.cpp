#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "vaclab/mollify.hpp"

using namespace vaclab;

namespace {

const double pi = std::numbers::pi;

ScalarField random_field(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(g->cell_count());
  for (double& x : v) x = dist(rng);
  return ScalarField(g, std::move(v));
}

double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

}  // namespace

TEST_CASE("kernel mass, symmetry and support") {
  for (const GridPtr& g : {Grid::make(Domain::unit_box(1), {256}), Grid::make(Domain::unit_box(2), {64, 64}),
                           Grid::make(Domain::unit_box(3), {24, 24, 24})}) {
    const int d = g->dim();
    CAPTURE(d);
    const MollifierKernel k = make_kernel(4.0 * g->h(0), *g);
    CHECK(std::abs(k.discrete_mass() - 1.0) <= 1e-14);
    std::map<std::array<int, 3>, double> w;
    for (std::size_t i = 0; i < k.offsets().size(); ++i) {
      const auto& o = k.offsets()[i];
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (o[a] * g->h(a)) * (o[a] * g->h(a));
      CHECK(std::sqrt(r2) < k.epsilon());
      CHECK(k.weights()[i] > 0.0);
      w[o] = k.weights()[i];
    }
    for (const auto& [o, v] : w) {
      const std::array<int, 3> m{-o[0], -o[1], -o[2]};
      REQUIRE(w.count(m) == 1);
      CHECK(w.at(m) == v);
    }
  }
  const GridPtr g = Grid::make(Domain::unit_box(1), {64});
  CHECK_THROWS_AS(make_kernel(1.5 * g->h(0), *g), std::invalid_argument);
}

TEST_CASE("mollification on the torus") {
  const GridPtr g = Grid::make(Domain::unit_box(2, DomainKind::periodic_box), {64, 64});
  const MollifierKernel k = make_kernel(6.0 * g->h(0), *g);

  const ScalarField c = mollify(ScalarField::constant(g, 2.5), k);
  for (double v : c.values()) CHECK(std::abs(v - 2.5) <= 1e-13);

  const ScalarField f = random_field(g, 1), h = random_field(g, 2);
  const ScalarField mf = mollify(f, k), mh = mollify(h, k);
  // self-adjointness of a symmetric convolution
  CHECK(std::abs(dot(mf, h) - dot(f, mh)) <= 1e-12);
  for (const Exponent& p : {Exponent::finite(1), Exponent::finite(2), Exponent::infinity()}) {
    CHECK(lp_norm(mf, p) <= lp_norm(f, p) + 1e-12);
  }
  CHECK(std::abs(integrate(mf) - integrate(f)) <= 1e-13);
}

TEST_CASE("smoothing error of a smooth function is second order in epsilon") {
  const GridPtr g = Grid::make(Domain::unit_box(1, DomainKind::periodic_box), {1024});
  const ScalarField f = ScalarField::sample(g, [](const Point& x) { return std::sin(2 * pi * x[0]); });
  auto err = [&](double e) { return lp_norm(mollify(f, make_kernel(e, *g)) - f, Exponent::infinity()); };
  const double e1 = err(32 * g->h(0)), e2 = err(16 * g->h(0));
  CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("zero extension on a box") {
  const GridPtr g = Grid::make(Domain::unit_box(1), {128});
  const MollifierKernel k = make_kernel(8.0 * g->h(0), *g);
  const ScalarField m = mollify(ScalarField::constant(g, 1.0), k);
  CHECK(m[0] < 1.0);
  CHECK(std::abs(m[64] - 1.0) <= 1e-14);
  const CellMask in = interior_mask(*g, k.epsilon());
  CHECK(in[0] == 0);
  CHECK(in[64] == 1);
  for (std::size_t i = 0; i < g->cell_count(); ++i) {
    if (in[i]) CHECK(std::abs(m[i] - 1.0) <= 1e-14);
  }
  const CellMask all = interior_mask(*Grid::make(Domain::unit_box(1, DomainKind::periodic_box), {16}), 0.4);
  for (auto v : all) CHECK(v == 1);
}

TEST_CASE("commutator of a uniform flow vanishes") {
  const Domain torus = Domain::unit_box(2, DomainKind::periodic_box);
  const GridPtr g = Grid::make(torus, {64, 64});
  const VelocityField u = make_velocity("uniform", torus, {{"v", {0.7, -0.3}}});
  const ScalarField f = random_field(g, 3);
  for (CommutatorForm form : {CommutatorForm::friedrichs, CommutatorForm::flux}) {
    const CommutatorField r = friedrichs_commutator(f, u, make_kernel(4.0 * g->h(0), *g), form);
    CHECK(lp_norm(r.r, Exponent::infinity()) <= 1e-10);
  }
}

TEST_CASE("commutator decay for smooth data") {
  const Domain line(DomainKind::lipschitz_box, {-1.0}, {1.0});
  const GridPtr g = Grid::make(line, {512});
  const VelocityField u = make_velocity("sine_zero_trace", line);
  Trajectory traj;
  for (int k = 0; k <= 2; ++k) {
    const double t = 0.5 * k;
    traj.append(ScalarField::sample(g, [t](const Point& x) { return 1.0 + 0.5 * std::cos(pi * x[0] + t); }, t));
  }
  const double h = g->h(0);
  const DecayStudy s = decay_study(traj, u, {32 * h, 16 * h, 8 * h, 4 * h});
  REQUIRE(s.rows.size() == 4);
  CHECK(s.slope >= 0.8);
  CHECK(s.strictly_decreasing);
  CHECK(s.monotone);
  CHECK_THROWS_AS(decay_study(traj, u, {4 * h, 8 * h}), std::invalid_argument);
}

TEST_CASE("commutator decreases for a discontinuous field") {
  // the step varies along the flow direction so the commutator does not vanish
  const Domain torus = Domain::unit_box(2, DomainKind::periodic_box);
  const GridPtr g = Grid::make(torus, {128, 128});
  const VelocityField u = make_velocity("shear", torus);
  Trajectory traj;
  traj.append(ScalarField::sample(g, [](const Point& x) { return x[0] > 0.25 && x[0] < 0.75 ? 1.0 : 0.0; }));
  const double h = g->h(0);
  const DecayStudy s = decay_study(traj, u, {32 * h, 16 * h, 8 * h, 4 * h});
  CHECK(s.strictly_decreasing);
}
