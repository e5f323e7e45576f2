#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vaclab/characteristics.hpp"

using namespace vaclab;

namespace {

const double pi = std::numbers::pi;

// Closed-form flow of dx/dt = sin(πx): tan(πX/2) = tan(πx/2)·e^{πt}.
double sine_flow(double x, double t) { return 2.0 / pi * std::atan(std::tan(pi * x / 2.0) * std::exp(pi * t)); }

const Domain line(DomainKind::lipschitz_box, {-1.0}, {1.0});

}  // namespace

TEST_CASE("uniform velocity characteristics are exact shifts") {
  const Domain torus = Domain::unit_box(2, DomainKind::periodic_box);
  const VelocityField u = make_velocity("uniform", torus, {{"v", {0.25, -0.5}}});
  const Characteristic c = trace_characteristic(u, torus, {0.1, 0.2, 0.0}, 0.0, 1.0, 7);
  CHECK(c.x[0] == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(c.x[1] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(c.log_jacobian == 0.0);
  CHECK_FALSE(c.escaped);
}

TEST_CASE("solid rotation preserves the radius") {
  const Domain box(DomainKind::lipschitz_box, {-2.0, -2.0}, {2.0, 2.0});
  const VelocityField u = make_velocity("solid_rotation", box);
  const Characteristic c = trace_characteristic(u, box, {1.0, 0.5, 0.0}, 0.0, 2.0 * pi, 2000);
  CHECK(std::abs(std::hypot(c.x[0], c.x[1]) - std::hypot(1.0, 0.5)) <= 1e-10);
  CHECK(c.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sine characteristics converge at fourth order to the closed form") {
  const VelocityField u = make_velocity("sine_zero_trace", line);
  auto at = [&](int n) { return trace_characteristic(u, line, {0.5, 0, 0}, 0.0, 1.0, n).x[0]; };
  const double a = at(16), b = at(32), c = at(64);
  const double ratio = (a - b) / (b - c);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
  CHECK(std::abs(c - sine_flow(0.5, 1.0)) <= 1e-7);
  const Characteristic ch = trace_characteristic(u, line, {0.5, 0, 0}, 0.0, 1.0, 256);
  // ∂X/∂x = u(X)/u(x) for an autonomous scalar field
  CHECK(ch.log_jacobian == doctest::Approx(std::log(std::sin(pi * ch.x[0]) / std::sin(pi * 0.5))).epsilon(1e-9));
}

TEST_CASE("exact continuity matches the closed-form density") {
  const GridPtr g = Grid::make(line, {512});
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const FlowMap flow = compute_flow(u, g, {0.0, 0.5, 1.0}, 2048);
  const OracleField rho = exact_continuity([](const Point&) { return 1.0; }, flow, 1.0);
  for (std::size_t i = 0; i < g->cell_count(); i += 37) {
    const double x = g->cell_center(i)[0];
    if (x == 0.0) continue;
    const double x0 = sine_flow(x, -1.0);
    CHECK(rho.field[i] == doctest::Approx(std::sin(pi * x0) / std::sin(pi * x)).epsilon(1e-8));
  }
  // the midpoint quadrature of a density concentrating at x = 1 is accurate to the sampling error only
  CHECK(std::abs(integrate(rho.field) - 2.0) <= 2e-2);
  CHECK(rho.escaped == 0);
}

TEST_CASE("mass conservation of the oracle for a smooth density") {
  const GridPtr g = Grid::make(line, {2048});
  const VelocityField u = make_velocity("sine_zero_trace", line, {{"amplitude", {0.3}}});
  const OracleTrajectory o = oracle_trajectory(
      Equation::continuity, [](const Point& x) { return 1.0 + 0.5 * std::cos(pi * x[0]); }, u, g, {0.0, 0.5, 1.0},
      2048, true);
  const double m0 = integrate(o.trajectory.front().field);
  for (const auto& snap : o.trajectory) CHECK(std::abs(integrate(snap.field) - m0) <= 1e-6);
}

TEST_CASE("divergence-free flows rearrange the density") {
  const Domain box = Domain::unit_box(2);
  const GridPtr g = Grid::make(box, {128, 128});
  const VelocityField u = make_velocity("divfree_stream", box);
  const FlowMap flow = compute_flow(u, g, {0.0, 0.5, 1.0}, 512);
  auto rho0 = [](const Point& x) { return 1.0 + std::exp(-40.0 * ((x[0] - 0.4) * (x[0] - 0.4) + (x[1] - 0.5) * (x[1] - 0.5))); };
  const ScalarField f0 = ScalarField::sample(g, rho0);
  const OracleField f1 = exact_continuity(rho0, flow, 1.0);
  for (const auto& r : {Exponent::finite(1), Exponent::finite(2), Exponent::infinity()}) {
    CHECK(std::abs(lp_norm(f1.field, r) - lp_norm(f0, r)) <= 1e-3);
  }
  const OracleField s1 = exact_transport(rho0, flow, 1.0);
  for (std::size_t i = 0; i < g->cell_count(); ++i) CHECK(s1.field[i] == doctest::Approx(f1.field[i]).epsilon(1e-10));
}

TEST_CASE("uniform velocity on a torus shifts the data") {
  const Domain torus = Domain::unit_box(1, DomainKind::periodic_box);
  const GridPtr g = Grid::make(torus, {64});
  const VelocityField u = make_velocity("uniform", torus, {{"v", {0.25}}});
  const FlowMap flow = compute_flow(u, g, {0.0, 1.0}, 16);
  auto f = [](const Point& x) { return std::sin(2 * pi * x[0]); };
  const OracleField c = exact_continuity(f, flow, 1.0);
  const OracleField s = exact_transport(f, flow, 1.0);
  for (std::size_t i = 0; i < g->cell_count(); ++i) {
    const double x = g->cell_center(i)[0];
    CHECK(c.field[i] == doctest::Approx(std::sin(2 * pi * (x - 0.25))).epsilon(1e-12));
    CHECK(s.field[i] == doctest::Approx(std::sin(2 * pi * (x - 0.25))).epsilon(1e-12));
  }
}

TEST_CASE("transport preserves constants and ranges") {
  const GridPtr g = Grid::make(line, {256});
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const FlowMap flow = compute_flow(u, g, {0.0, 1.0}, 512);
  const OracleField c = exact_transport([](const Point&) { return 3.5; }, flow, 1.0);
  for (double v : c.field.values()) CHECK(v == 3.5);
  const ScalarField s0 = ScalarField::sample(g, [](const Point& x) { return x[0] > 0.2 ? 2.0 : -1.0; });
  const OracleField s = exact_transport(s0, flow, 1.0);
  CHECK(s.field.min() >= s0.min());
  CHECK(s.field.max() <= s0.max());
}

TEST_CASE("vacuum measure of the transported interval") {
  const GridPtr g = Grid::make(line, {1024});
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
  const FlowMap flow = compute_flow(u, g, times, 2048);
  const ScalarField rho0 = ScalarField::sample(g, [](const Point& x) { return std::abs(x[0]) < 0.1 ? 0.0 : 1.0; });
  double prev = 0.0;
  for (double t : times) {
    const double m = exact_vacuum_measure(rho0, flow, t);
    const double exact = sine_flow(0.1, t) - sine_flow(-0.1, t);
    CHECK(std::abs(m - exact) <= 4.0 * g->h(0));
    CHECK(m >= prev);
    prev = m;
  }
  const ScalarField positive = ScalarField::constant(g, 1.0);
  CHECK(exact_vacuum_measure(positive, flow, 1.0) == 0.0);
}

TEST_CASE("divergence-free vacuum measure is constant") {
  const Domain box = Domain::unit_box(2);
  const GridPtr g = Grid::make(box, {64, 64});
  const FlowMap flow = compute_flow(make_velocity("divfree_stream", box), g, {0.0, 0.5, 1.0}, 256);
  const ScalarField rho0 = ScalarField::sample(g, [](const Point& x) {
    return std::hypot(x[0] - 0.3, x[1] - 0.5) < 0.15 ? 0.0 : 1.0;
  });
  const double m0 = exact_vacuum_measure(rho0, flow, 0.0);
  CHECK(std::abs(m0 - pi * 0.15 * 0.15) <= 1e-2);
  CHECK(std::abs(exact_vacuum_measure(rho0, flow, 1.0) - m0) <= 1e-3);
}

TEST_CASE("time-dependent fields use per-time tracing") {
  const GridPtr g = Grid::make(line, {512});
  const VelocityField u = make_velocity("sine_zero_trace", line, {{"frequency", {1.0}}, {"amplitude", {0.5}}});
  const OracleTrajectory o = oracle_trajectory(
      Equation::continuity, [](const Point& x) { return 1.0 + 0.5 * std::cos(pi * x[0]); }, u, g,
      {0.0, 0.25, 0.5, 0.75, 1.0}, 1024, true);
  const double m0 = integrate(o.trajectory.front().field);
  for (const auto& snap : o.trajectory) CHECK(std::abs(integrate(snap.field) - m0) <= 1e-5);
  // a full period of cos(2πt) returns every particle to its start
  for (std::size_t i = 0; i < g->cell_count(); i += 31) {
    CHECK(o.trajectory.back().field[i] == doctest::Approx(o.trajectory.front().field[i]).epsilon(1e-8));
  }
}

TEST_CASE("invalid flow requests are rejected") {
  const GridPtr g = Grid::make(line, {16});
  const VelocityField u = make_velocity("sine_zero_trace", line);
  CHECK_THROWS_AS(compute_flow(u, g, {0.5, 1.0}, 8), std::invalid_argument);
  CHECK_THROWS_AS(compute_flow(u, g, {0.0, 1.0, 0.5}, 8), std::invalid_argument);
  const FlowMap flow = compute_flow(u, g, {0.0, 1.0}, 8);
  CHECK_THROWS(exact_continuity([](const Point&) { return 1.0; }, flow, 2.0));
}
