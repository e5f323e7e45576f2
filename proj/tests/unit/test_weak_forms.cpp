#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vaclab/characteristics.hpp"
#include "vaclab/weak_forms.hpp"

using namespace vaclab;

namespace {

const double pi = std::numbers::pi;
const Domain line(DomainKind::lipschitz_box, {-1.0}, {1.0});

Trajectory oracle(Equation eq, int n, int snapshots) {
  const GridPtr g = Grid::make(line, {n});
  std::vector<double> times;
  for (int k = 0; k <= snapshots; ++k) times.push_back(static_cast<double>(k) / snapshots);
  return oracle_trajectory(eq, [](const Point& x) { return 1.0 + 0.5 * std::cos(pi * x[0]); },
                           make_velocity("sine_zero_trace", line), g, times, 2048, true)
      .trajectory;
}

}  // namespace

TEST_CASE("time profiles") {
  const TimeProfile p = TimeProfile::hat_plus(0.5, 0.1);
  CHECK(p.value(0.05) == doctest::Approx(0.5));
  CHECK(p.value(0.3) == 1.0);
  CHECK(p.value(0.55) == doctest::Approx(0.5));
  CHECK(p.value(0.7) == 0.0);
  CHECK(p.derivative(0.55) == doctest::Approx(-10.0));
  const TimeProfile m = TimeProfile::hat_minus(0.5, 0.1);
  CHECK(m.value(0.45) == doctest::Approx(0.5));
  CHECK(m.value(0.5) == doctest::Approx(0.0));
  const TimeProfile b = TimeProfile::smooth_bump(0.0, 1.0);
  CHECK(b.value(0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(b.value(0.0) == 0.0);
  CHECK(b.value(1.0) == 0.0);
  CHECK(TimeProfile::affine(1.0, 2.0).value(0.25) == 1.5);
  CHECK(TimeProfile::constant_one().derivative(0.3) == 0.0);
}

TEST_CASE("renormalizing functions") {
  const RenormFunction tk = make_renorm(RenormKind::trunc_k, 10.0);
  CHECK(tk.b(5.0) == doctest::Approx(5.0));
  CHECK(tk.b(30.0) == doctest::Approx(20.0));
  CHECK(tk.db(30.0) == 0.0);
  CHECK(tk.db(45.0) == 0.0);
  CHECK(tk.db(5.0) == 1.0);
  CHECK(tk.defect(5.0) == doctest::Approx(0.0));
  // T is C¹ at s = 1 and s = 3
  CHECK(tk.db(10.0 + 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(tk.db(30.0 - 1e-9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(make_renorm(RenormKind::trunc_k, 1.0), std::invalid_argument);

  const RenormFunction bd = make_renorm(RenormKind::bdelta, 0.1);
  CHECK(bd.b(0.0) == 1.0);
  CHECK(bd.b(0.9) == doctest::Approx(0.1));
  CHECK(bd.defect(0.0) == -1.0);
  CHECK_THROWS_AS(make_renorm(RenormKind::bdelta, 0.0), std::invalid_argument);

  const RenormFunction rg = make_renorm(RenormKind::ren_generic, 2.0);
  CHECK(rg.b(3.0) == doctest::Approx(4.0 / 3.0));
  CHECK(rg.db(2.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(rg.growth.derivative_compact);

  CHECK(parse_renorm_kind("BDELTA") == RenormKind::bdelta);
  CHECK_THROWS_AS(parse_renorm_kind("log"), std::invalid_argument);
  CHECK(parse_notion(to_string(Notion::renormalized_time_integrated_weak)) ==
        Notion::renormalized_time_integrated_weak);
  CHECK(all_notions().size() == 8);
}

TEST_CASE("boundary cutoff") {
  const Domain box = Domain::unit_box(2);
  const BoundaryCutoff xi(box, 8);
  CHECK(xi.value({0.5, 0.5, 0}) == 1.0);
  CHECK(xi.value({0.01, 0.5, 0}) == 0.0);
  CHECK(xi.in_strip({0.05, 0.5, 0}));
  CHECK_FALSE(xi.in_strip({0.1, 0.5, 0}));
  CHECK(BoundaryCutoff::chi(0.375) == doctest::Approx(0.5));
  for (double s = 0.25; s <= 0.5; s += 0.01) CHECK(BoundaryCutoff::chi_prime(s) <= BoundaryCutoff::gradient_constant());
}

TEST_CASE("spatial parts") {
  const SpatialPart b = bump_spatial(line, {0.0, 0, 0}, 0.5);
  CHECK(b.compact);
  CHECK(b.value({0.0, 0, 0}) == doctest::Approx(std::exp(-1.0)));
  CHECK(b.value({0.6, 0, 0}) == 0.0);
  CHECK_THROWS_AS(bump_spatial(line, {0.8, 0, 0}, 0.5), std::invalid_argument);
  const Domain ring = Domain::unit_box(1, DomainKind::periodic_box);
  CHECK_THROWS_AS(cosine_spatial(ring, {0, 0, 0}, {3.0}), std::invalid_argument);
  const SpatialPart c = cosine_spatial(ring, {0, 0, 0}, {2 * pi});
  CHECK(c.grad({0.25, 0, 0})[0] == doctest::Approx(-2 * pi));
  CHECK_THROWS_AS(make_spatial("star", line, {}), std::invalid_argument);
}

TEST_CASE("residuals of the exact solution decrease under refinement") {
  const RenormFunction bd = make_renorm(RenormKind::bdelta, 0.1);
  const TestFunction phi{bump_spatial(line, {0.2, 0, 0}, 0.5), TimeProfile::smooth_bump(0.0, 1.0)};
  for (Problem prob : {Problem::continuity, Problem::transport}) {
    const Equation eq = prob == Problem::continuity ? Equation::continuity : Equation::transport;
    const Trajectory coarse = oracle(eq, 128, 32), fine = oracle(eq, 256, 64);
    const VelocityField u = make_velocity("sine_zero_trace", line);
    for (Notion n : all_notions()) {
      CAPTURE(to_string(prob));
      CAPTURE(to_string(n));
      const RenormFunction* b = is_renormalized(n) ? &bd : nullptr;
      const double r1 = std::abs(residual(prob, n, coarse, u, b, phi));
      const double r2 = std::abs(residual(prob, n, fine, u, b, phi));
      CHECK(r1 <= 1e-2);
      CHECK(r2 <= 0.6 * r1);
    }
  }
}

TEST_CASE("large truncation level reproduces the plain residual") {
  const Trajectory traj = oracle(Equation::continuity, 128, 16);
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const RenormFunction tk = make_renorm(RenormKind::trunc_k, 1e6);
  const TestFunction phi{cosine_spatial(line, {0, 0, 0}, {pi}), TimeProfile::hat_plus(0.5, 0.125)};
  for (Problem prob : {Problem::continuity, Problem::transport}) {
    const double plain = residual(prob, Notion::time_integrated_weak, traj, u, nullptr, phi, 1.0);
    const double ren = residual(prob, Notion::renormalized_time_integrated_weak, traj, u, &tk, phi, 1.0);
    CHECK(std::abs(plain - ren) <= 1e-12);
  }
}

TEST_CASE("residual preconditions") {
  const Trajectory traj = oracle(Equation::continuity, 64, 4);
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const TestFunction whole{one_spatial(), TimeProfile::smooth_bump(0.0, 1.0)};
  CHECK_THROWS_AS(residual(Problem::continuity, Notion::distributional, traj, u, nullptr, whole),
                  std::invalid_argument);
  CHECK_THROWS_AS(residual(Problem::continuity, Notion::renormalized_weak, traj, u, nullptr, whole),
                  std::invalid_argument);
  const TestFunction flat{bump_spatial(line, {0, 0, 0}, 0.5), TimeProfile::constant_one()};
  CHECK_THROWS_AS(residual(Problem::continuity, Notion::distributional, traj, u, nullptr, flat),
                  std::invalid_argument);
  CHECK_THROWS_AS(residual(Problem::continuity, Notion::time_integrated_weak, traj, u, nullptr, whole, 2.0),
                  std::invalid_argument);
  // the constant profile is admissible once the boundary terms are kept
  CHECK(std::abs(residual(Problem::continuity, Notion::time_integrated_weak, traj, u, nullptr, flat, 1.0)) <= 1e-2);
}

TEST_CASE("hardy quotient") {
  const Exponent two = Exponent::finite(2);
  const HardyResult zero_trace = hardy_quotient(make_velocity("sine_zero_trace", line), *Grid::make(line, {256}), two);
  CHECK_FALSE(zero_trace.divergent);
  CHECK(zero_trace.ratio > 0.0);
  CHECK(std::abs(zero_trace.refined_quotient_norm / zero_trace.quotient_norm - 1.0) <= 0.1);
  const Domain box = Domain::unit_box(1);
  const HardyResult uniform = hardy_quotient(make_velocity("uniform", box, {{"v", {0.5}}}), *Grid::make(box, {256}), two);
  CHECK(uniform.divergent);
  CHECK_THROWS(hardy_quotient(make_velocity("uniform", Domain::unit_box(1, DomainKind::periodic_box), {{"v", {0.5}}}),
                              *Grid::make(Domain::unit_box(1, DomainKind::periodic_box), {16}), two));
}

TEST_CASE("boundary remainder terms decay with the cutoff") {
  const Trajectory traj = oracle(Equation::continuity, 1024, 8);
  const VelocityField u = make_velocity("sine_zero_trace", line);
  const TestFunction phi{one_spatial(), TimeProfile::affine(1.0, 1.0)};
  const auto rows = boundary_term_decay(traj, u, phi, {8, 16, 32, 64});
  REQUIRE(rows.size() == 4);
  CHECK(rows.front().strip_measure == doctest::Approx(2.0 / 16).epsilon(0.02));
  for (int k = 0; k < 4; ++k) {
    CAPTURE(k);
    CHECK(rows.front().terms[k] >= 4.0 * rows.back().terms[k]);
  }
}
