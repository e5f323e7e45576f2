#include <doctest.h>

#include <fstream>
#include <sstream>

#include "vaclab/scenario.hpp"

using namespace vaclab;

namespace {

std::string read_scenario(const std::string& name) {
  std::ifstream in(std::string(VACLAB_SOURCE_DIR) + "/scenarios/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string minimal(const std::string& extra = "", const std::string& velocity = "sine_zero_trace") {
  return R"({"name": "mini",
             "grid": {"domain": "box", "lower": [-1.0], "upper": [1.0], "cells": [64], "t_final": 0.5},
             "velocity": {"id": ")" +
         velocity + R"("},
             "fields": {"rho": {"equation": "continuity", "initial": {"kind": "constant", "value": 1.0}}},
             "solver": {"outputs": 4})" +
         extra + "}";
}

std::string config_error_location(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.location();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config parses") {
  const Scenario s = parse_config(minimal(R"(, "analyses": [{"type": "solver_oracle", "field": "rho"}])"));
  CHECK(s.name == "mini");
  CHECK(s.cells == std::vector<int>{64});
  CHECK(s.fields.size() == 1);
  CHECK(s.analyses.size() == 1);
  CHECK(s.field("rho").scheme == Scheme::upwind_fv);
  CHECK(s.grid()->n(0) == 64);
  const Scenario r = s.refined(2);
  CHECK(r.cells == std::vector<int>{256});
  CHECK(r.solver.outputs == 16);
}

TEST_CASE("config errors carry locations") {
  CHECK(config_error_location(minimal(R"(, "colour": 1)")) == "colour");
  CHECK(config_error_location(R"({"name": "x"})") == "grid");
  CHECK(config_error_location(minimal(R"(, "analyses": [{"type": "solver_oracle", "field": "nope"}])")) ==
        "analyses[0].field");
  CHECK_THROWS_AS(parse_config("{not json"), std::invalid_argument);
  try {
    parse_config(minimal("", "vortex"));
    FAIL("unknown velocity accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("vortex") != std::string::npos);
  }
}

TEST_CASE("hypothesis gate rejects the excluded exponent pair") {
  const std::string text = read_scenario("bad-hypothesis-qpab.json");
  try {
    parse_config(text);
    FAIL("gate did not reject");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("(q,β) ≠ (1,∞)") != std::string::npos);
  }
  const Scenario s = parse_config(text, false);
  const auto verdicts = evaluate_hypotheses(s);
  REQUIRE_FALSE(verdicts.empty());
  CHECK_FALSE(verdicts.front().verdict);
}

TEST_CASE("empty analysis list runs the fields only") {
  const Report r = run_scenario(parse_config(minimal()));
  CHECK(r.passed());
  CHECK(r.criteria.empty());
  CHECK(r.files.count("fields/rho_series.csv") == 1);
  CHECK(r.files.count("summary.json") == 1);
}

TEST_CASE("runs are deterministic") {
  const std::string text = R"({"name": "det",
    "grid": {"domain": "box", "lower": [-1.0], "upper": [1.0], "cells": [64], "t_final": 0.5},
    "velocity": {"id": "sine_zero_trace"},
    "fields": {"rho_fv": {"equation": "continuity", "source": "solver",
                          "initial": {"kind": "cosine", "mean": 1.0, "amplitude": 0.5, "modes": [0.5]}},
               "rho": {"equation": "continuity", "initial": {"kind": "constant", "value": 1.0,
                       "vacuum": [{"box": {"lower": [-0.2], "upper": [0.2]}}]}}},
    "solver": {"outputs": 4},
    "analyses": [{"type": "solver_oracle", "field": "rho_fv"}, {"type": "bdelta_limit", "field": "rho"}]})";
  const Scenario s = parse_config(text);
  RunOptions opts;
  opts.dump_fields = true;
  const Report a = run_scenario(s, opts);
  const Report b = run_scenario(parse_config(text), opts);
  CHECK(a.files.size() > 3);
  CHECK(a.files == b.files);
}

TEST_CASE("bundled sine-vacuum-1d baseline passes and is reproducible") {
  const Scenario s = parse_config(read_scenario("sine-vacuum-1d.json"));
  const Report a = run_scenario(s);
  for (const auto& c : a.criteria) {
    CAPTURE(c.criterion.name);
    CHECK(c.criterion.pass);
  }
  CHECK(a.passed());
  const Report b = run_scenario(s);
  CHECK(a.files == b.files);
}

TEST_CASE("time-shift replay") {
  const Scenario s = parse_config(read_scenario("time-shift-1d.json"));
  // t0 = tau = T: one segment, the base run
  const ReplayReport id = time_shift_replay(s, 1.0, 1.0);
  REQUIRE(id.segments.size() == 1);
  const auto times = s.solver.resolved_output_times();
  const FieldRun rho = generate_field(s, s.field("rho"), times);
  const FieldRun R = generate_field(s, s.field("R"), times);
  const ProductSeries base = conserved_product_deviation(rho.trajectory, R.trajectory, 0.0);
  CHECK(id.stitched_product_deviation == base.max_deviation);
  CHECK(id.max_inclusion_defect == 0.0);

  // two segments covering [0, 2τ]
  const ReplayReport two = time_shift_replay(s, 0.5, 0.5);
  REQUIRE(two.segments.size() == 2);
  double worst = 0.0;
  for (const auto& seg : two.segments) worst = std::max(worst, seg.product_deviation);
  CHECK(two.stitched_product_deviation <= 2.0 * worst);
  CHECK(two.max_inclusion_defect == 0.0);

  CHECK_THROWS_AS(time_shift_replay(s, 0.5, 0.3), std::invalid_argument);
}

TEST_CASE("time-shift replay rejects a time-dependent velocity") {
  std::string text = read_scenario("time-shift-1d.json");
  const std::string key = R"("id": "sine_zero_trace")";
  text.replace(text.find(key), key.size(), key + R"(, "params": {"frequency": 1.0})");
  const Scenario s = parse_config(text, false);
  try {
    time_shift_replay(s, 0.5, 0.5);
    FAIL("time-dependent velocity accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("time-independent") != std::string::npos);
  }
}
