#include "vaclab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vaclab/mollify.hpp"
#include "vaclab/weak_forms.hpp"

namespace vaclab {

using nlohmann::json;

// ---- JSON access with locations ------------------------------------------

namespace {

class Node {
public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void expect_object() const {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    expect_object();
    for (const auto& [k, _] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        throw ConfigError(sub(k), "unknown key");
      }
    }
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node at(const std::string& key) const {
    if (!has(key)) throw ConfigError(sub(key), "missing required field");
    return Node(j_.at(key), sub(key));
  }

  double number(const std::string& key) const { return at(key).as_number(); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  double as_number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.raw().is_number_integer()) n.fail("expected an integer");
    return n.raw().get<int>();
  }

  std::string string(const std::string& key) const {
    const Node n = at(key);
    if (!n.raw().is_string()) n.fail("expected a string");
    return n.raw().get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.raw().is_boolean()) n.fail("expected true or false");
    return n.raw().get<bool>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const Node n = at(key);
    if (n.raw().is_number()) return {n.as_number()};
    if (!n.raw().is_array()) n.fail("expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.raw().size(); ++i) out.push_back(n.index(i).as_number());
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? numbers(key) : fallback;
  }

  Node index(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::vector<Node> array(const std::string& key) const {
    const Node n = at(key);
    if (!n.raw().is_array()) n.fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < n.raw().size(); ++i) out.push_back(n.index(i));
    return out;
  }

  Exponent exponent(const std::string& key, const Exponent& fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    try {
      if (n.raw().is_string()) return Exponent::parse(n.raw().get<std::string>());
      if (n.raw().is_number_integer()) return Exponent::finite(n.raw().get<std::int64_t>());
      if (n.raw().is_number()) return Exponent::parse(n.raw().dump());
    } catch (const std::exception& e) {
      n.fail(e.what());
    }
    n.fail("expected an exponent (number, fraction string or \"inf\")");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_.empty() ? "<root>" : path_, msg); }

private:
  const json& j_;
  std::string path_;
};

ParamMap param_map(const Node& n) {
  n.expect_object();
  ParamMap m;
  for (const auto& [k, v] : n.raw().items()) m[k] = n.numbers(k);
  return m;
}

}  // namespace

// ---- initial data -----------------------------------------------------------

bool Region::contains(const Point& x, int dim) const {
  if (shape == Shape::ball) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return r2 < radius * radius;
  }
  for (int a = 0; a < dim; ++a) {
    if (!(x[a] > lower[a] && x[a] < upper[a])) return false;
  }
  return true;
}

InitialData InitialSpec::function(const Domain& domain) const {
  const int dim = domain.dim();
  std::vector<double> c = center;
  if (c.empty()) {
    const Point mid = domain.center();
    c.assign(mid.begin(), mid.begin() + dim);
  }
  std::vector<double> k = modes.empty() ? std::vector<double>(dim, 1.0) : modes;
  std::vector<double> len(dim);
  for (int a = 0; a < dim; ++a) len[a] = domain.length(a);
  InitialData base;
  if (kind == "constant") {
    base = [v = value](const Point&) { return v; };
  } else if (kind == "cosine") {
    base = [=, m = mean, amp = amplitude](const Point& x) {
      double p = 1.0;
      for (int a = 0; a < dim; ++a) p *= std::cos(2.0 * std::numbers::pi * k[a] * (x[a] - c[a]) / len[a]);
      return m + amp * p;
    };
  } else if (kind == "gaussian") {
    base = [=, m = mean, amp = amplitude, w = width](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      return m + amp * std::exp(-r2 / (w * w));
    };
  } else {
    throw std::invalid_argument("unknown initial data kind '" + kind + "'");
  }
  if (vacuum.empty()) return base;
  return [base, regions = vacuum, dim](const Point& x) {
    for (const auto& r : regions) {
      if (r.contains(x, dim)) return 0.0;
    }
    return base(x);
  };
}

// ---- scenario ---------------------------------------------------------------

Domain Scenario::domain() const { return Domain(domain_kind, lower, upper); }

GridPtr Scenario::grid() const { return Grid::make(domain(), cells, t_final); }

VelocityField Scenario::velocity() const { return make_velocity(velocity_id, domain(), velocity_params); }

const FieldSpec& Scenario::field(const std::string& name) const {
  for (const auto& f : fields) {
    if (f.name == name) return f;
  }
  throw std::invalid_argument("scenario has no field '" + name + "'");
}

Scenario Scenario::refined(int level) const {
  if (level < 0) throw std::invalid_argument("refinement level must be nonnegative");
  Scenario s = *this;
  const int factor = 1 << level;
  for (auto& n : s.cells) n *= factor;
  if (s.solver.output_times.empty()) {
    s.solver.outputs *= factor;
  } else {
    std::vector<double> t = s.solver.resolved_output_times();
    std::vector<double> fine{t.front()};
    for (std::size_t i = 1; i < t.size(); ++i) {
      for (int j = 1; j <= factor; ++j) fine.push_back(t[i - 1] + (t[i] - t[i - 1]) * j / factor);
    }
    s.solver.output_times = fine;
  }
  return s;
}

namespace {

Region parse_region(const Node& n, int dim) {
  n.allow({"ball", "box"});
  Region r;
  auto vec = [&](const Node& node, const std::string& key) {
    std::vector<double> v = node.numbers(key);
    if (static_cast<int>(v.size()) != dim) node.at(key).fail("needs " + std::to_string(dim) + " entries");
    return v;
  };
  if (n.has("ball")) {
    const Node b = n.at("ball");
    b.allow({"center", "radius"});
    r.shape = Region::Shape::ball;
    r.center = vec(b, "center");
    r.radius = b.number("radius");
    if (!(r.radius > 0.0)) b.at("radius").fail("must be positive");
  } else if (n.has("box")) {
    const Node b = n.at("box");
    b.allow({"lower", "upper"});
    r.shape = Region::Shape::box;
    r.lower = vec(b, "lower");
    r.upper = vec(b, "upper");
  } else {
    n.fail("a region needs 'ball' or 'box'");
  }
  return r;
}

InitialSpec parse_initial(const Node& n, int dim) {
  n.allow({"kind", "value", "mean", "amplitude", "width", "center", "modes", "vacuum"});
  InitialSpec s;
  s.kind = n.string("kind");
  if (s.kind != "constant" && s.kind != "cosine" && s.kind != "gaussian") {
    n.at("kind").fail("unknown initial data kind '" + s.kind + "'");
  }
  s.value = n.number("value", 1.0);
  s.mean = n.number("mean", 1.0);
  s.amplitude = n.number("amplitude", 0.0);
  s.width = n.number("width", 0.1);
  if (!(s.width > 0.0)) n.at("width").fail("must be positive");
  s.center = n.numbers("center", {});
  if (!s.center.empty() && static_cast<int>(s.center.size()) != dim) n.at("center").fail("dimension mismatch");
  s.modes = n.numbers("modes", {});
  if (!s.modes.empty() && static_cast<int>(s.modes.size()) != dim) n.at("modes").fail("dimension mismatch");
  if (n.has("vacuum")) {
    for (const Node& r : n.array("vacuum")) s.vacuum.push_back(parse_region(r, dim));
  }
  return s;
}

Equation parse_equation(const Node& n) {
  const std::string e = n.raw().get<std::string>();
  if (e == "continuity") return Equation::continuity;
  if (e == "transport") return Equation::transport;
  n.fail("equation must be 'continuity' or 'transport'");
}

ExponentTuple parse_tuple(const Node& n, const Exponent& p, const Exponent& q, int d) {
  n.allow({"alpha", "beta", "gamma", "gamma_tilde"});
  ExponentTuple t;
  t.p = p;
  t.q = q;
  t.d = d;
  t.alpha = n.exponent("alpha", Exponent::infinity());
  t.beta = n.exponent("beta", Exponent::infinity());
  t.gamma = n.exponent("gamma", Exponent::infinity());
  t.gamma_tilde = n.exponent("gamma_tilde", Exponent::infinity());
  return t;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> c{"renormalization", "vacuum_continuity",       "vacuum_inclusion",
                                          "time_shift",      "product", "product_time_integrated"};
  return c;
}

struct AnalysisKeys {
  const char* type;
  std::vector<const char*> keys;
};

const std::vector<AnalysisKeys>& analysis_keys() {
  static const std::vector<AnalysisKeys> k{
      {"solver_oracle", {"field", "max_l1_error"}},
      {"residual_matrix", {"field", "problem", "notions", "renormalizers", "test_functions", "tau", "tolerance"}},
      {"commutator_sweep", {"field", "eps_cells", "form", "expect", "min_slope", "stride", "t", "r"}},
      {"vacuum_report",
       {"rho", "R", "threshold", "resolution", "min_exponent", "product_tolerance", "inclusion_tolerance",
        "constant_tolerance", "r_vacuum_min"}},
      {"boundary_terms", {"field", "test_function", "n", "min_factor"}},
      {"hardy", {"q", "expect", "tolerance"}},
      {"bdelta_limit", {"field", "time", "deltas", "threshold"}},
      {"product_residual", {"rho", "s", "test_function", "notion", "tolerance"}},
      {"time_shift", {"t0", "tau", "threshold", "tolerance", "inclusion_tolerance"}},
  };
  return k;
}

void check_analysis_keys(const Node& n, const std::string& type) {
  for (const auto& a : analysis_keys()) {
    if (type != a.type) continue;
    for (const auto& [k, _] : n.raw().items()) {
      if (k == "type") continue;
      if (std::none_of(a.keys.begin(), a.keys.end(), [&](const char* x) { return k == x; })) {
        throw ConfigError(n.sub(k), "unknown key for analysis '" + type + "'");
      }
    }
    return;
  }
  n.at("type").fail("unknown analysis type '" + type + "'");
}

Verdict gamma_verdict(const ExponentTuple& t) {
  if (t.gamma.is_infinite() || t.gamma.value() > Rational(1)) return check_gamma_condition(t.gamma, t.q, t.d);
  return Verdict::reject("requires gamma > 1");
}

}  // namespace

std::vector<HypothesisVerdict> evaluate_hypotheses(const Scenario& s) {
  std::vector<HypothesisVerdict> out;
  if (!s.hypotheses) return out;
  const HypothesisSpec& h = *s.hypotheses;
  const VelocityField u = s.velocity();
  for (const auto& check : h.checks) {
    Verdict v = Verdict::ok();
    if (check == "renormalization") {
      v = check_diperna_lions(h.rho);
    } else if (check == "vacuum_continuity") {
      v = gamma_verdict(h.rho);
    } else if (check == "vacuum_inclusion" || check == "time_shift") {
      v = check_diperna_lions(h.rho);
      if (v) v = gamma_verdict(h.rho);
      if (v && !(h.rho.gamma_tilde.is_infinite() || h.rho.gamma_tilde.value() > Rational(1))) {
        v = Verdict::reject("requires gamma_tilde > 1");
      }
      if (v && s.domain_kind == DomainKind::lipschitz_box && !u.zero_trace()) {
        v = Verdict::reject("requires a velocity with zero trace on the boundary");
      }
      if (v && check == "time_shift") {
        if (!h.p.is_infinite()) v = Verdict::reject("requires p = inf");
        else if (!u.time_independent()) v = Verdict::reject("requires a time-independent velocity");
      }
    } else if (check == "product") {
      v = check_product_theorem(h.rho, h.s, h.p, h.q, ProductStatement::space_time);
    } else if (check == "product_time_integrated") {
      v = check_product_theorem(h.rho, h.s, h.p, h.q, ProductStatement::time_integrated);
    }
    out.push_back({check, v});
  }
  return out;
}

Scenario parse_config(const std::string& text, bool enforce_gate) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<text>", std::string("malformed JSON: ") + e.what());
  }
  const Node n(root, "");
  n.allow({"name", "grid", "velocity", "fields", "solver", "oracle", "hypotheses", "analyses"});
  Scenario s;
  s.name = n.string("name");

  const Node g = n.at("grid");
  g.allow({"domain", "lower", "upper", "cells", "t_final"});
  const std::string dk = g.string("domain", "box");
  if (dk == "box") {
    s.domain_kind = DomainKind::lipschitz_box;
  } else if (dk == "periodic") {
    s.domain_kind = DomainKind::periodic_box;
  } else {
    g.at("domain").fail("domain must be 'box' or 'periodic'");
  }
  s.lower = g.numbers("lower");
  s.upper = g.numbers("upper");
  for (double c : g.numbers("cells")) {
    if (c < 1 || c != std::floor(c)) g.at("cells").fail("cell counts must be positive integers");
    s.cells.push_back(static_cast<int>(c));
  }
  if (s.lower.size() != s.upper.size() || s.lower.size() != s.cells.size()) {
    g.fail("lower, upper and cells need the same length");
  }
  s.t_final = g.number("t_final", 1.0);
  try {
    (void)s.grid();
  } catch (const std::exception& e) {
    g.fail(e.what());
  }
  const int dim = static_cast<int>(s.cells.size());

  const Node v = n.at("velocity");
  v.allow({"id", "params"});
  s.velocity_id = v.string("id");
  if (v.has("params")) s.velocity_params = param_map(v.at("params"));
  const auto& ids = velocity_catalog_ids();
  if (std::find(ids.begin(), ids.end(), s.velocity_id) == ids.end()) {
    v.at("id").fail("unknown velocity id '" + s.velocity_id + "'");
  }
  try {
    (void)s.velocity();
  } catch (const std::exception& e) {
    v.fail(e.what());
  }

  const Node fs = n.at("fields");
  fs.expect_object();
  for (const auto& [name, _] : fs.raw().items()) {
    const Node f = fs.at(name);
    f.allow({"equation", "initial", "source", "scheme"});
    FieldSpec spec;
    spec.name = name;
    spec.equation = parse_equation(f.at("equation"));
    spec.initial = parse_initial(f.at("initial"), dim);
    spec.source = f.string("source", "oracle");
    if (spec.source != "oracle" && spec.source != "solver") f.at("source").fail("source must be 'oracle' or 'solver'");
    const std::string dflt = spec.equation == Equation::continuity ? "upwind_fv" : "semi_lagrangian";
    try {
      spec.scheme = parse_scheme(f.string("scheme", dflt));
    } catch (const std::invalid_argument& e) {
      f.at("scheme").fail(e.what());
    }
    if ((spec.scheme == Scheme::upwind_fv) != (spec.equation == Equation::continuity)) {
      f.at("scheme").fail("upwind_fv solves continuity and semi_lagrangian solves transport");
    }
    s.fields.push_back(std::move(spec));
  }

  s.solver.t_final = s.t_final;
  if (n.has("solver")) {
    const Node sv = n.at("solver");
    sv.allow({"cfl", "outputs", "output_times"});
    s.solver.cfl = sv.number("cfl", s.solver.cfl);
    s.solver.outputs = sv.integer("outputs", s.solver.outputs);
    s.solver.output_times = sv.numbers("output_times", {});
    try {
      s.solver.validate();
    } catch (const std::exception& e) {
      sv.fail(e.what());
    }
  }
  if (n.has("oracle")) {
    const Node o = n.at("oracle");
    o.allow({"steps_per_unit"});
    s.oracle_steps_per_unit = o.integer("steps_per_unit", s.oracle_steps_per_unit);
    if (s.oracle_steps_per_unit < 1) o.at("steps_per_unit").fail("must be positive");
  }

  if (n.has("hypotheses")) {
    const Node h = n.at("hypotheses");
    h.allow({"p", "q", "rho", "s", "checks"});
    HypothesisSpec hs;
    hs.p = h.exponent("p", Exponent::infinity());
    hs.q = h.exponent("q", Exponent::infinity());
    const json empty = json::object();
    hs.rho = parse_tuple(h.has("rho") ? h.at("rho") : Node(empty, h.sub("rho")), hs.p, hs.q, dim);
    hs.s = parse_tuple(h.has("s") ? h.at("s") : Node(empty, h.sub("s")), hs.p, hs.q, dim);
    for (const Node& c : h.array("checks")) {
      if (!c.raw().is_string()) c.fail("expected a string");
      const std::string name = c.raw().get<std::string>();
      const auto& k = known_checks();
      if (std::find(k.begin(), k.end(), name) == k.end()) c.fail("unknown theorem check '" + name + "'");
      hs.checks.push_back(name);
    }
    s.hypotheses = hs;
    if (enforce_gate) {
      const auto verdicts = evaluate_hypotheses(s);
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (!verdicts[i].verdict) {
          throw ConfigError(h.sub("checks") + "[" + std::to_string(i) + "]",
                            "hypotheses of '" + verdicts[i].check + "' violated: " + verdicts[i].verdict.reason);
        }
      }
    }
  }

  if (n.has("analyses")) {
    for (const Node& a : n.array("analyses")) {
      a.expect_object();
      const std::string type = a.string("type");
      check_analysis_keys(a, type);
      for (const char* key : {"field", "rho", "R", "s"}) {
        if (a.has(key)) {
          const std::string ref = a.string(key);
          if (std::none_of(s.fields.begin(), s.fields.end(), [&](const FieldSpec& f) { return f.name == ref; })) {
            a.at(key).fail("unknown field '" + ref + "'");
          }
        }
      }
      s.analyses.push_back({type, a.raw(), a.path()});
    }
  }
  return s;
}

// ---- running ------------------------------------------------------------------

bool Report::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const ScenarioCriterion& c) { return c.criterion.pass; });
}

json Report::summary() const {
  json j;
  j["scenario"] = scenario;
  j["criteria"] = json::array();
  for (const auto& c : criteria) j["criteria"].push_back(to_json(c.criterion));
  return j;
}

FieldRun generate_field(const Scenario& s, const FieldSpec& f, const std::vector<double>& times) {
  const GridPtr grid = s.grid();
  const VelocityField u = s.velocity();
  const InitialData init = f.initial.function(grid->domain());
  const ScalarField sampled = ScalarField::sample(grid, init);
  const bool nonneg = sampled.min() >= 0.0;
  FieldRun out;
  if (f.source == "oracle") {
    const Equation eq = f.equation;
    OracleTrajectory o = oracle_trajectory(eq, init, u, grid, times, s.oracle_steps_per_unit, nonneg);
    out.valid = intersect_masks(o.valid, grid->cell_count());
    out.trajectory = std::move(o.trajectory);
    out.trajectory.meta().velocity_id = u.id();
    return out;
  }
  SolverConfig cfg = s.solver;
  cfg.scheme = f.scheme;
  cfg.t_final = times.back();
  cfg.output_times = times;
  SolveResult r = solve(ScalarField(grid, std::vector<double>(sampled.values().begin(), sampled.values().end()), 0.0, nonneg),
                        u, cfg);
  out.trajectory = std::move(r.trajectory);
  out.completed = r.completed;
  out.diagnostic = r.diagnostic;
  out.valid.assign(grid->cell_count(), 1);
  return out;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

TimeProfile parse_profile(const Node& n, double T) {
  n.allow({"kind", "a", "b", "tau", "h"});
  const std::string k = n.string("kind", "one");
  try {
    if (k == "one") return TimeProfile::constant_one();
    if (k == "bump") return TimeProfile::smooth_bump(n.number("a", 0.0), n.number("b", T));
    if (k == "hat_plus") return TimeProfile::hat_plus(n.number("tau"), n.number("h"));
    if (k == "hat_minus") return TimeProfile::hat_minus(n.number("tau"), n.number("h"));
    if (k == "affine") return TimeProfile::affine(n.number("a", 1.0), n.number("b", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    n.fail(e.what());
  }
  n.at("kind").fail("unknown time profile '" + k + "'");
}

TestFunction parse_test_function(const Node& n, const Domain& dom, double T) {
  n.allow({"spatial", "params", "time"});
  TestFunction phi;
  try {
    phi.eta = make_spatial(n.string("spatial", "one"), dom, n.has("params") ? param_map(n.at("params")) : ParamMap{});
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    n.fail(e.what());
  }
  const json empty = json::object();
  phi.psi = parse_profile(n.has("time") ? n.at("time") : Node(empty, n.sub("time")), T);
  return phi;
}

class Runner {
public:
  Runner(const Scenario& s, const RunOptions& opts)
      : s_(s), opts_(opts), grid_(s.grid()), u_(s.velocity()), times_(s.solver.resolved_output_times()) {}

  Report run() {
    report_.scenario = s_.name;
    for (const auto& f : s_.fields) field(f.name);
    for (std::size_t i = 0; i < s_.analyses.size(); ++i) {
      const AnalysisSpec& a = s_.analyses[i];
      const Node n(a.params, a.location);
      const std::string tag = a.type + "_" + std::to_string(i);
      if (a.type == "solver_oracle") solver_oracle(n);
      else if (a.type == "residual_matrix") residual_matrix(n, tag);
      else if (a.type == "commutator_sweep") commutator_sweep(n, tag);
      else if (a.type == "vacuum_report") vacuum_report(n, tag);
      else if (a.type == "boundary_terms") boundary_terms(n, tag);
      else if (a.type == "hardy") hardy(n, tag);
      else if (a.type == "bdelta_limit") bdelta(n, tag);
      else if (a.type == "product_residual") product(n);
      else if (a.type == "time_shift") time_shift(n, tag);
    }
    report_.files["summary.json"] = report_.summary().dump(2) + "\n";
    return std::move(report_);
  }

private:
  const FieldRun& field(const std::string& name) {
    auto it = runs_.find(name);
    if (it != runs_.end()) return it->second;
    const FieldSpec& spec = s_.field(name);
    FieldRun r = generate_field(s_, spec, times_);
    if (!r.completed) {
      report_.diagnostics.push_back("field " + name + ": " + r.diagnostic);
      add("field." + name + ".completed", 0.0, 1.0, false);
    }
    std::ostringstream os;
    os.precision(17);
    os << "t,integral,min,max\n";
    for (const auto& snap : r.trajectory) {
      os << snap.time << ',' << integrate(snap.field) << ',' << snap.field.min() << ',' << snap.field.max() << '\n';
    }
    report_.files["fields/" + name + "_series.csv"] = os.str();
    if (opts_.dump_fields) {
      for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        std::ostringstream bin;
        write_binary(r.trajectory[k].field, bin);
        report_.files["fields/" + name + "_" + std::to_string(k) + ".bin"] = bin.str();
      }
    }
    return runs_.emplace(name, std::move(r)).first->second;
  }

  void add(const std::string& name, double value, double tol, bool pass, bool refines = false) {
    report_.criteria.push_back({{name, value, tol, pass}, refines});
  }

  void solver_oracle(const Node& n) {
    const std::string name = n.string("field", "rho");
    const FieldSpec& spec = s_.field(name);
    if (spec.source != "solver") n.fail("solver_oracle needs a field with source 'solver'");
    const FieldRun& run = field(name);
    FieldSpec oracle_spec = spec;
    oracle_spec.source = "oracle";
    const FieldRun ref = generate_field(s_, oracle_spec, run.trajectory.times());
    const std::string base = "solver_oracle." + name;
    const ScalarField diff = run.trajectory.back().field - ref.trajectory[run.trajectory.size() - 1].field;
    const double err = lp_norm(diff, Exponent::finite(1), ref.valid);
    const double tol = n.number("max_l1_error", 0.1);
    add(base + ".l1_error", err, tol, err <= tol, true);
    const auto& traj = run.trajectory;
    if (spec.equation == Equation::continuity) {
      if (grid_->domain().periodic() || u_.zero_trace()) {
        const double m0 = integrate(traj.front().field);
        double drift = 0.0;
        for (const auto& snap : traj) drift = std::max(drift, std::abs(integrate(snap.field) - m0));
        if (m0 != 0.0) drift /= std::abs(m0);
        add(base + ".mass_drift", drift, 1e-12, drift <= 1e-12);
      }
      double negatives = 0;
      for (const auto& snap : traj) {
        for (double v : snap.field.values()) negatives += v < 0.0 ? 1 : 0;
      }
      add(base + ".positivity_violations", negatives, 0.0, negatives == 0);
    } else {
      const double lo = traj.front().field.min(), hi = traj.front().field.max();
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
      double out = 0;
      for (const auto& snap : traj) {
        for (double v : snap.field.values()) out += (v < lo - slack || v > hi + slack) ? 1 : 0;
      }
      add(base + ".max_principle_violations", out, 0.0, out == 0);
    }
  }

  void residual_matrix(const Node& n, const std::string& tag) {
    const std::string name = n.string("field", "rho");
    const FieldSpec& spec = s_.field(name);
    const Trajectory& traj = field(name).trajectory;
    Problem problem = spec.equation == Equation::continuity ? Problem::continuity : Problem::transport;
    if (n.has("problem")) {
      const std::string p = n.string("problem");
      if (p == "continuity") problem = Problem::continuity;
      else if (p == "transport") problem = Problem::transport;
      else n.at("problem").fail("problem must be 'continuity' or 'transport'");
    }
    std::vector<Notion> notions = all_notions();
    if (n.has("notions")) {
      notions.clear();
      for (const Node& x : n.array("notions")) {
        try {
          notions.push_back(parse_notion(x.raw().get<std::string>()));
        } catch (const std::exception& e) {
          x.fail(e.what());
        }
      }
    }
    std::vector<RenormFunction> bs;
    if (n.has("renormalizers")) {
      for (const Node& x : n.array("renormalizers")) {
        x.allow({"kind", "param"});
        try {
          bs.push_back(make_renorm(parse_renorm_kind(x.string("kind")), x.number("param")));
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          x.fail(e.what());
        }
      }
    } else {
      bs.push_back(make_renorm(RenormKind::trunc_k, 1e6));
      bs.push_back(make_renorm(RenormKind::bdelta, 0.1));
    }
    const Domain dom = grid_->domain();
    const double T = times_.back();
    std::vector<TestFunction> phis;
    if (n.has("test_functions")) {
      for (const Node& x : n.array("test_functions")) phis.push_back(parse_test_function(x, dom, T));
    } else {
      phis.push_back({make_spatial("bump", dom, {}), TimeProfile::smooth_bump(0.0, T)});
      phis.push_back({make_spatial("cosine", dom, {}), TimeProfile::constant_one()});
    }
    const std::vector<double> taus = n.numbers("tau", {T});
    double maxabs = 0.0;
    double identity_gap = 0.0;
    bool identity_checked = false;
    double field_max = 0.0;
    for (const auto& snap : traj) field_max = std::max({field_max, std::abs(snap.field.max()), std::abs(snap.field.min())});
    std::vector<ResidualRow> rows;
    for (Notion no : notions) {
      for (const TestFunction& phi : phis) {
        for (double tau : taus) {
          const std::size_t count = is_renormalized(no) ? bs.size() : 1;
          for (std::size_t bi = 0; bi < count; ++bi) {
            const RenormFunction* b = is_renormalized(no) ? &bs[bi] : nullptr;
            double val;
            try {
              val = residual(problem, no, traj, u_, b, phi, tau);
            } catch (const std::invalid_argument&) {
              continue;  // notion and test function are incompatible
            }
            rows.push_back({no, b ? b->id() : "-", phi.id(), tau, val});
            maxabs = std::max(maxabs, std::abs(val));
            if (b && b->kind == RenormKind::trunc_k && b->param > field_max) {
              const Notion plain = static_cast<Notion>(static_cast<int>(no) - 4);
              const double ref = residual(problem, plain, traj, u_, nullptr, phi, tau);
              identity_gap = std::max(identity_gap, std::abs(val - ref));
              identity_checked = true;
            }
          }
        }
      }
    }
    std::ostringstream os;
    write_residual_csv(rows, os);
    report_.files[tag + ".csv"] = os.str();
    const double tol = n.number("tolerance", 1e-2);
    add("residual_matrix." + name + ".max_abs", maxabs, tol, !rows.empty() && maxabs <= tol, true);
    if (identity_checked) add("residual_matrix." + name + ".tk_identity", identity_gap, 1e-12, identity_gap <= 1e-12);
  }

  void commutator_sweep(const Node& n, const std::string& tag) {
    const std::string name = n.string("field", "rho");
    const Trajectory& traj = field(name).trajectory;
    const std::vector<double> cells = n.numbers("eps_cells", {32, 16, 8, 4});
    std::vector<double> eps;
    for (double c : cells) eps.push_back(c * grid_->max_h());
    const std::string form_name = n.string("form", "friedrichs");
    CommutatorForm form;
    if (form_name == "friedrichs") form = CommutatorForm::friedrichs;
    else if (form_name == "flux") form = CommutatorForm::flux;
    else n.at("form").fail("form must be 'friedrichs' or 'flux'");
    const int stride = n.integer("stride", 8);
    DecayStudy d;
    try {
      d = decay_study(traj, u_, eps, n.exponent("t", Exponent::finite(1)), n.exponent("r", Exponent::finite(1)),
                      static_cast<std::size_t>(std::max(1, stride)), form);
    } catch (const std::invalid_argument& e) {
      n.fail(e.what());
    }
    std::ostringstream os;
    d.write_csv(os);
    report_.files[tag + ".csv"] = os.str();
    const std::string expect = n.string("expect", "rate");
    if (expect == "rate") {
      const double min_slope = n.number("min_slope", 0.8);
      add("commutator_sweep." + name + ".slope", d.slope, min_slope, d.slope >= min_slope);
    } else if (expect == "monotone") {
      add("commutator_sweep." + name + ".strictly_decreasing", d.strictly_decreasing ? 1.0 : 0.0, 1.0,
          d.strictly_decreasing);
    } else if (expect == "vanish") {
      double mx = 0.0;
      for (const auto& r : d.rows) mx = std::max(mx, r.norm);
      add("commutator_sweep." + name + ".max_norm", mx, 1e-10, mx <= 1e-10);
    } else {
      n.at("expect").fail("expect must be 'rate', 'monotone' or 'vanish'");
    }
  }

  void vacuum_report(const Node& n, const std::string& tag) {
    const std::string rho_name = n.string("rho", "rho");
    const Trajectory& rho = field(rho_name).trajectory;
    const Trajectory* R = n.has("R") ? &field(n.string("R")).trajectory : nullptr;
    const double thr = n.number("threshold", 0.0);
    VacuumReport vr = make_vacuum_report(rho, R, thr, n.number("resolution", 0.0));
    if (n.has("min_exponent")) {
      const double min_exp = n.number("min_exponent");
      const double e = vr.measure.fitted_exponent;
      vr.criteria.push_back({"vacuum.modulus_exponent", e, min_exp, !std::isnan(e) && e >= min_exp});
    }
    if (n.has("constant_tolerance")) {
      const double tol = n.number("constant_tolerance");
      double var = 0.0;
      for (double m : vr.measure.measures) var = std::max(var, std::abs(m - vr.measure.measures.front()));
      vr.criteria.push_back({"vacuum.measure_variation", var, tol, var <= tol});
    }
    if (R && n.has("product_tolerance")) {
      const double tol = n.number("product_tolerance");
      vr.criteria.push_back({"vacuum.product_deviation", vr.product->max_deviation, tol, vr.product->max_deviation <= tol});
    }
    if (R && n.has("inclusion_tolerance")) {
      const double tol = n.number("inclusion_tolerance");
      const double mx = *std::max_element(vr.inclusion_defects.begin(), vr.inclusion_defects.end());
      vr.criteria.push_back({"vacuum.inclusion_defect", mx, tol, mx <= tol});
    }
    if (R && n.has("r_vacuum_min")) {
      const double lo = n.number("r_vacuum_min");
      const double m = vacuum_measure(R->back().field, thr);
      vr.criteria.push_back({"vacuum.R_vacuum_measure", m, lo, m >= lo});
    }
    for (const auto& c : vr.criteria) add(c.name, c.value, c.tolerance, c.pass, c.name == "vacuum.product_deviation");
    report_.files[tag + ".json"] = vr.to_json().dump(2) + "\n";
    std::ostringstream os;
    vr.write_series_csv(os);
    report_.files[tag + ".csv"] = os.str();
  }

  void boundary_terms(const Node& n, const std::string& tag) {
    const std::string name = n.string("field", "rho");
    const Trajectory& traj = field(name).trajectory;
    if (grid_->domain().periodic()) n.fail("boundary_terms needs a bounded box");
    const json dflt = {{"spatial", "one"}, {"time", {{"kind", "affine"}, {"a", 1.0}, {"b", 1.0}}}};
    const TestFunction phi = parse_test_function(n.has("test_function") ? n.at("test_function") : Node(dflt, n.sub("test_function")),
                                                 grid_->domain(), times_.back());
    std::vector<int> ns;
    for (double v : n.numbers("n", {8, 16, 32, 64})) ns.push_back(static_cast<int>(v));
    if (ns.size() < 2) n.at("n").fail("needs at least two entries");
    const auto rows = boundary_term_decay(traj, u_, phi, ns);
    std::ostringstream os;
    os.precision(17);
    os << "n,strip_measure,term1,term2,term3,term4\n";
    for (const auto& r : rows) {
      os << r.n << ',' << r.strip_measure;
      for (double t : r.terms) os << ',' << t;
      os << '\n';
    }
    report_.files[tag + ".csv"] = os.str();
    const double min_factor = n.number("min_factor", 4.0);
    for (int k = 0; k < 4; ++k) {
      const double first = rows.front().terms[k], last = rows.back().terms[k];
      const double factor = last > 0.0 ? first / last : std::numeric_limits<double>::infinity();
      const bool pass = first > 0.0 && factor >= min_factor;
      add("boundary_terms." + name + ".term" + std::to_string(k + 1) + "_factor", factor, min_factor, pass);
    }
  }

  void hardy(const Node& n, const std::string& tag) {
    if (grid_->domain().periodic()) n.fail("hardy needs a bounded box");
    const Exponent q = n.exponent("q", Exponent::finite(2));
    const HardyResult a = hardy_quotient(u_, *grid_, q);
    const HardyResult b = hardy_quotient(u_, *grid_->refined(2), q);
    json j = {{"q", q.str()},
              {"quotient_norm", a.quotient_norm},
              {"gradient_norm", a.gradient_norm},
              {"ratio", a.ratio},
              {"refined_ratio", b.ratio},
              {"divergent", a.divergent}};
    report_.files[tag + ".json"] = j.dump(2) + "\n";
    const std::string expect = n.string("expect", "stable");
    if (expect == "stable") {
      const double tol = n.number("tolerance", 0.1);
      const double change = a.ratio > 0.0 ? std::abs(b.ratio / a.ratio - 1.0) : (b.ratio == 0.0 ? 0.0 : 1.0);
      add("hardy.ratio_change", change, tol, change <= tol && !a.divergent);
    } else if (expect == "divergent") {
      add("hardy.divergent", a.divergent ? 1.0 : 0.0, 1.0, a.divergent);
    } else {
      n.at("expect").fail("expect must be 'stable' or 'divergent'");
    }
  }

  void bdelta(const Node& n, const std::string& tag) {
    const std::string name = n.string("field", "rho");
    const Trajectory& traj = field(name).trajectory;
    const double t = n.number("time", 0.0);
    std::size_t k;
    try {
      k = traj.index_of(t);
    } catch (const std::exception& e) {
      n.at("time").fail(e.what());
    }
    BdeltaTable tab;
    try {
      tab = bdelta_limit_error(traj[k].field, n.numbers("deltas", {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}),
                               n.number("threshold", 0.0));
    } catch (const std::invalid_argument& e) {
      n.fail(e.what());
    }
    std::ostringstream os;
    os.precision(17);
    os << "delta,gap,bound\n";
    for (const auto& r : tab.rows) os << r.delta << ',' << r.gap << ',' << (r.bound ? num(*r.bound) : "") << '\n';
    report_.files[tag + ".csv"] = os.str();
    add("bdelta_limit." + name + ".monotone", tab.monotone ? 1.0 : 0.0, 1.0, tab.monotone);
    add("bdelta_limit." + name + ".within_bound", tab.within_bound ? 1.0 : 0.0, 1.0, tab.within_bound);
  }

  void product(const Node& n) {
    const std::string rn = n.string("rho", "rho"), sn = n.string("s", "s");
    const json dflt = {{"spatial", "cosine"}};
    const TestFunction phi = parse_test_function(n.has("test_function") ? n.at("test_function") : Node(dflt, n.sub("test_function")),
                                                 grid_->domain(), times_.back());
    Notion notion = Notion::time_integrated_weak;
    if (n.has("notion")) {
      try {
        notion = parse_notion(n.string("notion"));
      } catch (const std::invalid_argument& e) {
        n.at("notion").fail(e.what());
      }
    }
    double v;
    try {
      v = product_residual(field(rn).trajectory, field(sn).trajectory, u_, phi, notion);
    } catch (const std::invalid_argument& e) {
      n.fail(e.what());
    }
    const double tol = n.number("tolerance", 1e-2);
    add("product_residual." + rn + "*" + sn, std::abs(v), tol, std::abs(v) <= tol, true);
  }

  void time_shift(const Node& n, const std::string& tag) {
    ReplayReport r;
    try {
      r = time_shift_replay(s_, n.number("t0"), n.number("tau"), n.number("threshold", 0.0));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      n.fail(e.what());
    }
    report_.files[tag + ".json"] = r.to_json().dump(2) + "\n";
    const double tol = n.number("tolerance", 1e-2);
    add("time_shift.stitched_product_deviation", r.stitched_product_deviation, tol, r.stitched_product_deviation <= tol);
    const double itol = n.number("inclusion_tolerance", 0.0);
    add("time_shift.inclusion_defect", r.max_inclusion_defect, itol, r.max_inclusion_defect <= itol);
  }

  const Scenario& s_;
  RunOptions opts_;
  GridPtr grid_;
  VelocityField u_;
  std::vector<double> times_;
  std::map<std::string, FieldRun> runs_;
  Report report_;
};

}  // namespace

Report run_scenario(const Scenario& s, const RunOptions& opts) { return Runner(s, opts).run(); }

// ---- time-shift replay -----------------------------------------------------------

json ReplayReport::to_json() const {
  json j;
  j["segments"] = json::array();
  for (const auto& s : segments) {
    j["segments"].push_back({{"start", s.start},
                             {"end", s.end},
                             {"product_deviation", s.product_deviation},
                             {"max_inclusion_defect", s.max_inclusion_defect},
                             {"R_vacuum_measure_max", s.r_vacuum_measure_max}});
  }
  j["stitched_product_deviation"] = stitched_product_deviation;
  j["max_inclusion_defect"] = max_inclusion_defect;
  return j;
}

ReplayReport time_shift_replay(const Scenario& s, double t0, double tau, double threshold) {
  const VelocityField u = s.velocity();
  if (!u.time_independent()) {
    throw std::invalid_argument("time-shift replay requires a time-independent velocity");
  }
  const double T = s.t_final;
  if (!(tau > 0.0) || tau > T * (1.0 + 1e-12)) throw std::invalid_argument("time-shift replay needs 0 < tau <= t_final");
  if (t0 < 0.0 || t0 > T * (1.0 + 1e-12)) throw std::invalid_argument("time-shift replay needs t0 in [0, t_final]");
  const std::vector<double> times = s.solver.resolved_output_times();
  const double dt = times[1] - times[0];
  auto steps = [&](double x, const char* what) {
    const double r = x / dt;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, std::abs(r))) {
      throw std::invalid_argument(std::string(what) + " must be a multiple of the output spacing");
    }
    return static_cast<long>(std::llround(r));
  };
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-9 * dt) {
      throw std::invalid_argument("time-shift replay needs uniformly spaced outputs");
    }
  }
  const long ntau = steps(tau, "tau");
  const long shift0 = steps(t0 - tau, "t0 - tau");
  const long nT = static_cast<long>(times.size()) - 1;

  const FieldRun rho = generate_field(s, s.field("rho"), times);
  std::vector<double> rtimes;
  for (long k = 0; k <= ntau; ++k) rtimes.push_back(times[static_cast<std::size_t>(k)]);
  const FieldRun R = generate_field(s, s.field("R"), rtimes);

  ReplayReport rep;
  // the segment index range whose windows [a_k, a_k + tau] meet [0, T]
  long kmin = 0;
  while (shift0 + kmin * ntau > 0) --kmin;
  while (shift0 + (kmin + 1) * ntau <= 0) ++kmin;
  for (long k = kmin; shift0 + k * ntau < nT; ++k) {
    const long a = shift0 + k * ntau;
    const long lo = std::max(0L, a), hi = std::min(nT, a + ntau);
    if (hi <= lo) continue;
    Trajectory rseg, rhoseg;
    for (long i = lo; i <= hi; ++i) {
      const double t = times[static_cast<std::size_t>(i - lo)];
      rhoseg.append(rho.trajectory[static_cast<std::size_t>(i)].field.with_time(t));
      rseg.append(R.trajectory[static_cast<std::size_t>(i - a)].field.with_time(t));
    }
    const ProductSeries ps = conserved_product_deviation(rhoseg, rseg, threshold);
    const std::vector<double> inc = inclusion_defect(rhoseg, rseg, threshold);
    double rvac = 0.0;
    for (const auto& snap : rseg) rvac = std::max(rvac, vacuum_measure(snap.field, threshold));
    ReplaySegment seg{times[static_cast<std::size_t>(lo)], times[static_cast<std::size_t>(hi)], ps.max_deviation,
                      *std::max_element(inc.begin(), inc.end()), rvac};
    rep.stitched_product_deviation += seg.product_deviation;
    rep.max_inclusion_defect = std::max(rep.max_inclusion_defect, seg.max_inclusion_defect);
    rep.segments.push_back(seg);
  }
  return rep;
}

// ---- convergence ----------------------------------------------------------------

bool ConvergeReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConvergeRow& r) { return r.first_order; });
}

json ConvergeReport::to_json() const {
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"name", r.name}, {"values", r.values}, {"ratios", r.ratios}, {"first_order", r.first_order}});
  }
  return j;
}

std::string ConvergeReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "name,level,value,ratio\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      os << r.name << ',' << k << ',' << r.values[k] << ',' << (k > 0 ? num(r.ratios[k - 1]) : "") << '\n';
    }
  }
  return os.str();
}

ConvergeReport converge(const Scenario& s, int levels) {
  if (levels < 2) throw std::invalid_argument("converge needs at least two levels");
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  for (int l = 0; l < levels; ++l) {
    const Report r = run_scenario(s.refined(l));
    for (const auto& c : r.criteria) {
      if (!c.refines) continue;
      if (!values.count(c.criterion.name)) order.push_back(c.criterion.name);
      values[c.criterion.name].push_back(c.criterion.value);
    }
  }
  ConvergeReport rep;
  for (const auto& name : order) {
    ConvergeRow row{name, values[name], {}, true};
    for (std::size_t k = 1; k < row.values.size(); ++k) {
      const double prev = std::abs(row.values[k - 1]);
      row.ratios.push_back(prev > 0.0 ? std::abs(row.values[k]) / prev : 0.0);
      if (std::abs(row.values[k]) > 1.3 * std::abs(row.values[0]) * std::ldexp(1.0, -static_cast<int>(k))) {
        row.first_order = false;
      }
    }
    if (row.values.size() != static_cast<std::size_t>(levels)) row.first_order = false;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace vaclab
