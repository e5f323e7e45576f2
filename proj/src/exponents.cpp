#include "vaclab/exponents.hpp"

#include <cctype>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace vaclab {

namespace {

using wide = __int128;

std::int64_t narrow(wide v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("rational arithmetic overflow");
  }
  return static_cast<std::int64_t>(v);
}

Rational make(wide num, wide den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  wide a = num < 0 ? -num : num;
  wide b = den;
  while (b != 0) {
    wide t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(wide(a.num_) * b.den_ + wide(b.num_) * a.den_, wide(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make(wide(a.num_) * b.den_ - wide(b.num_) * a.den_, wide(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make(wide(a.num_) * b.num_, wide(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("rational division by zero");
  return make(wide(a.num_) * b.den_, wide(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  return wide(a.num_) * b.den_ <=> wide(b.num_) * a.den_;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Exponent Exponent::finite(Rational value) {
  if (value < Rational(1)) {
    throw std::invalid_argument("exponent " + value.str() + " lies outside [1, inf]");
  }
  Exponent e;
  e.infinite_ = false;
  e.value_ = value;
  return e;
}

Exponent Exponent::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text == "inf" || text == "infinity" || text == "Inf" || text == "∞") return infinity();
  if (text.empty()) throw std::invalid_argument("empty exponent");

  auto parse_int = [](std::string_view digits) -> std::int64_t {
    if (digits.empty()) throw std::invalid_argument("malformed exponent");
    std::int64_t v = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw std::invalid_argument("malformed exponent '" + std::string(digits) + "'");
      }
      v = narrow(wide(v) * 10 + (c - '0'));
    }
    return v;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return finite(Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1))));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto whole = text.substr(0, dot);
    const auto frac = text.substr(dot + 1);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale = narrow(wide(scale) * 10);
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    return finite(Rational(narrow(wide(w) * scale + f), scale));
  }
  return finite(Rational(parse_int(text)));
}

const Rational& Exponent::value() const {
  if (infinite_) throw std::logic_error("infinite exponent has no finite value");
  return value_;
}

double Exponent::to_double() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : value_.to_double();
}

bool operator==(const Exponent& a, const Exponent& b) {
  if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
  return a.value_ == b.value_;
}

std::partial_ordering operator<=>(const Exponent& a, const Exponent& b) {
  if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
  if (a.infinite_) return std::partial_ordering::greater;
  if (b.infinite_) return std::partial_ordering::less;
  return a.value_ <=> b.value_;
}

std::string Exponent::str() const { return infinite_ ? "inf" : value_.str(); }

std::ostream& operator<<(std::ostream& os, const Exponent& e) { return os << e.str(); }

void ExponentTuple::validate() const {
  if (d < 1) throw std::invalid_argument("spatial dimension must be positive");
}

Exponent holder_conjugate(const Exponent& q) {
  if (q.is_infinite()) return Exponent::finite(1);
  if (q.value() == Rational(1)) return Exponent::infinity();
  return Exponent::finite(q.value() / (q.value() - Rational(1)));
}

SobolevExponent sobolev_star(const Exponent& q, int d) {
  if (d < 1) throw std::invalid_argument("spatial dimension must be positive");
  const Rational dim(d);
  if (q.is_infinite() || q.value() > dim) return {SobolevExponent::Kind::infinite, Rational(0)};
  if (q.value() == dim) return {SobolevExponent::Kind::any_finite, Rational(0)};
  return {SobolevExponent::Kind::finite, dim * q.value() / (dim - q.value())};
}

SobolevExponent holder_conjugate(const SobolevExponent& s) {
  switch (s.kind) {
    case SobolevExponent::Kind::infinite:
      return {SobolevExponent::Kind::finite, Rational(1)};
    case SobolevExponent::Kind::any_finite:
      // conjugates of all finite exponents: every value in (1, ∞]
      return {SobolevExponent::Kind::any_finite, Rational(0)};
    case SobolevExponent::Kind::finite:
      break;
  }
  if (s.value == Rational(1)) return {SobolevExponent::Kind::infinite, Rational(0)};
  return {SobolevExponent::Kind::finite, s.value / (s.value - Rational(1))};
}

Verdict check_diperna_lions(const ExponentTuple& e) {
  if (!e.q.is_infinite() && e.q.value() == Rational(1) && e.beta.is_infinite()) {
    return Verdict::reject("(q,β)=(1,∞) is excluded: requires (q,β) ≠ (1,∞)");
  }
  if (e.beta.reciprocal() + e.q.reciprocal() > Rational(1)) {
    return Verdict::reject("1/β + 1/q ≤ 1 violated: 1/" + e.beta.str() + " + 1/" + e.q.str() + " > 1");
  }
  if (e.alpha.reciprocal() + e.p.reciprocal() > Rational(1)) {
    return Verdict::reject("1/α + 1/p ≤ 1 violated: 1/" + e.alpha.str() + " + 1/" + e.p.str() +
                           " > 1");
  }
  return Verdict::ok();
}

Verdict check_gamma_condition(const Exponent& gamma, const Exponent& q, int d) {
  if (d < 1) throw std::invalid_argument("spatial dimension must be positive");
  if (!gamma.is_infinite() && gamma.value() <= Rational(1)) {
    throw std::invalid_argument("γ must exceed 1, got " + gamma.str());
  }
  const Rational lhs = gamma.reciprocal() + q.reciprocal();
  const Rational rhs = Rational(1) + Rational(1, d);
  if (lhs > rhs) {
    return Verdict::reject("1/γ + 1/q ≤ 1 + 1/d violated: " + lhs.str() + " > " + rhs.str());
  }
  return Verdict::ok();
}

namespace {

bool is_one(const Exponent& e) { return !e.is_infinite() && e.value() == Rational(1); }

// Sum of reciprocals in which each infinite exponent flagged `substitutable`
// may be replaced by an arbitrary finite one. Returns true iff some choice
// of substitutes keeps the sum ≤ 1.
bool substituted_sum_ok(const Exponent& a, bool sub_a, const Exponent& b, bool sub_b,
                        const Exponent& c) {
  const bool use_a = sub_a && a.is_infinite();
  const bool use_b = sub_b && b.is_infinite();
  const Rational fixed = (use_a ? Rational(0) : a.reciprocal()) +
                         (use_b ? Rational(0) : b.reciprocal()) + c.reciprocal();
  // a finite substitute contributes a positive but arbitrarily small amount
  if (use_a || use_b) return fixed < Rational(1);
  return fixed <= Rational(1);
}

}  // namespace

Verdict check_product_theorem(const ExponentTuple& rho, const ExponentTuple& s, const Exponent& p,
                              const Exponent& q, ProductStatement statement) {
  if (is_one(q) && rho.beta.is_infinite()) {
    return Verdict::reject("(q,β_ρ)=(1,∞) is excluded: requires (q,β_ρ) ≠ (1,∞)");
  }
  if (is_one(q) && s.beta.is_infinite()) {
    return Verdict::reject("(q,β_s)=(1,∞) is excluded: requires (q,β_s) ≠ (1,∞)");
  }
  if (rho.alpha.reciprocal() + s.alpha.reciprocal() + p.reciprocal() > Rational(1)) {
    return Verdict::reject("1/α_ρ + 1/α_s + 1/p ≤ 1 violated");
  }
  const bool q_gt_1 = q > Exponent::finite(1);
  if (!substituted_sum_ok(rho.beta, q_gt_1, s.beta, q_gt_1, q)) {
    return Verdict::reject("1/r_ρ + 1/r_s + 1/q ≤ 1 violated for every admissible r_ρ, r_s");
  }
  if (statement == ProductStatement::space_time) {
    const bool p_gt_1 = p > Exponent::finite(1);
    if (!substituted_sum_ok(rho.alpha, p_gt_1, s.alpha, p_gt_1, p)) {
      return Verdict::reject("1/t_ρ + 1/t_s + 1/p ≤ 1 violated for every admissible t_ρ, t_s");
    }
  } else {
    if (is_one(rho.gamma) || is_one(s.gamma)) {
      return Verdict::reject("γ_ρ, γ_s > 1 violated");
    }
    if (rho.gamma.reciprocal() + s.gamma.reciprocal() >= Rational(1)) {
      return Verdict::reject("1/γ_ρ + 1/γ_s < 1 violated");
    }
  }
  return Verdict::ok();
}

std::string_view to_string(RenormClass c) {
  switch (c) {
    case RenormClass::ren: return "REN";
    case RenormClass::t13: return "T13";
    case RenormClass::t13_plus: return "T13PLUS";
  }
  return "?";
}

namespace {

// growth ≤ γ / conj, where conj is a Hölder conjugate that may be ∞ (bound 0)
bool growth_within(const Rational& growth, const Exponent& gamma, const Exponent& conj) {
  if (growth <= Rational(0)) return true;
  if (gamma.is_infinite()) return !conj.is_infinite();
  if (conj.is_infinite()) return false;
  return growth <= gamma.value() / conj.value();
}

}  // namespace

std::set<RenormClass> classify_renorm_growth(const GrowthMetadata& growth, const ExponentTuple& e) {
  e.validate();
  std::set<RenormClass> out;
  if (growth.derivative_compact) out.insert(RenormClass::ren);

  const Exponent q_conj = holder_conjugate(e.q);
  const bool plus_ok = growth_within(growth.b_growth, e.gamma, q_conj);
  if (plus_ok) out.insert(RenormClass::t13_plus);

  const SobolevExponent star_conj = holder_conjugate(sobolev_star(e.q, e.d));
  bool b_ok = false;
  switch (star_conj.kind) {
    case SobolevExponent::Kind::finite:
      b_ok = growth_within(growth.b_growth, e.gamma, Exponent::finite(star_conj.value));
      break;
    case SobolevExponent::Kind::infinite:
      b_ok = growth.b_growth <= Rational(0);
      break;
    case SobolevExponent::Kind::any_finite:
      // q_*' ranges over (1, ∞]: γ/q_*' covers [0, γ)
      b_ok = growth.b_growth <= Rational(0) || e.gamma.is_infinite() ||
             growth.b_growth < e.gamma.value();
      break;
  }
  const bool defect_ok = growth_within(growth.defect_growth, e.gamma, q_conj);
  if (b_ok && defect_ok) out.insert(RenormClass::t13);
  return out;
}

}  // namespace vaclab
