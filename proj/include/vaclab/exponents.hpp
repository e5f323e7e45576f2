#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>

namespace vaclab {

/// Exact rational number with 64-bit numerator/denominator, always reduced
/// and with a positive denominator. Comparisons are exact.
class Rational {
public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  std::string str() const;

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A Lebesgue/Sobolev exponent in [1, ∞]. Infinity is a distinct state,
/// not a floating sentinel, so 1/∞ is exactly zero.
class Exponent {
public:
  static Exponent infinity() { return Exponent(); }
  static Exponent finite(Rational value);
  static Exponent finite(std::int64_t num, std::int64_t den = 1) { return finite(Rational(num, den)); }
  /// Accepts "inf", "∞", integers, fractions "6/5" and decimals "1.25".
  static Exponent parse(std::string_view text);

  bool is_infinite() const { return infinite_; }
  const Rational& value() const;  // throws for infinity
  Rational reciprocal() const { return infinite_ ? Rational(0) : Rational(1) / value_; }
  double to_double() const;

  friend bool operator==(const Exponent& a, const Exponent& b);
  friend std::partial_ordering operator<=>(const Exponent& a, const Exponent& b);

  std::string str() const;

private:
  Exponent() = default;
  bool infinite_ = true;
  Rational value_{1};
};

std::ostream& operator<<(std::ostream& os, const Exponent& e);

/// Result of a Sobolev-exponent computation. The critical case q = d yields
/// `any_finite`: every finite exponent is admissible but none is singled out.
struct SobolevExponent {
  enum class Kind { finite, infinite, any_finite };
  Kind kind = Kind::infinite;
  Rational value{0};  // meaningful only for Kind::finite

  bool operator==(const SobolevExponent&) const = default;
};

/// Exponents of the velocity (p in time, q in space), of the transported
/// quantity (alpha, beta), weak-continuity exponents gamma (of rho) and
/// gamma_tilde (of R), and the spatial dimension d.
struct ExponentTuple {
  Exponent p = Exponent::infinity();
  Exponent q = Exponent::infinity();
  Exponent alpha = Exponent::infinity();
  Exponent beta = Exponent::infinity();
  Exponent gamma = Exponent::infinity();
  Exponent gamma_tilde = Exponent::infinity();
  int d = 2;

  /// Throws std::invalid_argument when d < 1.
  void validate() const;
};

struct Verdict {
  bool admissible = true;
  std::string reason;  // first violated condition, empty when admissible

  explicit operator bool() const { return admissible; }
  static Verdict ok() { return {}; }
  static Verdict reject(std::string why) { return {false, std::move(why)}; }
};

Exponent holder_conjugate(const Exponent& q);
SobolevExponent sobolev_star(const Exponent& q, int d);

/// Hölder conjugate of a Sobolev exponent, mirrored onto the same tri-state.
SobolevExponent holder_conjugate(const SobolevExponent& s);

/// (q,β) ≠ (1,∞), 1/β + 1/q ≤ 1, 1/α + 1/p ≤ 1.
Verdict check_diperna_lions(const ExponentTuple& e);

/// 1/γ + 1/q ≤ 1 + 1/d. Throws std::invalid_argument for γ ≤ 1.
Verdict check_gamma_condition(const Exponent& gamma, const Exponent& q, int d);

/// Which statement of the product theorem is being checked: the space-time
/// one adds the time-exponent condition, the time-integrated one the
/// 1/γ_ρ + 1/γ_s < 1 condition.
enum class ProductStatement { space_time, time_integrated };

/// Exponent hypotheses under which ρ·s solves the continuity equation when
/// ρ solves it and s solves the pure transport equation with the same u.
/// Infinite β (resp. α) may be replaced by any finite exponent when q > 1
/// (resp. p > 1); the check decides whether such a substitute exists.
Verdict check_product_theorem(const ExponentTuple& rho, const ExponentTuple& s, const Exponent& p,
                              const Exponent& q,
                              ProductStatement statement = ProductStatement::space_time);

enum class RenormClass { ren, t13, t13_plus };

std::string_view to_string(RenormClass c);

/// Declared growth of a renormalizer: b(z) ≲ 1 + z^b_growth and
/// z b'(z) − b(z) ≲ 1 + z^defect_growth (upper bounds; 0 means bounded above).
struct GrowthMetadata {
  bool derivative_compact = false;
  Rational b_growth{0};
  Rational defect_growth{0};
};

/// Classes whose growth bounds the declared metadata satisfies for the
/// exponents in `e` (uses e.gamma and e.q, e.d). Constants are never checked.
std::set<RenormClass> classify_renorm_growth(const GrowthMetadata& growth, const ExponentTuple& e);

}  // namespace vaclab
