#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "hsdp/rational.hpp"

namespace hsdp {

enum class VarKind { kBoolean, kContinuous, kPrimedBoolean, kPrimedContinuous, kActionParam };

bool is_boolean_kind(VarKind k);
bool is_primed_kind(VarKind k);

struct VarId {
  std::uint32_t index = 0;
  friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
  friend bool operator!=(VarId a, VarId b) { return a.index != b.index; }
  friend bool operator<(VarId a, VarId b) { return a.index < b.index; }
};

struct Interval {
  Rational lo;
  Rational hi;
};

struct VarInfo {
  std::string name;
  VarKind kind;
  std::optional<VarId> twin;  // primed <-> unprimed counterpart
  std::optional<Interval> bounds;
};

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VarRegistry {
 public:
  // Adds a state variable and its primed twin ("x" and "x'"). Returns the unprimed id.
  VarId add_state(const std::string& name, bool boolean, std::optional<Interval> bounds = {});
  VarId add_param(const std::string& name, Interval bounds);
  VarId add(const std::string& name, VarKind kind, std::optional<Interval> bounds = {});

  std::optional<VarId> find(const std::string& name) const;
  VarId at(const std::string& name) const;
  const VarInfo& info(VarId v) const { return vars_.at(v.index); }
  VarInfo& info(VarId v) { return vars_.at(v.index); }
  const std::string& name(VarId v) const { return info(v).name; }
  VarKind kind(VarId v) const { return info(v).kind; }
  VarId primed(VarId v) const;
  VarId unprimed(VarId v) const;
  std::size_t size() const { return vars_.size(); }
  std::vector<VarId> all() const;

 private:
  std::vector<VarInfo> vars_;
  std::unordered_map<std::string, std::uint32_t> by_name_;
};

// Exponents sorted by variable index, all > 0.
using PowerList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct Monomial {
  Rational coef;
  PowerList powers;
  unsigned degree() const;
};

// Sparse polynomial with exact rational coefficients. Terms are kept in
// graded-lex order (highest total degree first, ties broken by the larger
// exponent on the lower variable index), no zero coefficients.
class Polynomial {
 public:
  Polynomial() = default;
  static Polynomial constant(const Rational& c);
  static Polynomial variable(VarId v);
  static Polynomial canonicalize(std::vector<Monomial> raw);

  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_value() const;  // value of the degree-0 term
  unsigned degree() const;
  unsigned degree_in(VarId v) const;
  bool mentions(VarId v) const;
  std::vector<VarId> variables() const;
  bool is_linear() const { return degree() <= 1; }

  // Coefficient polynomial of v^k.
  Polynomial coefficient(VarId v, unsigned k) const;

  Polynomial operator-() const;
  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Rational& c, const Polynomial& p);
  friend bool operator==(const Polynomial& a, const Polynomial& b);
  friend bool operator!=(const Polynomial& a, const Polynomial& b) { return !(a == b); }
  Polynomial pow(unsigned k) const;

  std::size_t hash() const;
  std::string to_string(const VarRegistry& vars) const;

 private:
  std::vector<Monomial> terms_;
};

// Graded-lex comparison: true when a sorts before b.
bool monomial_before(const PowerList& a, const PowerList& b);

using RealAssignment = std::unordered_map<std::uint32_t, Rational>;

// Throws ExprError when a variable of p is missing from the assignment.
Rational poly_eval(const Polynomial& p, const RealAssignment& values, const VarRegistry* vars = nullptr);
double poly_eval_double(const Polynomial& p, const std::unordered_map<std::uint32_t, double>& values);

// Simultaneous substitution. No right-hand side may mention a substituted variable.
Polynomial poly_substitute(const Polynomial& p, const std::map<VarId, Polynomial>& sigma);
Polynomial derivative(const Polynomial& p, VarId v);
// Root of p = 0 in v when p is linear in v with a constant leading coefficient.
// Empty when v does not occur. Throws ExprError for degree > 1 or a
// non-constant coefficient.
std::optional<Polynomial> solve_for_var(const Polynomial& p, VarId v);

enum class TermKind { kFinite, kNegInf, kPosInf };

struct ExtendedTerm {
  TermKind kind = TermKind::kFinite;
  Polynomial poly;

  static ExtendedTerm finite(Polynomial p) { return {TermKind::kFinite, std::move(p)}; }
  static ExtendedTerm neg_inf() { return {TermKind::kNegInf, {}}; }
  static ExtendedTerm pos_inf() { return {TermKind::kPosInf, {}}; }
  bool is_finite() const { return kind == TermKind::kFinite; }
  friend bool operator==(const ExtendedTerm& a, const ExtendedTerm& b) {
    return a.kind == b.kind && a.poly == b.poly;
  }
  std::string to_string(const VarRegistry& vars) const;
};

// A point value: finite rational or an infinity.
struct ExtendedValue {
  TermKind kind = TermKind::kFinite;
  Rational value;

  static ExtendedValue finite(Rational r) { return {TermKind::kFinite, std::move(r)}; }
  static ExtendedValue neg_inf() { return {TermKind::kNegInf, 0}; }
  static ExtendedValue pos_inf() { return {TermKind::kPosInf, 0}; }
  bool is_finite() const { return kind == TermKind::kFinite; }
  double to_double() const;
  friend bool operator==(const ExtendedValue& a, const ExtendedValue& b) {
    return a.kind == b.kind && (a.kind != TermKind::kFinite || a.value == b.value);
  }
  friend bool operator<(const ExtendedValue& a, const ExtendedValue& b);
  std::string to_string() const;
};

// A test on a boolean variable, or an inequality p >= 0 (p > 0 when strict).
// Inequalities are stored normalized: integer coprime coefficients, first
// term positive.
struct Decision {
  enum class Kind { kBool, kIneq };
  Kind kind = Kind::kBool;
  VarId var{};
  Polynomial poly;
  bool strict = false;

  static Decision boolean(VarId v) { return {Kind::kBool, v, {}, false}; }
  bool is_bool() const { return kind == Kind::kBool; }
  friend bool operator==(const Decision& a, const Decision& b) {
    return a.kind == b.kind && a.var == b.var && a.strict == b.strict && a.poly == b.poly;
  }
  std::size_t hash() const;
  std::string to_string(const VarRegistry& vars) const;
  // Whether the decision holds. Throws ExprError on a missing variable.
  bool holds(const RealAssignment& reals, const std::unordered_map<std::uint32_t, bool>& bools) const;
};

// Result of normalizing an inequality: either a constant truth value or a
// normalized decision plus whether the original test is its negation.
struct NormalizedIneq {
  std::optional<bool> constant;
  Decision decision;
  bool negated = false;
};

NormalizedIneq normalize_ineq(const Polynomial& p, bool strict);

}  // namespace hsdp
