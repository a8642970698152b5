#include "hsdp/expr.hpp"

namespace hsdp {

NormalizedIneq normalize_ineq(const Polynomial& p, bool strict) {
  NormalizedIneq out;
  if (p.is_constant()) {
    Rational c = p.constant_value();
    out.constant = strict ? c > 0 : c >= 0;
    return out;
  }
  mpz_class den_lcm = 1, num_gcd = 0;
  for (auto& m : p.terms()) {
    mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), m.coef.get_den_mpz_t());
    mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), m.coef.get_num_mpz_t());
  }
  Rational scale(den_lcm, num_gcd);
  scale.canonicalize();
  Polynomial q = scale * p;
  bool flip = q.terms().front().coef < 0;
  out.decision.kind = Decision::Kind::kIneq;
  if (flip) {
    // p >= 0 is not(-p > 0), p > 0 is not(-p >= 0)
    out.decision.poly = -q;
    out.decision.strict = !strict;
    out.negated = true;
  } else {
    out.decision.poly = std::move(q);
    out.decision.strict = strict;
  }
  return out;
}

std::size_t Decision::hash() const {
  if (kind == Kind::kBool) return 0x9e3779b9u ^ var.index;
  return poly.hash() * 2 + (strict ? 1 : 0);
}

std::string Decision::to_string(const VarRegistry& vars) const {
  if (kind == Kind::kBool) return vars.name(var);
  return poly.to_string(vars) + (strict ? " > 0" : " >= 0");
}

bool Decision::holds(const RealAssignment& reals, const std::unordered_map<std::uint32_t, bool>& bools) const {
  if (kind == Kind::kBool) {
    auto it = bools.find(var.index);
    if (it == bools.end()) throw ExprError("unassigned boolean #" + std::to_string(var.index));
    return it->second;
  }
  Rational v = poly_eval(poly, reals);
  return strict ? v > 0 : v >= 0;
}

}  // namespace hsdp
