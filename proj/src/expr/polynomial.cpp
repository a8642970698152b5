#include <algorithm>
#include <functional>
#include <limits>

#include "hsdp/expr.hpp"

namespace hsdp {

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (auto& [v, e] : powers) d += e;
  return d;
}

static unsigned total_degree(const PowerList& p) {
  unsigned d = 0;
  for (auto& [v, e] : p) d += e;
  return d;
}

bool monomial_before(const PowerList& a, const PowerList& b) {
  unsigned da = total_degree(a), db = total_degree(b);
  if (da != db) return da > db;
  std::size_t i = 0;
  for (; i < a.size() && i < b.size(); ++i) {
    if (a[i].first != b[i].first) return a[i].first < b[i].first;
    if (a[i].second != b[i].second) return a[i].second > b[i].second;
  }
  return i < a.size() && i >= b.size();
}

Polynomial Polynomial::constant(const Rational& c) {
  Polynomial p;
  if (c != 0) p.terms_.push_back({c, {}});
  return p;
}

Polynomial Polynomial::variable(VarId v) {
  Polynomial p;
  p.terms_.push_back({Rational(1), {{v.index, 1u}}});
  return p;
}

Polynomial Polynomial::canonicalize(std::vector<Monomial> raw) {
  for (auto& m : raw) {
    std::sort(m.powers.begin(), m.powers.end());
    PowerList merged;
    for (auto& pe : m.powers) {
      if (pe.second == 0) continue;
      if (!merged.empty() && merged.back().first == pe.first)
        merged.back().second += pe.second;
      else
        merged.push_back(pe);
    }
    m.powers = std::move(merged);
  }
  std::sort(raw.begin(), raw.end(),
            [](const Monomial& a, const Monomial& b) { return monomial_before(a.powers, b.powers); });
  Polynomial p;
  for (auto& m : raw) {
    if (!p.terms_.empty() && p.terms_.back().powers == m.powers) {
      p.terms_.back().coef += m.coef;
      if (p.terms_.back().coef == 0) p.terms_.pop_back();
    } else if (m.coef != 0) {
      p.terms_.push_back(std::move(m));
    }
  }
  return p;
}

bool Polynomial::is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].powers.empty()); }

Rational Polynomial::constant_value() const {
  if (!terms_.empty() && terms_.back().powers.empty()) return terms_.back().coef;
  return 0;
}

unsigned Polynomial::degree() const { return terms_.empty() ? 0 : terms_.front().degree(); }

unsigned Polynomial::degree_in(VarId v) const {
  unsigned d = 0;
  for (auto& m : terms_)
    for (auto& [var, e] : m.powers)
      if (var == v.index) d = std::max(d, e);
  return d;
}

bool Polynomial::mentions(VarId v) const { return degree_in(v) > 0; }

std::vector<VarId> Polynomial::variables() const {
  std::vector<std::uint32_t> ids;
  for (auto& m : terms_)
    for (auto& [var, e] : m.powers) ids.push_back(var);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<VarId> out;
  for (auto i : ids) out.push_back(VarId{i});
  return out;
}

Polynomial Polynomial::coefficient(VarId v, unsigned k) const {
  std::vector<Monomial> raw;
  for (auto& m : terms_) {
    unsigned e = 0;
    PowerList rest;
    for (auto& pe : m.powers) {
      if (pe.first == v.index)
        e = pe.second;
      else
        rest.push_back(pe);
    }
    if (e == k) raw.push_back({m.coef, std::move(rest)});
  }
  return canonicalize(std::move(raw));
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (auto& m : p.terms_) m.coef = -m.coef;
  return p;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  std::size_t i = 0, j = 0;
  auto& ta = a.terms_;
  auto& tb = b.terms_;
  while (i < ta.size() || j < tb.size()) {
    if (j == tb.size() || (i < ta.size() && monomial_before(ta[i].powers, tb[j].powers))) {
      out.terms_.push_back(ta[i++]);
    } else if (i == ta.size() || monomial_before(tb[j].powers, ta[i].powers)) {
      out.terms_.push_back(tb[j++]);
    } else {
      Rational c = ta[i].coef + tb[j].coef;
      if (c != 0) out.terms_.push_back({c, ta[i].powers});
      ++i;
      ++j;
    }
  }
  return out;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<Monomial> raw;
  raw.reserve(a.terms_.size() * b.terms_.size());
  for (auto& x : a.terms_) {
    for (auto& y : b.terms_) {
      PowerList pw = x.powers;
      pw.insert(pw.end(), y.powers.begin(), y.powers.end());
      raw.push_back({x.coef * y.coef, std::move(pw)});
    }
  }
  return Polynomial::canonicalize(std::move(raw));
}

Polynomial operator*(const Rational& c, const Polynomial& p) {
  if (c == 0) return {};
  Polynomial out = p;
  for (auto& m : out.terms_) m.coef *= c;
  return out;
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].coef != b.terms_[i].coef || a.terms_[i].powers != b.terms_[i].powers) return false;
  }
  return true;
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial r = constant(1);
  for (unsigned i = 0; i < k; ++i) r = r * *this;
  return r;
}

std::size_t Polynomial::hash() const {
  std::size_t h = terms_.size();
  for (auto& m : terms_) {
    h = h * 31 + hash_rational(m.coef);
    for (auto& [v, e] : m.powers) h = h * 131 + v * 7 + e;
  }
  return h;
}

std::string Polynomial::to_string(const VarRegistry& vars) const {
  if (terms_.empty()) return "0";
  std::vector<const Monomial*> order;
  if (terms_.back().powers.empty()) order.push_back(&terms_.back());
  for (auto& m : terms_)
    if (!m.powers.empty()) order.push_back(&m);
  std::string out;
  bool first = true;
  for (const Monomial* m : order) {
    Rational c = m->coef;
    if (first) {
      if (c < 0) {
        out += "-";
        c = -c;
      }
    } else {
      out += c < 0 ? " - " : " + ";
      if (c < 0) c = -c;
    }
    first = false;
    out += format_rational(c);
    for (auto& [v, e] : m->powers) {
      out += "*" + vars.name(VarId{v});
      if (e > 1) out += "^" + std::to_string(e);
    }
  }
  return out;
}

Rational poly_eval(const Polynomial& p, const RealAssignment& values, const VarRegistry* vars) {
  Rational sum = 0;
  for (auto& m : p.terms()) {
    Rational t = m.coef;
    for (auto& [v, e] : m.powers) {
      auto it = values.find(v);
      if (it == values.end()) {
        std::string name = vars ? vars->name(VarId{v}) : "#" + std::to_string(v);
        throw ExprError("unassigned variable: " + name);
      }
      for (unsigned k = 0; k < e; ++k) t *= it->second;
    }
    sum += t;
  }
  return sum;
}

double poly_eval_double(const Polynomial& p, const std::unordered_map<std::uint32_t, double>& values) {
  double sum = 0;
  for (auto& m : p.terms()) {
    double t = m.coef.get_d();
    for (auto& [v, e] : m.powers) {
      auto it = values.find(v);
      if (it == values.end()) throw ExprError("unassigned variable #" + std::to_string(v));
      for (unsigned k = 0; k < e; ++k) t *= it->second;
    }
    sum += t;
  }
  return sum;
}

Polynomial poly_substitute(const Polynomial& p, const std::map<VarId, Polynomial>& sigma) {
  for (auto& [lhs, rhs] : sigma)
    for (auto& [other, unused] : sigma)
      if (rhs.mentions(other)) throw ExprError("substitution right-hand side mentions a substituted variable");
  Polynomial out;
  for (auto& m : p.terms()) {
    Polynomial term = Polynomial::constant(m.coef);
    PowerList kept;
    for (auto& [v, e] : m.powers) {
      auto it = sigma.find(VarId{v});
      if (it == sigma.end())
        kept.push_back({v, e});
      else
        term = term * it->second.pow(e);
    }
    if (!kept.empty()) term = term * Polynomial::canonicalize({Monomial{Rational(1), kept}});
    out = out + term;
  }
  return out;
}

Polynomial derivative(const Polynomial& p, VarId v) {
  std::vector<Monomial> raw;
  for (auto& m : p.terms()) {
    for (std::size_t i = 0; i < m.powers.size(); ++i) {
      if (m.powers[i].first != v.index) continue;
      Monomial d{m.coef * m.powers[i].second, m.powers};
      if (--d.powers[i].second == 0) d.powers.erase(d.powers.begin() + static_cast<long>(i));
      raw.push_back(std::move(d));
    }
  }
  return Polynomial::canonicalize(std::move(raw));
}

std::optional<Polynomial> solve_for_var(const Polynomial& p, VarId v) {
  unsigned d = p.degree_in(v);
  if (d == 0) return std::nullopt;
  if (d > 1) throw ExprError("solve_for_var: degree " + std::to_string(d) + " in variable");
  Polynomial c = p.coefficient(v, 1);
  if (!c.is_constant()) throw ExprError("solve_for_var: non-constant coefficient");
  Polynomial rest = p.coefficient(v, 0);
  return Rational(-1 / c.constant_value()) * rest;
}

std::string ExtendedTerm::to_string(const VarRegistry& vars) const {
  switch (kind) {
    case TermKind::kNegInf: return "-inf";
    case TermKind::kPosInf: return "inf";
    default: return poly.to_string(vars);
  }
}

double ExtendedValue::to_double() const {
  if (kind == TermKind::kNegInf) return -std::numeric_limits<double>::infinity();
  if (kind == TermKind::kPosInf) return std::numeric_limits<double>::infinity();
  return value.get_d();
}

bool operator<(const ExtendedValue& a, const ExtendedValue& b) {
  auto rank = [](TermKind k) { return k == TermKind::kNegInf ? 0 : k == TermKind::kFinite ? 1 : 2; };
  if (a.kind != b.kind) return rank(a.kind) < rank(b.kind);
  return a.kind == TermKind::kFinite && a.value < b.value;
}

std::string ExtendedValue::to_string() const {
  if (kind == TermKind::kNegInf) return "-inf";
  if (kind == TermKind::kPosInf) return "inf";
  return format_rational(value);
}

}  // namespace hsdp
