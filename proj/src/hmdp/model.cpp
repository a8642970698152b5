#include <cctype>
#include <set>
#include <sstream>

#include "hsdp/hmdp.hpp"
#include "hsdp/prune.hpp"

namespace hsdp {

NodeId HmdpModel::reward_for(const ActionSchema& a) const {
  if (a.reward) return *a.reward;
  if (reward) return *reward;
  throw DomainError(DomainError::Kind::kSemantic, "action '" + a.name + "' has no reward");
}

const ActionSchema* HmdpModel::find_action(const std::string& name) const {
  for (auto& a : actions)
    if (a.name == name) return &a;
  return nullptr;
}

bool HmdpModel::parameterized() const {
  for (auto& a : actions)
    if (a.parameterized()) return true;
  return false;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw DomainError(DomainError::Kind::kSemantic, msg); }

// Literal for "p >= 0" (or "p > 0"); empty when the test is constant.
std::optional<Literal> ineq_literal(XaddStore& s, const Polynomial& p, bool strict, bool* constant) {
  NormalizedIneq n = normalize_ineq(p, strict);
  if (n.constant) {
    *constant = *n.constant;
    return std::nullopt;
  }
  return Literal{s.intern(n.decision), !n.negated};
}

// Feasibility of a path plus an optional extra literal. Unknown (treated as
// infeasible by callers) when a decision is nonlinear.
std::optional<bool> path_feasible(FeasibilityChecker& fc, std::vector<Literal> lits) {
  try {
    return fc.feasible(std::move(lits));
  } catch (const XaddError&) {
    return std::nullopt;
  }
}

void check_cpf(XaddStore& s, const std::string& what, NodeId cpf) {
  FeasibilityChecker fc(s);
  for (const PathCase& pc : s.export_paths(cpf)) {
    const ExtendedTerm& t = s.term(pc.leaf);
    if (!t.is_finite()) {
      if (path_feasible(fc, pc.constraints).value_or(false))
        invalid(what + " is undefined on part of the state space");
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      // side 0: p < 0, side 1: p > 1
      Polynomial q = side == 0 ? t.poly : Polynomial::constant(1) - t.poly;
      bool c = false;
      auto lit = ineq_literal(s, q, false, &c);
      std::vector<Literal> lits = pc.constraints;
      if (lit) {
        lits.push_back({lit->first, !lit->second});
      } else if (c) {
        continue;
      }
      if (path_feasible(fc, lits).value_or(false))
        invalid(what + " has a probability outside [0, 1] (leaf " + t.to_string(s.vars()) + ")");
    }
  }
}

void check_total(XaddStore& s, const std::string& what, NodeId f) {
  FeasibilityChecker fc(s);
  for (const PathCase& pc : s.export_paths(f))
    if (!s.term(pc.leaf).is_finite() && path_feasible(fc, pc.constraints).value_or(false))
      invalid(what + " is undefined on part of the state space");
}

}  // namespace

void validate(const HmdpModel& m) {
  if (!m.store) invalid("model has no store");
  XaddStore& s = *m.store;
  const VarRegistry& vars = s.vars();
  if (m.discount < 0 || m.discount > 1) invalid("discount must lie in [0, 1]");
  if (m.horizon < 1) invalid("horizon must be at least 1");
  if (m.actions.empty()) invalid("model has no actions");
  std::vector<VarId> params;
  for (VarId v : vars.all())
    if (vars.kind(v) == VarKind::kActionParam) params.push_back(v);
  for (const ActionSchema& a : m.actions) {
    std::set<std::uint32_t> own;
    for (auto& p : a.params) own.insert(p.var.index);
    auto scope = [&](NodeId f, const std::string& what) {
      for (VarId p : params)
        if (!own.count(p.index) && s.mentions(f, p))
          invalid(what + " mentions parameter '" + vars.name(p) + "' of another action");
    };
    for (VarId b : m.bool_vars) {
      VarId bp = vars.primed(b);
      auto it = a.bool_cpfs.find(bp);
      if (it == a.bool_cpfs.end()) invalid("action '" + a.name + "' has no cpf for " + vars.name(bp));
      std::string what = "cpf " + vars.name(bp) + " of action '" + a.name + "'";
      for (VarId v : vars.all())
        if (is_primed_kind(vars.kind(v)) && s.mentions(it->second, v))
          invalid(what + " mentions " + vars.name(v) + " (synchronic arc)");
      scope(it->second, what);
      check_cpf(s, what, it->second);
    }
    for (VarId x : m.cont_vars) {
      VarId xp = vars.primed(x);
      auto it = a.cont_transitions.find(xp);
      if (it == a.cont_transitions.end()) invalid("action '" + a.name + "' has no transition for " + vars.name(xp));
      std::string what = "transition " + vars.name(xp) + " of action '" + a.name + "'";
      for (VarId v : vars.all())
        if (vars.kind(v) == VarKind::kPrimedContinuous && s.mentions(it->second, v))
          invalid(what + " mentions " + vars.name(v) + " (synchronic arc)");
      scope(it->second, what);
      check_total(s, what, it->second);
    }
    if (!a.reward && !m.reward) invalid("action '" + a.name + "' has no reward");
    scope(m.reward_for(a), "reward of action '" + a.name + "'");
  }
}

namespace {

bool plain_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string interval_text(const Interval& iv) {
  return "[" + format_rational(iv.lo) + ", " + format_rational(iv.hi) + "]";
}

std::string leaf_text(const XaddStore& s, NodeId leaf) {
  const ExtendedTerm& t = s.term(leaf);
  if (t.kind == TermKind::kNegInf) return "-inf";
  if (t.kind == TermKind::kPosInf) return "inf";
  return t.poly.to_string(s.vars());
}

std::string literal_text(const XaddStore& s, Literal l) {
  const Decision& d = s.decision(l.first);
  if (d.is_bool()) return (l.second ? "" : "!") + s.vars().name(d.var);
  const char* op = l.second ? (d.strict ? " > 0" : " >= 0") : (d.strict ? " <= 0" : " < 0");
  return d.poly.to_string(s.vars()) + op;
}

std::string xadd_text(const XaddStore& s, NodeId f, const std::string& indent) {
  if (s.is_terminal(f)) return leaf_text(s, f);
  std::string out = "case {\n";
  for (const PathCase& pc : s.export_paths(f)) {
    out += indent + "  ";
    for (std::size_t i = 0; i < pc.constraints.size(); ++i) {
      if (i) out += " && ";
      out += "(" + literal_text(s, pc.constraints[i]) + ")";
    }
    out += " : " + leaf_text(s, pc.leaf) + ";\n";
  }
  return out + indent + "}";
}

}  // namespace

std::string render_domain(const HmdpModel& m) {
  const XaddStore& s = *m.store;
  const VarRegistry& vars = s.vars();
  std::ostringstream out;
  if (!m.cont_vars.empty()) {
    out << "cvariables {";
    for (VarId x : m.cont_vars) out << " " << vars.name(x) << " : " << interval_text(*vars.info(x).bounds) << ";";
    out << " }\n";
  }
  if (!m.bool_vars.empty()) {
    out << "bvariables {";
    for (VarId b : m.bool_vars) out << " " << vars.name(b) << ";";
    out << " }\n";
  }
  for (const ActionSchema& a : m.actions) {
    out << "\naction " << (plain_ident(a.name) ? a.name : "\"" + a.name + "\"") << "(";
    for (std::size_t i = 0; i < a.params.size(); ++i) {
      const ActionParam& p = a.params[i];
      if (i) out << ", ";
      out << vars.name(p.var) << " : " << interval_text(p.bounds);
      if (p.grid.lo != p.bounds.lo || p.grid.hi != p.bounds.hi) out << " grid " << interval_text(p.grid);
    }
    out << ") {\n";
    for (auto& [v, f] : a.cont_transitions)
      out << "  transition " << vars.name(v) << " = " << xadd_text(s, f, "  ") << ";\n";
    for (auto& [v, f] : a.bool_cpfs) out << "  cpf " << vars.name(v) << " = " << xadd_text(s, f, "  ") << ";\n";
    if (a.reward) out << "  reward = " << xadd_text(s, *a.reward, "  ") << ";\n";
    out << "}\n";
  }
  if (m.reward) out << "\nreward = " << xadd_text(s, *m.reward, "") << ";\n";
  out << "discount = " << format_rational(m.discount) << ";\n";
  out << "horizon = " << m.horizon << ";\n";
  return out.str();
}

}  // namespace hsdp
