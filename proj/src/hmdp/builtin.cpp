#include <sstream>

#include "hsdp/hmdp.hpp"

namespace hsdp {

std::string caic_text(int items, std::optional<Rational> capacity, bool deterministic_demand) {
  if (items < 1) throw DomainError(DomainError::Kind::kSemantic, "inventory needs at least one item");
  Rational cap = capacity ? *capacity : Rational(500 * items);
  std::string c = format_rational(cap);
  auto x = [&](int i) { return items == 1 ? std::string("x") : "x" + std::to_string(i); };
  auto a = [&](int i) { return items == 1 ? std::string("a") : "a" + std::to_string(i); };
  auto sum = [&](const std::string& prime) {
    std::string s;
    for (int i = 1; i <= items; ++i) s += (i > 1 ? " + " : "") + x(i) + prime;
    return s;
  };
  std::ostringstream o;
  o << "// Continuous inventory control, " << items << (items == 1 ? " item" : " items") << ", capacity " << c;
  if (deterministic_demand) o << ", deterministic demand";
  o << "\n";
  o << "cvariables {";
  for (int i = 1; i <= items; ++i) o << " " << x(i) << " : [0, " << c << "];";
  o << " }\n";
  o << "bvariables { d; }\n\n";
  o << "action order(";
  for (int i = 1; i <= items; ++i) o << (i > 1 ? ", " : "") << a(i) << " : [0, 1000000] grid [0, 200]";
  o << ") {\n";
  for (int i = 1; i <= items; ++i)
    o << "  transition " << x(i) << "' = case { (d) : " << x(i) << " + " << a(i) << " - 150; (!d) : " << x(i)
      << " + " << a(i) << " - 50; };\n";
  if (deterministic_demand)
    o << "  cpf d' = 1;\n";
  else
    o << "  cpf d' = case { (d) : 0.7; (!d) : 0.3; };\n";
  o << "}\n\n";
  o << "reward = case {\n";
  o << "    (" << sum("") << " > " << c << ") || (" << sum("'") << " > " << c << ") : -inf;\n";
  o << "    (" << sum("") << " <= " << c << ") && (" << sum("'") << " <= " << c << ") : 0;\n";
  o << "  }";
  for (int i = 1; i <= items; ++i) {
    std::string cost = " - 0.1*" + a(i) + " - 0.05*" + x(i);
    o << "\n  + case {\n";
    o << "    (d) && (" << x(i) << " >= 150) : 150" << cost << ";\n";
    o << "    (d) && (" << x(i) << " < 150) : " << x(i) << cost << ";\n";
    o << "    (!d) && (" << x(i) << " >= 50) : 50" << cost << ";\n";
    o << "    (!d) && (" << x(i) << " < 50) : " << x(i) << cost << ";\n";
    o << "  }";
  }
  for (int i = 1; i <= items; ++i) {
    o << "\n  + case {\n";
    o << "    (" << x(i) << " < 0) || (" << x(i) << "' < 0) : -inf;\n";
    o << "    (" << x(i) << " >= 0) && (" << x(i) << "' >= 0) : 0;\n";
    o << "  }";
  }
  o << ";\n";
  o << "discount = 1;\n";
  o << "horizon = 2;\n";
  return o.str();
}

namespace {

const char* kRover = R"(// Mars rover: move a distance y along a line, photograph near x = 0
cvariables { x : [-100, 100]; }
bvariables { b; }

action move(y : [-10, 10]) {
  transition x' = case {
    (y >= -10) && (y <= 10) : x + y;
    (y < -10) || (y > 10) : x;
  };
  cpf b' = case {
    (b) || ((x >= -2) && (x <= 2)) : 1;
    (!b) && ((x < -2) || (x > 2)) : 0;
  };
}

reward = case {
  (!b) && (x >= -2) && (x <= 2) : 4 - x^2;
  (b) || (x < -2) || (x > 2) : 0;
};
discount = 1;
horizon = 2;
)";

const char* kReservoir = R"(// Two reservoirs; drain(e) moves water from l2 into l1 for e time units
cvariables { l1 : [0, 5000]; l2 : [0, 5000]; }

action drain(e : [0, 10]) {
  transition l1' = 400*e + l1 - 700*e + 500*e;
  transition l2' = 400*e + l2 - 500*e;
  reward = case {
    (50 - 200*e <= l1) && (l1 <= 4500 - 200*e) && (50 + 100*e <= l2) && (l2 <= 4500 + 100*e) : e;
    (50 - 200*e > l1) || (l1 > 4500 - 200*e) || (50 + 100*e > l2) || (l2 > 4500 + 100*e) : -inf;
  };
}

action no_drain(e : [0, 10]) {
  transition l1' = 400*e + l1 - 700*e;
  transition l2' = 400*e + l2;
  reward = case {
    (50 + 300*e <= l1) && (l1 <= 4500 + 300*e) && (50 - 400*e <= l2) && (l2 <= 4500 - 400*e) : 0;
    (50 + 300*e > l1) || (l1 > 4500 + 300*e) || (50 - 400*e > l2) || (l2 > 4500 - 400*e) : -inf;
  };
}
discount = 1;
horizon = 3;
)";

}  // namespace

std::vector<std::string> builtin_domain_names() { return {"caic1", "caic1-dd", "caic2", "caic3", "rover", "reservoir"}; }

std::string builtin_domain_text(const std::string& name) {
  if (name == "rover") return kRover;
  if (name == "reservoir") return kReservoir;
  if (name.rfind("caic", 0) == 0) {
    std::string rest = name.substr(4);
    bool dd = false;
    if (rest.size() > 3 && rest.compare(rest.size() - 3, 3, "-dd") == 0) {
      dd = true;
      rest.resize(rest.size() - 3);
    }
    if (!rest.empty() && rest.size() < 3 && rest.find_first_not_of("0123456789") == std::string::npos) {
      int k = std::stoi(rest);
      if (k >= 1) return caic_text(k, std::nullopt, dd);
    }
  }
  throw DomainError(DomainError::Kind::kSemantic, "unknown built-in domain '" + name + "'");
}

HmdpModel builtin_domain(const std::string& name) { return parse_domain(builtin_domain_text(name)); }

std::vector<Rational> grid_points(const Interval& range, int n) {
  if (n < 1) throw DomainError(DomainError::Kind::kSemantic, "grid needs at least one point");
  if (n == 1) return {range.lo};
  std::vector<Rational> out;
  for (int k = 0; k < n; ++k) {
    Rational v = range.lo + (range.hi - range.lo) * Rational(k) / Rational(n - 1);
    v.canonicalize();
    out.push_back(v);
  }
  return out;
}

HmdpModel discretize_actions(const HmdpModel& m, int n) {
  if (n < 2) throw DomainError(DomainError::Kind::kSemantic, "discretization needs n >= 2");
  if (!m.parameterized()) throw DomainError(DomainError::Kind::kSemantic, "model has no action parameters");
  HmdpModel out = m;
  out.store = std::make_shared<XaddStore>(m.store->clone());
  XaddStore& s = *out.store;
  out.actions.clear();
  for (const ActionSchema& a : m.actions) {
    if (!a.parameterized()) {
      out.actions.push_back(a);
      continue;
    }
    std::vector<std::vector<Rational>> grids;
    for (auto& p : a.params) grids.push_back(grid_points(p.grid, n));
    std::vector<std::size_t> k(a.params.size(), 0);
    for (;;) {
      ActionSchema d;
      d.origin = a.name;
      Substitution sigma;
      std::string label;
      for (std::size_t i = 0; i < a.params.size(); ++i) {
        const Rational& v = grids[i][k[i]];
        sigma.reals[a.params[i].var] = Polynomial::constant(v);
        d.fixed.push_back({a.params[i].var, v});
        label += (i ? "," : "") + s.vars().name(a.params[i].var) + "=" + format_rational(v);
      }
      d.name = a.name + "(" + label + ")";
      for (auto& [v, f] : a.bool_cpfs) d.bool_cpfs[v] = s.substitute(f, sigma);
      for (auto& [v, f] : a.cont_transitions) d.cont_transitions[v] = s.substitute(f, sigma);
      d.reward = s.substitute(m.reward_for(a), sigma);
      out.actions.push_back(std::move(d));
      std::size_t i = 0;
      while (i < k.size() && ++k[i] == grids[i].size()) k[i++] = 0;
      if (i == k.size()) break;
    }
  }
  // the shared reward stays for V0 = R unless it still mentions a parameter
  if (out.reward)
    for (const ActionSchema& a : m.actions)
      for (const ActionParam& p : a.params)
        if (out.reward && s.mentions(*out.reward, p.var)) out.reward.reset();
  return out;
}

}  // namespace hsdp
