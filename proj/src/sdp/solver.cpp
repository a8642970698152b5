#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "hsdp/sdp.hpp"

namespace hsdp {

namespace {

struct Bound {
  Polynomial expr;
  bool strict = false;
};

}  // namespace

Solver::Solver(const HmdpModel& m, SolveOptions opt)
    : store_(std::make_shared<XaddStore>(m.store->clone())), model_(m), opt_(std::move(opt)), pruner_(*store_) {
  model_.store = store_;
}

NodeId Solver::prime(NodeId v) {
  XaddStore& s = *store_;
  const VarRegistry& vars = s.vars();
  Substitution sigma;
  for (VarId b : model_.bool_vars) sigma.bools[b] = vars.primed(b);
  for (VarId x : model_.cont_vars) sigma.reals[x] = Polynomial::variable(vars.primed(x));
  for (VarId p : vars.all())
    if (is_primed_kind(vars.kind(p)) && s.mentions(v, p))
      throw XaddError("prime: " + vars.name(p) + " is already primed");
  return s.substitute(v, sigma);
}

NodeId Solver::integrate_delta(NodeId q, VarId xp, NodeId transition) {
  XaddStore& s = *store_;
  if (!s.mentions(q, xp)) return q;
  for (VarId v : s.vars().all())
    if (s.vars().kind(v) == VarKind::kPrimedContinuous && s.mentions(transition, v))
      throw XaddError("transition for " + s.vars().name(xp) + " mentions " + s.vars().name(v));
  std::unordered_map<std::uint32_t, NodeId> memo;
  std::function<NodeId(NodeId)> rec = [&](NodeId t) -> NodeId {
    auto it = memo.find(t.index);
    if (it != memo.end()) return it->second;
    NodeId r;
    if (s.is_terminal(t)) {
      const ExtendedTerm& g = s.term(t);
      if (!g.is_finite()) {
        r = s.neg_inf();
      } else {
        Substitution sigma;
        sigma.reals[xp] = g.poly;
        r = s.substitute(q, sigma);
      }
    } else {
      r = s.get_node(s.decision_of(t), rec(s.high(t)), rec(s.low(t)));
    }
    memo.emplace(t.index, r);
    return r;
  };
  return s.reorder(rec(transition));
}

NodeId Solver::marginalize_discrete(NodeId q, VarId bp, NodeId cpf) {
  XaddStore& s = *store_;
  if (!s.mentions(q, bp)) return q;
  NodeId on = s.prob_product(s.restrict(q, bp, true), cpf);
  NodeId off = s.prob_product(s.restrict(q, bp, false), s.apply(s.one(), cpf, ApplyOp::kSub));
  return s.apply(on, off, ApplyOp::kAdd);
}

NodeId Solver::simplify(NodeId f) {
  XaddStore& s = *store_;
  f = linearize(s, f);
  switch (opt_.prune) {
    case PruneMode::kNone:
      return f;
    case PruneMode::kConsistency:
      return pruner_.prune_inconsistent(f);
    case PruneMode::kFull:
      return pruner_.prune_redundant(pruner_.prune_inconsistent(f));
    case PruneMode::kHeuristic:
      return pruner_.prune_redundant(pruner_.prune_inconsistent(f), RedundancyMode::kEpsilon, opt_.epsilon);
  }
  return f;
}

NodeId Solver::regress(NodeId v, const ActionSchema& a) {
  XaddStore& s = *store_;
  const VarRegistry& vars = s.vars();
  NodeId r = s.strip_annotations(model_.reward_for(a));
  bool reward_primed = false;
  for (VarId p : vars.all())
    if (is_primed_kind(vars.kind(p)) && s.mentions(r, p)) reward_primed = true;
  NodeId q = model_.discount == 0 ? s.zero() : s.scale(prime(s.strip_annotations(v)), model_.discount);
  if (reward_primed) q = s.apply(r, q, ApplyOp::kAdd);
  for (auto& [xp, t] : a.cont_transitions) q = simplify(integrate_delta(q, xp, t));
  for (auto& [bp, cpf] : a.bool_cpfs) q = marginalize_discrete(q, bp, cpf);
  if (!reward_primed) q = s.apply(r, q, ApplyOp::kAdd);
  return simplify(q);
}

MaxPartition Solver::maximize_path(const PathCase& path, VarId y, const Interval& bounds) {
  XaddStore& s = *store_;
  const VarRegistry& vars = s.vars();
  MaxPartition mp;
  std::vector<Bound> lower{{Polynomial::constant(bounds.lo), false}};
  std::vector<Bound> upper{{Polynomial::constant(bounds.hi), false}};
  for (const Literal& lit : path.constraints) {
    const Decision& d = s.decision(lit.first);
    if (d.is_bool() || !d.poly.mentions(y)) {
      mp.ind.push_back(lit);
      continue;
    }
    if (d.poly.degree_in(y) > 1) throw XaddError("decision nonlinear in " + vars.name(y));
    Polynomial p = lit.second ? d.poly : -d.poly;
    bool strict = lit.second ? d.strict : !d.strict;
    Polynomial c = p.coefficient(y, 1);
    if (!c.is_constant()) throw XaddError("coefficient of " + vars.name(y) + " is not constant");
    Rational k = c.constant_value();
    Bound b{Rational(-1 / k) * p.coefficient(y, 0), strict};
    (k > 0 ? lower : upper).push_back(std::move(b));
  }
  for (auto& b : lower) mp.lower.push_back(b.expr);
  for (auto& b : upper) mp.upper.push_back(b.expr);

  mp.lb = s.poly(lower[0].expr);
  for (std::size_t i = 1; i < lower.size(); ++i) mp.lb = s.apply(mp.lb, s.poly(lower[i].expr), ApplyOp::kMax);
  mp.ub = s.poly(upper[0].expr);
  for (std::size_t i = 1; i < upper.size(); ++i) mp.ub = s.apply(mp.ub, s.poly(upper[i].expr), ApplyOp::kMin);

  NodeId leaf = path.leaf;
  const ExtendedTerm f = s.term(leaf);
  unsigned deg = f.is_finite() ? f.poly.degree_in(y) : 0;
  if (deg > 2) throw XaddError("leaf has degree " + std::to_string(deg) + " in " + vars.name(y));

  // f with y replaced by e, recording y := e
  auto at = [&](Polynomial e) {
    Substitution sigma;
    sigma.reals[y] = e;
    NodeId sub = s.substitute(leaf, sigma);
    Annotation ann = s.annotation(sub);
    ann.params.push_back({y, s.poly(e)});
    std::sort(ann.params.begin(), ann.params.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
    return s.terminal(s.term(sub), ann);
  };
  auto at_leaves = [&](NodeId bx) {
    return s.map_leaves(bx, [&](NodeId l) { return at(s.term(l).poly); });
  };
  NodeId best = s.apply(at_leaves(mp.lb), at_leaves(mp.ub), ApplyOp::kMax);
  if (deg == 2) {
    Polynomial a2 = f.poly.coefficient(y, 2);
    if (!a2.is_constant()) throw XaddError("quadratic coefficient of " + vars.name(y) + " is not constant");
    if (a2.constant_value() > 0) throw XaddError("leaf is convex in " + vars.name(y) + "; only concave leaves are supported");
    mp.root = solve_for_var(derivative(f.poly, y), y);
    NodeId cand = at(*mp.root);
    for (auto& b : upper) cand = s.ineq_node(b.expr - *mp.root, false, cand, s.neg_inf());
    for (auto& b : lower) cand = s.ineq_node(*mp.root - b.expr, false, cand, s.neg_inf());
    best = s.apply(best, s.reorder(cand), ApplyOp::kMax);
  }

  // The guard is built as a +inf / -inf mask, pruned as it grows; min with
  // +inf leaves the maximum and its annotation untouched.
  NodeId keep = s.pos_inf(), drop = s.neg_inf();
  NodeId mask = keep;
  for (const Literal& lit : mp.ind)
    mask = s.apply(mask, lit.second ? s.get_node(lit.first, keep, drop) : s.get_node(lit.first, drop, keep),
                   ApplyOp::kMin);
  for (auto& l : lower)
    for (auto& u : upper)
      mask = simplify(s.apply(mask, s.ineq_node(u.expr - l.expr, l.strict || u.strict, keep, drop), ApplyOp::kMin));
  mp.max = s.apply(best, mask, ApplyOp::kMin);
  return mp;
}

NodeId Solver::continuous_max(NodeId q, VarId y, const Interval& bounds) {
  XaddStore& s = *store_;
  q = linearize(s, q);
  std::vector<NodeId> parts;
  for (const PathCase& pc : s.export_paths(q)) {
    if (s.term(pc.leaf).kind == TermKind::kNegInf) continue;
    parts.push_back(simplify(maximize_path(pc, y, bounds).max));
  }
  return balanced_max(std::move(parts));
}

NodeId Solver::balanced_max(std::vector<NodeId> parts) {
  if (parts.empty()) return store_->neg_inf();
  // pairwise merging keeps the operands of each casemax small; the left
  // operand wins ties, so earlier parts keep precedence
  while (parts.size() > 1) {
    std::vector<NodeId> next;
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(simplify(casemax(parts[i], parts[i + 1])));
    if (parts.size() % 2) next.push_back(parts.back());
    parts = std::move(next);
  }
  return parts[0];
}

NodeId Solver::annotate(NodeId q, const std::string& action) {
  XaddStore& s = *store_;
  return s.map_leaves(q, [&](NodeId l) {
    if (!s.term(l).is_finite()) return l;
    Annotation ann = s.annotation(l);
    ann.action = action;
    return s.terminal(s.term(l), ann);
  });
}

SolveResult Solver::solve() {
  using Clock = std::chrono::steady_clock;
  XaddStore& s = *store_;
  SolveResult res;
  res.store = store_;
  res.model = model_;
  int H = opt_.horizon.value_or(model_.horizon);
  if (H < 0) throw XaddError("horizon must be non-negative");

  NodeId v0 = s.zero();
  if (opt_.v0_reward) {
    if (!model_.reward) throw XaddError("the model has no shared reward for V0");
    v0 = s.strip_annotations(*model_.reward);
    for (VarId p : s.vars().all())
      if ((is_primed_kind(s.vars().kind(p)) || s.vars().kind(p) == VarKind::kActionParam) && s.mentions(v0, p))
        throw XaddError("V0 = R needs a reward over current state only");
  }
  res.value.push_back(v0);
  res.policy.push_back(v0);
  res.q.emplace_back();
  for (auto& a : model_.actions)
    for (auto& p : a.params) {
      const std::string& n = s.vars().name(p.var);
      if (std::find(res.param_order.begin(), res.param_order.end(), n) == res.param_order.end())
        res.param_order.push_back(n);
    }

  for (int h = 1; h <= H; ++h) {
    auto t0 = Clock::now();
    std::size_t removed0 = pruner_.removed_nodes();
    s.set_node_budget(opt_.node_budget);
    try {
      std::vector<std::pair<std::string, NodeId>> qs;
      std::vector<NodeId> parts;
      for (const ActionSchema& a : model_.actions) {
        NodeId q = regress(res.value.back(), a);
        for (const ActionParam& p : a.params) q = continuous_max(q, p.var, p.bounds);
        q = annotate(q, a.name);
        qs.push_back({a.name, q});
        parts.push_back(q);
      }
      NodeId vh = balanced_max(std::move(parts));
      NodeId plain = simplify(s.strip_annotations(vh));
      res.q.push_back(std::move(qs));
      res.policy.push_back(vh);
      res.value.push_back(plain);
    } catch (const BudgetExceeded& e) {
      s.set_node_budget(std::nullopt);
      res.aborted = true;
      res.abort_reason = "iteration " + std::to_string(h) + ": " + e.what();
      break;
    }
    s.set_node_budget(std::nullopt);
    IterationStats st;
    st.h = h;
    st.action_count = model_.actions.size();
    st.v_nodes = s.node_count(res.value.back());
    st.v_paths = s.path_count(res.value.back());
    st.pruned_nodes = pruner_.removed_nodes() - removed0;
    st.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    res.stats.push_back(st);
    if (opt_.early_stop && h < H) {
      NodeId prev = res.value[h - 1], cur = res.value[h];
      if (prev == cur || grid_equal(s, model_, prev, cur)) {
        res.converged = true;
        res.converged_at = h;
        break;
      }
    }
  }
  return res;
}

SolveResult value_iteration(const HmdpModel& m, SolveOptions opt) { return Solver(m, std::move(opt)).solve(); }

bool grid_equal(const XaddStore& s, const HmdpModel& m, NodeId f, NodeId g, int points, double tol) {
  std::size_t n = m.cont_vars.size();
  int per = n == 0 ? 1 : std::max(2, static_cast<int>(std::floor(std::pow(points, 1.0 / n) + 1e-9)));
  std::vector<std::vector<Rational>> axes;
  for (VarId x : m.cont_vars) {
    const auto& b = s.vars().info(x).bounds;
    axes.push_back(b ? grid_points(*b, per) : std::vector<Rational>{0});
  }
  std::size_t nb = m.bool_vars.size();
  if (nb > 10) throw XaddError("too many booleans for a grid comparison");
  for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
    std::vector<std::size_t> k(n, 0);
    for (;;) {
      Assignment a;
      for (std::size_t i = 0; i < nb; ++i) a.set(m.bool_vars[i], ((mask >> i) & 1) != 0);
      for (std::size_t i = 0; i < n; ++i) a.set(m.cont_vars[i], axes[i][k[i]]);
      ExtendedValue u = s.evaluate(f, a), v = s.evaluate(g, a);
      if (u.kind != v.kind) return false;
      if (u.is_finite() && std::abs(Rational(u.value - v.value).get_d()) > tol) return false;
      std::size_t i = 0;
      while (i < n && ++k[i] == axes[i].size()) k[i++] = 0;
      if (i == n) break;
    }
  }
  return true;
}

PolicyChoice extract_policy(const SolveResult& r, int h, const Assignment& state) {
  if (h < 0 || h > r.solved_horizon()) throw XaddError("horizon " + std::to_string(h) + " was not solved");
  const XaddStore& s = *r.store;
  PolicyChoice pc;
  NodeId leaf = s.leaf_at(r.policy[h], state);
  pc.value = s.evaluate(r.policy[h], state);
  if (!pc.value.is_finite()) return pc;
  const Annotation& ann = s.annotation(leaf);
  pc.action = ann.action;
  for (auto& [v, t] : ann.params) pc.params.push_back({s.vars().name(v), s.evaluate(t, state).value});
  if (const ActionSchema* a = r.model.find_action(ann.action))
    for (auto& [v, val] : a->fixed) pc.params.push_back({s.vars().name(v), val});
  return pc;
}

}  // namespace hsdp
