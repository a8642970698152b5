#include <algorithm>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "hsdp/prune.hpp"

namespace hsdp {

namespace {

std::vector<std::uint32_t> decision_vars(const Decision& d) {
  std::vector<std::uint32_t> out;
  if (d.is_bool()) {
    out.push_back(d.var.index);
  } else {
    for (VarId v : d.poly.variables()) out.push_back(v.index);
  }
  return out;
}

}  // namespace

Implied Pruner::test_implied(const std::vector<Literal>& context, std::uint32_t dec) {
  for (auto& [d, br] : context)
    if (d == dec) return br ? Implied::kTrue : Implied::kFalse;
  const Decision& cand = store_.decision(dec);
  if (cand.is_bool()) return Implied::kUnknown;
  // Only the literals connected to the candidate through shared variables
  // can change its feasibility; the rest of the path is feasible on its own.
  std::vector<std::uint32_t> reach = decision_vars(cand);
  std::vector<bool> used(context.size(), false);
  std::vector<Literal> relevant;
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t i = 0; i < context.size(); ++i) {
      if (used[i]) continue;
      const Decision& d = store_.decision(context[i].first);
      if (d.is_bool()) continue;
      auto vs = decision_vars(d);
      bool touch = std::any_of(vs.begin(), vs.end(),
                               [&](std::uint32_t v) { return std::find(reach.begin(), reach.end(), v) != reach.end(); });
      if (!touch) continue;
      used[i] = true;
      grew = true;
      relevant.push_back(context[i]);
      for (auto v : vs)
        if (std::find(reach.begin(), reach.end(), v) == reach.end()) reach.push_back(v);
    }
  }
  relevant.push_back({dec, true});
  bool can_true = checker_.feasible(relevant);
  relevant.back().second = false;
  bool can_false = checker_.feasible(relevant);
  relevant.pop_back();
  if (can_true && can_false) return Implied::kUnknown;
  Literal implied{dec, can_true};
  if (!can_true && !can_false) return Implied::kTrue;  // unreachable branch; either choice is sound
  for (auto& l : relevant) {
    if (checker_.feasible({l, {dec, !implied.second}})) continue;
    kb_.add(l, implied);
    break;
  }
  return can_true ? Implied::kTrue : Implied::kFalse;
}

NodeId Pruner::prune_inconsistent(NodeId root) {
  std::vector<Literal> ctx;
  std::function<NodeId(NodeId)> rec = [&](NodeId n) -> NodeId {
    if (store_.is_terminal(n)) return n;
    std::uint32_t dec = store_.decision_of(n);
    switch (test_implied(ctx, dec)) {
      case Implied::kTrue:
        ++removed_;
        return rec(store_.high(n));
      case Implied::kFalse:
        ++removed_;
        return rec(store_.low(n));
      case Implied::kUnknown: break;
    }
    ctx.push_back({dec, true});
    NodeId h = rec(store_.high(n));
    ctx.back().second = false;
    NodeId l = rec(store_.low(n));
    ctx.pop_back();
    return store_.get_node(dec, h, l);
  };
  return rec(store_.own(root));
}

void Pruner::harvest_implications(NodeId root) {
  std::vector<std::uint32_t> decs;
  for (auto d : store_.decisions_in(root))
    if (!store_.decision(d).is_bool()) decs.push_back(d);
  for (auto d1 : decs) {
    auto v1 = decision_vars(store_.decision(d1));
    for (auto d2 : decs) {
      if (d1 == d2) continue;
      auto v2 = decision_vars(store_.decision(d2));
      bool share = std::any_of(v1.begin(), v1.end(),
                               [&](std::uint32_t v) { return std::find(v2.begin(), v2.end(), v) != v2.end(); });
      if (!share) continue;
      for (bool b1 : {true, false})
        for (bool b2 : {true, false})
          if (!checker_.feasible({{d1, b1}, {d2, !b2}})) kb_.add({d1, b1}, {d2, b2});
    }
  }
}

namespace {

bool leaves_close(const XaddStore& s, NodeId a, NodeId b, const Rational& eps) {
  if (!s.is_terminal(a) || !s.is_terminal(b)) return false;
  const ExtendedTerm& x = s.term(a);
  const ExtendedTerm& y = s.term(b);
  if (!x.is_finite() || !y.is_finite()) return false;
  Polynomial d = x.poly - y.poly;
  for (auto& m : d.terms())
    if (abs(m.coef) >= eps) return false;
  return true;
}

// Assignment of decision literals closed under the implication base, with
// undo. Binary implications plus unit literals make unit propagation complete.
class Propagator {
 public:
  explicit Propagator(const ImplicationKB& kb) {
    for (auto& [from, to] : kb.edges()) {
      out_[key(from)].push_back(to);
      out_[key({to.first, !to.second})].push_back({from.first, !from.second});
    }
  }
  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t m) {
    while (trail_.size() > m) {
      value_.erase(trail_.back());
      trail_.pop_back();
    }
  }
  // False on conflict; the caller undoes to its mark.
  bool assign(Literal l) {
    std::vector<Literal> queue{l};
    while (!queue.empty()) {
      Literal cur = queue.back();
      queue.pop_back();
      auto it = value_.find(cur.first);
      if (it != value_.end()) {
        if (it->second != cur.second) return false;
        continue;
      }
      value_[cur.first] = cur.second;
      trail_.push_back(cur.first);
      auto e = out_.find(key(cur));
      if (e != out_.end())
        for (auto& nxt : e->second) queue.push_back(nxt);
    }
    return true;
  }
  std::optional<bool> value(std::uint32_t dec) const {
    auto it = value_.find(dec);
    if (it == value_.end()) return std::nullopt;
    return it->second;
  }

 private:
  static std::uint64_t key(Literal l) { return (static_cast<std::uint64_t>(l.first) << 1) | (l.second ? 1 : 0); }
  std::unordered_map<std::uint64_t, std::vector<Literal>> out_;
  std::unordered_map<std::uint32_t, bool> value_;
  std::vector<std::uint32_t> trail_;
};

}  // namespace

NodeId Pruner::prune_redundant(NodeId root, RedundancyMode mode, const Rational& eps) {
  root = store_.own(root);
  harvest_implications(root);
  std::vector<NodeId> order = store_.reachable(root);
  std::unordered_map<std::uint32_t, NodeId> rebuilt;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId x = *it;
    if (store_.is_terminal(x)) {
      rebuilt[x.index] = x;
      continue;
    }
    std::uint32_t dec = store_.decision_of(x);
    std::unordered_set<std::uint32_t> reaches_x{x.index};
    for (auto jt = std::find(order.begin(), order.end(), x); jt != order.begin();) {
      --jt;
      if (store_.is_terminal(*jt)) continue;
      if (reaches_x.count(store_.high(*jt).index) || reaches_x.count(store_.low(*jt).index)) reaches_x.insert(jt->index);
    }
    NodeId h = rebuilt.at(store_.high(x).index);
    NodeId l = rebuilt.at(store_.low(x).index);
    if (h == l) {
      rebuilt[x.index] = h;
      continue;
    }
    if (mode == RedundancyMode::kEpsilon && leaves_close(store_, h, l, eps)) {
      ++removed_;
      rebuilt[x.index] = h;
      continue;
    }
    // Branch `br` of x can be dropped when no assignment consistent with the
    // implication base reaches x, takes `br`, and tells the children apart.
    auto removable = [&](bool br) {
      Propagator prop(kb_);
      std::function<bool(NodeId, NodeId)> differ = [&](NodeId a, NodeId b) -> bool {
        if (a == b) return false;
        bool ta = store_.is_terminal(a), tb = store_.is_terminal(b);
        if (ta && tb) return true;
        std::uint32_t d;
        if (ta)
          d = store_.decision_of(b);
        else if (tb)
          d = store_.decision_of(a);
        else
          d = store_.order_key(store_.decision_of(a)) <= store_.order_key(store_.decision_of(b)) ? store_.decision_of(a)
                                                                                                  : store_.decision_of(b);
        for (bool v : {true, false}) {
          std::size_t m = prop.mark();
          if (prop.assign({d, v})) {
            NodeId na = !ta && store_.decision_of(a) == d ? (v ? store_.high(a) : store_.low(a)) : a;
            NodeId nb = !tb && store_.decision_of(b) == d ? (v ? store_.high(b) : store_.low(b)) : b;
            if (differ(na, nb)) return true;
          }
          prop.undo(m);
        }
        return false;
      };
      std::function<bool(NodeId)> path_to_x = [&](NodeId n) -> bool {
        if (n == x) {
          std::size_t m = prop.mark();
          bool found = prop.assign({dec, br}) && differ(h, l);
          prop.undo(m);
          return found;
        }
        if (store_.is_terminal(n) || !reaches_x.count(n.index)) return false;
        std::uint32_t d = store_.decision_of(n);
        for (bool v : {true, false}) {
          std::size_t m = prop.mark();
          if (prop.assign({d, v}) && path_to_x(v ? store_.high(n) : store_.low(n))) return true;
          prop.undo(m);
        }
        return false;
      };
      return !path_to_x(root);
    };
    if (removable(true)) {
      ++removed_;
      rebuilt[x.index] = l;
    } else if (removable(false)) {
      ++removed_;
      rebuilt[x.index] = h;
    } else {
      rebuilt[x.index] = store_.get_node(dec, h, l);
    }
  }
  return rebuilt.at(root.index);
}

NodeId linearize(XaddStore& store, NodeId root) {
  std::unordered_map<std::uint32_t, NodeId> memo;
  const Rational tol(1, 1000000000);
  bool changed = false;
  std::function<NodeId(NodeId)> rec = [&](NodeId n) -> NodeId {
    if (store.is_terminal(n)) return n;
    auto it = memo.find(n.index);
    if (it != memo.end()) return it->second;
    std::uint32_t dec = store.decision_of(n);
    NodeId h = rec(store.high(n));
    NodeId l = rec(store.low(n));
    Decision d = store.decision(dec);
    NodeId out;
    if (d.is_bool() || d.poly.is_linear()) {
      out = store.get_node(dec, h, l);
    } else {
      auto vars = d.poly.variables();
      if (vars.size() != 1 || d.poly.degree() != 2)
        throw XaddError("cannot linearize decision " + d.to_string(store.vars()));
      changed = true;
      VarId v = vars[0];
      Polynomial X = Polynomial::variable(v);
      Rational a = d.poly.coefficient(v, 2).constant_value();
      Rational b = d.poly.coefficient(v, 1).constant_value();
      Rational c = d.poly.coefficient(v, 0).constant_value();
      Rational disc = b * b - 4 * a * c;
      bool strict = d.strict;
      auto above = [&](const Rational& r, bool s, NodeId yes, NodeId no) {
        return store.ineq_node(X - Polynomial::constant(r), s, yes, no);
      };
      if (disc < 0) {
        out = a > 0 ? h : l;
      } else if (disc == 0) {
        Rational r = -b / (2 * a);
        if (a > 0)
          out = strict ? above(r, true, h, above(r, false, l, h)) : h;
        else
          out = strict ? l : above(r, true, l, above(r, false, h, l));
      } else {
        bool exact = true;
        Rational s = sqrt_enclosure(disc, tol * 2 * abs(a), &exact);
        if (!exact) ++store.stats().root_approximations;
        Rational r1 = (-b - s) / (2 * a), r2 = (-b + s) / (2 * a);
        if (r1 > r2) std::swap(r1, r2);
        if (a > 0) {
          // outside the roots
          NodeId below = store.ineq_node(Polynomial::constant(r1) - X, strict, h, l);
          out = above(r2, strict, h, below);
        } else {
          NodeId upper = store.ineq_node(Polynomial::constant(r2) - X, strict, h, l);
          out = above(r1, strict, upper, l);
        }
      }
    }
    memo[n.index] = out;
    return out;
  };
  NodeId r = rec(store.own(root));
  return changed ? store.reorder(r) : r;
}

}  // namespace hsdp
