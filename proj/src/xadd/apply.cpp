#include <algorithm>
#include <unordered_map>

#include "hsdp/xadd.hpp"

namespace hsdp {

bool XaddStore::is_plain_zero(std::uint32_t n) const {
  const Node& node = nodes_[n];
  if (node.dec != kNone) return false;
  const TerminalData& t = terminals_[node.term];
  return t.term.is_finite() && t.term.poly.is_zero() && t.annotation.empty();
}

bool XaddStore::is_plain_one(std::uint32_t n) const {
  const Node& node = nodes_[n];
  if (node.dec != kNone) return false;
  const TerminalData& t = terminals_[node.term];
  return t.term.is_finite() && t.term.poly.is_constant() && t.term.poly.constant_value() == 1 &&
         t.annotation.empty();
}

std::optional<std::uint32_t> XaddStore::shortcut(std::uint32_t a, std::uint32_t b, Op op) {
  const Node& na = nodes_[a];
  const Node& nb = nodes_[b];
  bool ta = na.dec == kNone, tb = nb.dec == kNone;
  auto kind_of = [&](const Node& n) { return terminals_[n.term].term.kind; };
  switch (op) {
    case Op::kMaskSum:
      if (is_plain_zero(b)) return a;
      if (is_plain_zero(a)) return b;
      break;
    case Op::kAdd:
      if (is_plain_zero(b)) return a;
      if (is_plain_zero(a)) return b;
      if (tb && kind_of(nb) == TermKind::kPosInf && !(na.inf_mask & 1)) return b;
      if (tb && kind_of(nb) == TermKind::kNegInf && !(na.inf_mask & 2)) return b;
      if (ta && kind_of(na) == TermKind::kPosInf && !(nb.inf_mask & 1)) return a;
      if (ta && kind_of(na) == TermKind::kNegInf && !(nb.inf_mask & 2)) return a;
      break;
    case Op::kSub:
      if (is_plain_zero(b)) return a;
      break;
    case Op::kMul:
      if (is_plain_one(b)) return a;
      if (is_plain_one(a)) return b;
      if (is_plain_zero(b) && na.inf_mask == 0) return b;
      if (is_plain_zero(a) && nb.inf_mask == 0) return a;
      break;
    case Op::kMaskProd:
      if (is_plain_one(b)) return a;
      if (is_plain_zero(b)) return b;
      break;
    case Op::kProbProd:
      if (is_plain_one(b)) return a;
      if (is_plain_zero(b)) return b;
      break;
    case Op::kMax:
      if (tb && kind_of(nb) == TermKind::kNegInf) return a;
      if (ta && kind_of(na) == TermKind::kNegInf) return b;
      if (tb && kind_of(nb) == TermKind::kPosInf) return b;
      if (ta && kind_of(na) == TermKind::kPosInf) return a;
      break;
    case Op::kMin:
      if (tb && kind_of(nb) == TermKind::kPosInf) return a;
      if (ta && kind_of(na) == TermKind::kPosInf) return b;
      if (tb && kind_of(nb) == TermKind::kNegInf) return b;
      if (ta && kind_of(na) == TermKind::kNegInf) return a;
      break;
  }
  return std::nullopt;
}

std::uint32_t XaddStore::compare_leaves(std::uint32_t a, std::uint32_t b, bool take_max) {
  const Polynomial& p = terminals_[nodes_[a].term].term.poly;
  const Polynomial& q = terminals_[nodes_[b].term].term.poly;
  // max: (p - q >= 0) ? a : b; min: (q - p >= 0) ? a : b. Ties go to a.
  Polynomial d = take_max ? p - q : q - p;
  NormalizedIneq n = normalize_ineq(d, false);
  if (n.constant) return *n.constant ? a : b;
  std::uint32_t dec = intern(n.decision);
  return n.negated ? node_raw(dec, b, a) : node_raw(dec, a, b);
}

std::uint32_t XaddStore::terminal_op(std::uint32_t a, std::uint32_t b, Op op) {
  const TerminalData& da = terminals_[nodes_[a].term];
  const TerminalData& db = terminals_[nodes_[b].term];
  const ExtendedTerm& x = da.term;
  const ExtendedTerm& y = db.term;
  bool fx = x.is_finite(), fy = y.is_finite();
  switch (op) {
    case Op::kMax:
    case Op::kMin:
      if (fx && fy) return compare_leaves(a, b, op == Op::kMax);
      break;  // infinities handled by shortcut
    case Op::kMaskProd:
    case Op::kProbProd: {
      if (!fy) throw XaddError("probability leaf is infinite");
      if (y.poly.is_zero()) return term_node(ExtendedTerm::finite({}), {});
      if (!fx) {
        if (y.poly.is_constant() && y.poly.constant_value() < 0) throw XaddError("negative probability");
        return term_node(x, {});
      }
      if (op == Op::kMaskProd) return term_node(ExtendedTerm::finite(x.poly * y.poly), da.annotation);
      return term_node(ExtendedTerm::finite(x.poly * y.poly), {});
    }
    case Op::kMaskSum:
    case Op::kAdd:
      if (op == Op::kMaskSum) {
        if (is_plain_zero(b)) return a;
        if (is_plain_zero(a)) return b;
      }
      if (fx && fy) return term_node(ExtendedTerm::finite(x.poly + y.poly), {});
      if (!fx && !fy && x.kind != y.kind) throw XaddError("undefined sum of opposite infinities");
      return term_node(fx ? y : x, {});
    case Op::kSub:
      if (fx && fy) return term_node(ExtendedTerm::finite(x.poly - y.poly), {});
      if (!fx && !fy && x.kind == y.kind) throw XaddError("undefined difference of equal infinities");
      if (!fx) return term_node(x, {});
      return term_node(y.kind == TermKind::kPosInf ? ExtendedTerm::neg_inf() : ExtendedTerm::pos_inf(), {});
    case Op::kMul: {
      if (fx && fy) return term_node(ExtendedTerm::finite(x.poly * y.poly), {});
      auto sign_of = [](const ExtendedTerm& t) -> int {
        if (t.kind == TermKind::kPosInf) return 1;
        if (t.kind == TermKind::kNegInf) return -1;
        if (!t.poly.is_constant()) throw XaddError("product of infinity and a non-constant polynomial");
        Rational c = t.poly.constant_value();
        if (c == 0) throw XaddError("product of zero and infinity");
        return c > 0 ? 1 : -1;
      };
      int s = sign_of(x) * sign_of(y);
      return term_node(s > 0 ? ExtendedTerm::pos_inf() : ExtendedTerm::neg_inf(), {});
    }
  }
  throw XaddError("unhandled terminal operation");
}

std::uint32_t XaddStore::apply_rec(std::uint32_t a, std::uint32_t b, Op op) {
  if (auto s = shortcut(a, b, op)) return *s;
  if ((op == Op::kAdd || op == Op::kMul) && a > b) std::swap(a, b);
  auto key = std::make_tuple(a, b, static_cast<std::uint32_t>(op));
  auto it = apply_cache_.find(key);
  if (it != apply_cache_.end()) return it->second;
  Node na = nodes_[a];
  Node nb = nodes_[b];
  std::uint32_t result;
  if (na.dec == kNone && nb.dec == kNone) {
    result = terminal_op(a, b, op);
  } else {
    std::uint32_t dec = na.top_key <= nb.top_key ? na.dec : nb.dec;
    std::uint32_t ah = a, al = a, bh = b, bl = b;
    if (na.dec == dec) {
      ah = na.high;
      al = na.low;
    }
    if (nb.dec == dec) {
      bh = nb.high;
      bl = nb.low;
    }
    std::uint32_t h = apply_rec(ah, bh, op);
    std::uint32_t l = apply_rec(al, bl, op);
    result = node_raw(dec, h, l);
  }
  apply_cache_[key] = result;
  return result;
}

std::uint32_t XaddStore::apply_top(std::uint32_t a, std::uint32_t b, Op op) {
  std::uint32_t r = apply_rec(a, b, op);
  if (!nodes_[r].ordered) r = reorder_rec(r);
  return r;
}

NodeId XaddStore::apply(NodeId f, NodeId g, ApplyOp op) {
  std::uint32_t a = idx(f), b = idx(g);
  if (!nodes_[a].ordered) a = reorder_rec(a);
  if (!nodes_[b].ordered) b = reorder_rec(b);
  Op o = op == ApplyOp::kAdd   ? Op::kAdd
         : op == ApplyOp::kSub ? Op::kSub
         : op == ApplyOp::kMul ? Op::kMul
         : op == ApplyOp::kMax ? Op::kMax
                               : Op::kMin;
  return wrap(apply_top(a, b, o));
}

NodeId XaddStore::prob_product(NodeId f, NodeId prob) {
  std::uint32_t a = idx(f), b = idx(prob);
  if (!nodes_[a].ordered) a = reorder_rec(a);
  if (!nodes_[b].ordered) b = reorder_rec(b);
  return wrap(apply_top(a, b, Op::kProbProd));
}

// F_h * I[d] + F_l * I[not d], with the indicator products masking rather
// than multiplying so that infinite leaves and annotations survive.
std::uint32_t XaddStore::reorder_rec(std::uint32_t n) {
  if (nodes_[n].ordered) return n;
  auto it = reorder_cache_.find(n);
  if (it != reorder_cache_.end()) return it->second;
  Node node = nodes_[n];
  std::uint32_t h = reorder_rec(node.high);
  std::uint32_t l = reorder_rec(node.low);
  std::uint32_t one = term_node(ExtendedTerm::finite(Polynomial::constant(1)), {});
  std::uint32_t zero = term_node(ExtendedTerm::finite({}), {});
  std::uint32_t ind = node_raw(node.dec, one, zero);
  std::uint32_t not_ind = node_raw(node.dec, zero, one);
  std::uint32_t th = apply_rec(h, ind, Op::kMaskProd);
  std::uint32_t tl = apply_rec(l, not_ind, Op::kMaskProd);
  std::uint32_t r = apply_rec(th, tl, Op::kMaskSum);
  reorder_cache_[n] = r;
  return r;
}

NodeId XaddStore::reorder(NodeId f) { return wrap(reorder_rec(idx(f))); }

NodeId XaddStore::scale(NodeId f, const Rational& c) {
  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::uint32_t {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Node node = nodes_[n];
    std::uint32_t r;
    if (node.dec == kNone) {
      TerminalData t = terminals_[node.term];
      if (t.term.is_finite()) {
        r = term_node(ExtendedTerm::finite(c * t.term.poly), t.annotation);
      } else {
        if (c == 0) throw XaddError("scaling an infinite leaf by zero");
        bool pos = (t.term.kind == TermKind::kPosInf) == (c > 0);
        r = term_node(pos ? ExtendedTerm::pos_inf() : ExtendedTerm::neg_inf(), t.annotation);
      }
    } else {
      r = node_raw(node.dec, rec(node.high), rec(node.low));
    }
    memo[n] = r;
    return r;
  };
  return wrap(rec(idx(f)));
}

NodeId XaddStore::restrict(NodeId f, VarId b, bool value) {
  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::uint32_t {
    Node node = nodes_[n];
    if (node.dec == kNone) return n;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const Decision& d = decisions_[node.dec];
    std::uint32_t r;
    if (d.is_bool() && d.var == b)
      r = rec(value ? node.high : node.low);
    else
      r = node_raw(node.dec, rec(node.high), rec(node.low));
    memo[n] = r;
    return r;
  };
  return wrap(rec(idx(f)));
}

NodeId XaddStore::marginalize_bool(NodeId f, VarId b) {
  return apply(restrict(f, b, true), restrict(f, b, false), ApplyOp::kAdd);
}

NodeId XaddStore::map_leaves(NodeId f, const std::function<NodeId(NodeId)>& fn) {
  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::uint32_t {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Node node = nodes_[n];
    std::uint32_t r;
    if (node.dec == kNone)
      r = idx(fn(wrap(n)));
    else
      r = node_raw(node.dec, rec(node.high), rec(node.low));
    memo[n] = r;
    return r;
  };
  std::uint32_t r = rec(idx(f));
  return wrap(reorder_rec(r));
}

NodeId XaddStore::strip_annotations(NodeId f) {
  return map_leaves(f, [&](NodeId leaf) {
    if (annotation(leaf).empty()) return leaf;
    return terminal(term(leaf));
  });
}

NodeId XaddStore::substitute(NodeId f, const Substitution& sigma) {
  for (auto& [lhs, rhs] : sigma.reals)
    for (auto& [other, unused] : sigma.reals)
      if (rhs.mentions(other)) throw ExprError("substitution right-hand side mentions a substituted variable");
  auto sub_term = [&](const TerminalData& t) -> std::uint32_t {
    ExtendedTerm out = t.term;
    if (out.is_finite()) out.poly = poly_substitute(out.poly, sigma.reals);
    Annotation a = t.annotation;
    for (auto& [v, n] : a.params) {
      const TerminalData& inner = terminals_[nodes_[idx(n)].term];
      ExtendedTerm e = inner.term;
      if (e.is_finite()) e.poly = poly_substitute(e.poly, sigma.reals);
      n = wrap(term_node(std::move(e), {}));
    }
    return term_node(std::move(out), std::move(a));
  };
  // Intern the images in the original decision order first. The recursion
  // below would otherwise register them bottom-up, reversing the order, and
  // the final reorder would have to rebuild the whole diagram.
  std::vector<std::uint32_t> decs;
  for (NodeId n : reachable(f))
    if (nodes_[idx(n)].dec != kNone) decs.push_back(nodes_[idx(n)].dec);
  std::sort(decs.begin(), decs.end(), [&](auto a, auto b) { return order_key(a) < order_key(b); });
  decs.erase(std::unique(decs.begin(), decs.end()), decs.end());
  for (std::uint32_t id : decs) {
    Decision d = decisions_[id];
    if (d.is_bool()) {
      auto b = sigma.bools.find(d.var);
      if (b != sigma.bools.end()) intern(Decision::boolean(b->second));
    } else {
      NormalizedIneq ni = normalize_ineq(poly_substitute(d.poly, sigma.reals), d.strict);
      if (!ni.constant) intern(ni.decision);
    }
  }
  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::uint32_t {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    Node node = nodes_[n];
    std::uint32_t r;
    if (node.dec == kNone) {
      TerminalData t = terminals_[node.term];
      r = sub_term(t);
    } else {
      Decision d = decisions_[node.dec];
      std::uint32_t h = rec(node.high);
      std::uint32_t l = rec(node.low);
      if (d.is_bool()) {
        auto b = sigma.bools.find(d.var);
        std::uint32_t dec = b == sigma.bools.end() ? node.dec : intern(Decision::boolean(b->second));
        r = node_raw(dec, h, l);
      } else {
        NormalizedIneq ni = normalize_ineq(poly_substitute(d.poly, sigma.reals), d.strict);
        if (ni.constant) {
          r = *ni.constant ? h : l;
        } else {
          std::uint32_t dec = intern(ni.decision);
          r = ni.negated ? node_raw(dec, l, h) : node_raw(dec, h, l);
        }
      }
    }
    memo[n] = r;
    return r;
  };
  std::uint32_t r = rec(idx(f));
  return wrap(reorder_rec(r));
}

}  // namespace hsdp
