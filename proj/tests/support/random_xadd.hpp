#pragma once
// Random diagram workload checked against a direct interpreter of the
// operation tree. The interpreter never touches the store: it evaluates
// base decision trees and combines point values.

#include <functional>
#include <memory>
#include <random>
#include <string>

#include "hsdp/xadd.hpp"

namespace oracle {

using namespace hsdp;

inline Rational frac(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

inline ExtendedValue ev_add(const ExtendedValue& a, const ExtendedValue& b) {
  if (a.is_finite() && b.is_finite()) return ExtendedValue::finite(a.value + b.value);
  if (!a.is_finite() && !b.is_finite() && a.kind != b.kind) throw std::runtime_error("inf - inf");
  return a.is_finite() ? b : a;
}

inline ExtendedValue ev_neg(const ExtendedValue& a) {
  if (a.kind == TermKind::kNegInf) return ExtendedValue::pos_inf();
  if (a.kind == TermKind::kPosInf) return ExtendedValue::neg_inf();
  return ExtendedValue::finite(-a.value);
}

inline ExtendedValue ev_mul(const ExtendedValue& a, const ExtendedValue& b) {
  if (a.is_finite() && b.is_finite()) return ExtendedValue::finite(a.value * b.value);
  auto sign = [](const ExtendedValue& v) {
    if (v.kind == TermKind::kPosInf) return 1;
    if (v.kind == TermKind::kNegInf) return -1;
    if (v.value == 0) throw std::runtime_error("0 * inf");
    return v.value > 0 ? 1 : -1;
  };
  return sign(a) * sign(b) > 0 ? ExtendedValue::pos_inf() : ExtendedValue::neg_inf();
}

struct Point {
  std::map<std::uint32_t, Rational> reals;
  std::map<std::uint32_t, bool> bools;
  Assignment to_assignment() const {
    Assignment a;
    for (auto& [k, v] : reals) a.reals[k] = v;
    for (auto& [k, v] : bools) a.bools[k] = v;
    return a;
  }
};

// Independent decision tree used as a base function.
struct Tree {
  bool leaf = true;
  ExtendedTerm value;
  bool is_bool = false;
  VarId var{};
  Polynomial ineq;  // test ineq >= 0 (or > 0), not normalized
  bool strict = false;
  std::shared_ptr<Tree> hi, lo;

  ExtendedValue eval(const Point& p) const {
    if (leaf) {
      if (value.kind == TermKind::kNegInf) return ExtendedValue::neg_inf();
      if (value.kind == TermKind::kPosInf) return ExtendedValue::pos_inf();
      RealAssignment r(p.reals.begin(), p.reals.end());
      return ExtendedValue::finite(poly_eval(value.poly, r));
    }
    bool h;
    if (is_bool) {
      h = p.bools.at(var.index);
    } else {
      RealAssignment r(p.reals.begin(), p.reals.end());
      Rational v = poly_eval(ineq, r);
      h = strict ? v > 0 : v >= 0;
    }
    return h ? hi->eval(p) : lo->eval(p);
  }

  NodeId build(XaddStore& s) const {
    if (leaf) return s.terminal(value);
    NodeId h = hi->build(s), l = lo->build(s);
    NodeId n = is_bool ? s.bool_node(var, h, l) : s.ineq_node(ineq, strict, h, l);
    return s.reorder(n);
  }
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum Kind { kBase, kApply, kScale, kSubst, kRename, kRestrict, kMarginal, kIte } kind = kBase;
  std::shared_ptr<Tree> tree;
  ApplyOp op = ApplyOp::kAdd;
  ExprPtr a, b;
  Rational c;
  VarId v{}, w{};
  Polynomial rhs;
  bool flag = false;
  std::shared_ptr<Tree> cond;  // single-decision condition for ite
  std::size_t cost = 1;

  ExtendedValue eval(const Point& p) const {
    switch (kind) {
      case kBase: return tree->eval(p);
      case kApply: {
        ExtendedValue x = a->eval(p), y = b->eval(p);
        switch (op) {
          case ApplyOp::kAdd: return ev_add(x, y);
          case ApplyOp::kSub: return ev_add(x, ev_neg(y));
          case ApplyOp::kMul: return ev_mul(x, y);
          case ApplyOp::kMax: return y < x ? x : (x < y ? y : x);
          case ApplyOp::kMin: return x < y ? x : (y < x ? y : x);
        }
        break;
      }
      case kScale: {
        ExtendedValue x = a->eval(p);
        return ev_mul(x, ExtendedValue::finite(c));
      }
      case kSubst: {
        Point q = p;
        RealAssignment r(p.reals.begin(), p.reals.end());
        q.reals[v.index] = poly_eval(rhs, r);
        return a->eval(q);
      }
      case kRename: {
        Point q = p;
        q.bools[v.index] = p.bools.at(w.index);
        return a->eval(q);
      }
      case kRestrict: {
        Point q = p;
        q.bools[v.index] = flag;
        return a->eval(q);
      }
      case kMarginal: {
        Point q = p, r = p;
        q.bools[v.index] = true;
        r.bools[v.index] = false;
        return ev_add(a->eval(q), a->eval(r));
      }
      case kIte: return cond->eval(p).value == 1 ? a->eval(p) : b->eval(p);
    }
    throw std::logic_error("bad expr");
  }
};

struct Workload {
  XaddStore store;
  VarId x, y, b1, b2;
  std::mt19937_64 rng;

  explicit Workload(std::uint64_t seed) : rng(seed) {
    x = store.vars().add_state("x", false);
    y = store.vars().add_state("y", false);
    b1 = store.vars().add_state("b1", true);
    b2 = store.vars().add_state("b2", true);
  }

  int uni(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  Polynomial random_linear() {
    Polynomial p = Polynomial::constant(frac(uni(-12, 12), uni(1, 3)));
    if (uni(0, 3)) p = p + Polynomial::constant(frac(uni(-4, 4), uni(1, 2))) * Polynomial::variable(x);
    if (uni(0, 2)) p = p + Polynomial::constant(frac(uni(-4, 4), 1)) * Polynomial::variable(y);
    return p;
  }

  ExtendedTerm random_leaf(bool allow_inf) {
    if (allow_inf && uni(0, 9) == 0) return ExtendedTerm::neg_inf();
    Polynomial p = random_linear();
    if (uni(0, 4) == 0) p = p + Polynomial::variable(x) * Polynomial::variable(y);
    return ExtendedTerm::finite(p);
  }

  std::shared_ptr<Tree> random_tree(int depth, bool allow_inf) {
    auto t = std::make_shared<Tree>();
    if (depth == 0 || uni(0, 3) == 0) {
      t->value = random_leaf(allow_inf);
      return t;
    }
    t->leaf = false;
    if (uni(0, 2) == 0) {
      t->is_bool = true;
      t->var = uni(0, 1) ? b1 : b2;
    } else {
      do t->ineq = random_linear();
      while (t->ineq.is_constant());
      t->strict = uni(0, 1);
    }
    t->hi = random_tree(depth - 1, allow_inf);
    t->lo = random_tree(depth - 1, allow_inf);
    return t;
  }

  Point random_point() {
    Point p;
    // quarter-integers hit decision boundaries often, which exercises strictness
    p.reals[x.index] = frac(uni(-40, 40), 4);
    p.reals[y.index] = frac(uni(-40, 40), 4);
    p.bools[b1.index] = uni(0, 1);
    p.bools[b2.index] = uni(0, 1);
    return p;
  }

  struct Item {
    ExprPtr expr;
    NodeId node;
  };

  Item base() {
    auto e = std::make_shared<Expr>();
    e->tree = random_tree(3, uni(0, 1));
    return {e, e->tree->build(store)};
  }

  // Structural invariants: ordered, no redundant tests, hash-consed.
  std::string check_invariants(NodeId root) {
    if (!store.is_ordered(root)) return "unordered result";
    for (NodeId n : store.reachable(root)) {
      if (store.is_terminal(n)) continue;
      if (store.high(n) == store.low(n)) return "redundant test";
      if (store.get_node(store.decision_of(n), store.high(n), store.low(n)) != n) return "not hash-consed";
    }
    return {};
  }

  // One random operation over the pool. Returns an error message or empty.
  std::string step(std::vector<Item>& pool, int points) {
    Item& f = pool[uni(0, static_cast<int>(pool.size()) - 1)];
    Item& g = pool[uni(0, static_cast<int>(pool.size()) - 1)];
    auto e = std::make_shared<Expr>();
    NodeId out;
    int kind = uni(0, 9);
    if (kind <= 4) {
      e->kind = Expr::kApply;
      ApplyOp ops[] = {ApplyOp::kAdd, ApplyOp::kSub, ApplyOp::kMul, ApplyOp::kMax, ApplyOp::kMin};
      e->op = ops[uni(0, 4)];
      bool inf = store.has_infinity(f.node) || store.has_infinity(g.node);
      if (inf && (e->op == ApplyOp::kSub || e->op == ApplyOp::kMul)) e->op = ApplyOp::kMax;
      if (e->op == ApplyOp::kMul && (f.expr->cost > 8 || g.expr->cost > 8)) e->op = ApplyOp::kAdd;
      e->a = f.expr;
      e->b = g.expr;
      out = store.apply(f.node, g.node, e->op);
    } else if (kind == 5) {
      e->kind = Expr::kScale;
      e->a = f.expr;
      // a negative factor would turn -inf into +inf, which later sums cannot absorb
      bool neg = !store.has_infinity(f.node) && uni(0, 1);
      e->c = frac(uni(1, 5) * (neg ? -1 : 1), uni(1, 3));
      out = store.scale(f.node, e->c);
    } else if (kind == 6) {
      e->kind = Expr::kSubst;
      e->a = f.expr;
      e->v = uni(0, 1) ? x : y;
      VarId other = e->v == x ? y : x;
      e->rhs = Polynomial::constant(frac(uni(-5, 5), 1)) +
               Polynomial::constant(frac(uni(-2, 2), uni(1, 2))) * Polynomial::variable(other);
      Substitution s;
      s.reals[e->v] = e->rhs;
      out = store.substitute(f.node, s);
    } else if (kind == 7) {
      e->kind = uni(0, 1) ? Expr::kRename : Expr::kRestrict;
      e->a = f.expr;
      e->v = uni(0, 1) ? b1 : b2;
      e->w = e->v == b1 ? b2 : b1;
      e->flag = uni(0, 1);
      if (e->kind == Expr::kRename) {
        Substitution s;
        s.bools[e->v] = e->w;
        out = store.substitute(f.node, s);
      } else {
        out = store.restrict(f.node, e->v, e->flag);
      }
    } else if (kind == 8) {
      e->kind = Expr::kMarginal;
      e->a = f.expr;
      e->v = uni(0, 1) ? b1 : b2;
      bool inf = store.has_infinity(f.node);
      if (inf) {
        e->kind = Expr::kRestrict;
        e->flag = true;
        out = store.restrict(f.node, e->v, true);
      } else {
        out = store.marginalize_bool(f.node, e->v);
      }
    } else {
      // ite on a fresh decision placed above existing ones, which forces a reorder
      e->kind = Expr::kIte;
      e->a = f.expr;
      e->b = g.expr;
      auto c = std::make_shared<Tree>();
      c->leaf = false;
      do c->ineq = random_linear();
      while (c->ineq.is_constant());
      c->strict = uni(0, 1);
      c->hi = std::make_shared<Tree>();
      c->hi->value = ExtendedTerm::finite(Polynomial::constant(1));
      c->lo = std::make_shared<Tree>();
      c->lo->value = ExtendedTerm::finite(Polynomial::constant(0));
      e->cond = c;
      out = store.reorder(store.ineq_node(c->ineq, c->strict, f.node, g.node));
    }
    e->cost = 1 + (e->a ? e->a->cost : 0) + (e->b ? e->b->cost : 0);
    std::string err = check_invariants(out);
    if (!err.empty()) return err;
    for (int k = 0; k < points; ++k) {
      Point p = random_point();
      ExtendedValue want = e->eval(p);
      ExtendedValue got = store.evaluate(out, p.to_assignment());
      if (!(want == got)) return "value mismatch: want " + want.to_string() + " got " + got.to_string();
    }
    Item next{e, out};
    bool keep = e->cost < 40 && store.node_count(out) < 150;
    Item& slot = pool[uni(0, static_cast<int>(pool.size()) - 1)];
    slot = keep ? next : base();
    return {};
  }
};

}  // namespace oracle
