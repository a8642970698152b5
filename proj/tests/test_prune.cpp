#include <random>

#include "doctest.h"
#include "hsdp/prune.hpp"
#include "support/random_xadd.hpp"

using namespace hsdp;
using oracle::frac;

namespace {

// Brute-force feasibility by vertex enumeration of {(x, t)} with t capped
// to [-1, 1]: strict rows get a - t slack, the system is feasible when some
// vertex has t > 0 (or any vertex exists when nothing is strict).
std::optional<std::vector<Rational>> solve_square(std::vector<std::vector<Rational>> m, std::vector<Rational> rhs) {
  std::size_t n = m.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && m[p][c] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(m[p], m[c]);
    std::swap(rhs[p], rhs[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0) continue;
      Rational f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
  return x;
}

bool brute_feasible(const std::vector<LinearRow>& rows, std::size_t n, const Rational& box) {
  std::size_t dim = n + 1;
  // rows as g . (x, t) + h >= 0
  std::vector<std::vector<Rational>> G;
  std::vector<Rational> H;
  bool any_strict = false;
  for (auto& r : rows) {
    auto g = r.a;
    g.push_back(r.strict ? Rational(-1) : Rational(0));
    any_strict |= r.strict;
    G.push_back(g);
    H.push_back(r.b);
  }
  for (std::size_t i = 0; i < dim; ++i) {
    Rational cap = i < n ? box : Rational(1);
    std::vector<Rational> lo(dim), hi(dim);
    lo[i] = 1;
    hi[i] = -1;
    G.push_back(lo);
    H.push_back(cap);
    G.push_back(hi);
    H.push_back(cap);
  }
  std::size_t m = G.size();
  std::vector<std::size_t> pick(dim);
  std::optional<Rational> best_t;
  std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t k, std::size_t start) {
    if (k == dim) {
      std::vector<std::vector<Rational>> A;
      std::vector<Rational> b;
      for (auto i : pick) {
        A.push_back(G[i]);
        b.push_back(-H[i]);
      }
      auto x = solve_square(A, b);
      if (!x) return;
      for (std::size_t i = 0; i < m; ++i) {
        Rational v = H[i];
        for (std::size_t j = 0; j < dim; ++j) v += G[i][j] * (*x)[j];
        if (v < 0) return;
      }
      if (!best_t || (*x)[n] > *best_t) best_t = (*x)[n];
      return;
    }
    for (std::size_t i = start; i < m; ++i) {
      pick[k] = i;
      choose(k + 1, i + 1);
    }
  };
  choose(0, 0);
  if (!best_t) return false;
  return !any_strict || *best_t > 0;
}

std::vector<LinearRow> random_rows(std::mt19937& rng, std::size_t n, int count, const Rational& box) {
  std::uniform_int_distribution<int> co(-4, 4), cons(-12, 12), st(0, 2);
  std::vector<LinearRow> rows;
  for (int i = 0; i < count; ++i) {
    LinearRow r;
    for (std::size_t j = 0; j < n; ++j) r.a.push_back(co(rng));
    r.b = cons(rng);
    r.strict = st(rng) == 0;
    rows.push_back(r);
  }
  for (std::size_t j = 0; j < n; ++j) {
    LinearRow lo, hi;
    lo.a.assign(n, 0);
    hi.a.assign(n, 0);
    lo.a[j] = 1;
    lo.b = box;
    hi.a[j] = -1;
    hi.b = box;
    rows.push_back(lo);
    rows.push_back(hi);
  }
  return rows;
}

struct Fixture {
  XaddStore s;
  VarId x, y, b;
  Fixture() {
    x = s.vars().add_state("x", false, Interval{-1000, 1000});
    y = s.vars().add_state("y", false, Interval{-1000, 1000});
    b = s.vars().add_state("b", true);
  }
  Polynomial X() const { return Polynomial::variable(x); }
  Polynomial c(long v) const { return Polynomial::constant(v); }
  std::uint32_t ineq(const Polynomial& p, bool strict = false) {
    auto n = normalize_ineq(p, strict);
    REQUIRE_FALSE(n.negated);
    return s.intern(n.decision);
  }
};

}  // namespace

TEST_CASE("property: feasibility agrees with vertex enumeration") {
  std::mt19937 rng(5);
  Rational box = 20;
  int feasible_count = 0, total = 0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 60; ++trial) {
      auto rows = random_rows(rng, n, static_cast<int>(2 + trial % 4), box);
      bool want = brute_feasible(rows, n, box);
      CHECK(fourier_motzkin_feasible(rows, n) == want);
      CHECK(simplex_feasible(rows, n) == want);
      feasible_count += want;
      ++total;
    }
  }
  // the sample must cover both outcomes
  CHECK(feasible_count > 10);
  CHECK(feasible_count < total - 10);
}

TEST_CASE("property: simplex agrees with vertex enumeration in four variables") {
  std::mt19937 rng(9);
  Rational box = 10;
  for (int trial = 0; trial < 25; ++trial) {
    auto rows = random_rows(rng, 4, 3 + trial % 3, box);
    CHECK(simplex_feasible(rows, 4) == brute_feasible(rows, 4, box));
  }
}

TEST_CASE("strictness decides touching regions") {
  // x >= 0 and -x >= 0 meet at a point; x > 0 and -x >= 0 do not
  LinearRow a{{1}, 0, false}, b{{-1}, 0, false}, a_strict{{1}, 0, true};
  CHECK(rows_feasible({a, b}, 1));
  CHECK_FALSE(rows_feasible({a_strict, b}, 1));
}

TEST_CASE("lp optimum") {
  // max x + y st x + 2y <= 4, 3x + y <= 6
  auto best = lp_maximize({{1, 2}, {3, 1}}, {4, 6}, {1, 1});
  REQUIRE(best);
  CHECK(*best == frac(14, 5));
  bool unb = false;
  lp_maximize({{1, -1}}, {1}, {1, 1}, &unb);
  CHECK(unb);
  CHECK_FALSE(lp_maximize({{1}, {-1}}, {1, -2}, {1}).has_value());
}

TEST_CASE("implication tests") {
  Fixture f;
  std::uint32_t ge_m8 = f.ineq(f.X() + f.c(8));
  std::uint32_t ge_m10 = f.ineq(f.X() + f.c(10));
  std::uint32_t ge_150 = f.ineq(f.X() - f.c(150));
  std::uint32_t ge_300 = f.ineq(f.X() - f.c(300));
  Pruner p(f.s);
  CHECK(p.test_implied({{ge_m8, true}}, ge_m10) == Implied::kTrue);
  CHECK(p.kb().contains({ge_m8, true}, {ge_m10, true}));
  // x <= 150 is the low branch of x - 150 > 0; use the non-strict decision's low branch: x < 150
  CHECK(p.test_implied({{ge_150, false}}, ge_300) == Implied::kFalse);
  CHECK(p.test_implied({{ge_m10, true}}, ge_m8) == Implied::kUnknown);
  std::uint32_t bdec = f.s.intern(Decision::boolean(f.b));
  CHECK(p.test_implied({{ge_m8, true}}, bdec) == Implied::kUnknown);
  CHECK(p.test_implied({{bdec, false}}, bdec) == Implied::kFalse);
}

TEST_CASE("nonlinear feasibility is rejected") {
  Fixture f;
  std::uint32_t q = f.ineq(f.X() * f.X() - f.c(4));
  FeasibilityChecker ch(f.s);
  CHECK_THROWS_AS(ch.feasible({{q, true}}), XaddError);
}

TEST_CASE("consistency pruning removes implied tests") {
  Fixture f;
  // x >= 5 ? (x >= 0 ? 1 : 2) : 3  -> inner test always true
  f.ineq(f.X() - f.c(5));
  NodeId inner = f.s.ineq_node(f.X(), false, f.s.constant(1), f.s.constant(2));
  NodeId g = f.s.reorder(f.s.ineq_node(f.X() - f.c(5), false, inner, f.s.constant(3)));
  Pruner p(f.s);
  NodeId r = p.prune_inconsistent(g);
  CHECK(r == f.s.ineq_node(f.X() - f.c(5), false, f.s.constant(1), f.s.constant(3)));
  CHECK(p.removed_nodes() == 1);
}

TEST_CASE("redundancy pruning uses the implication base") {
  XaddStore s;
  VarId A = s.vars().add_state("A", true);
  VarId B = s.vars().add_state("B", true);
  VarId C = s.vars().add_state("C", true);
  std::uint32_t da = s.intern(Decision::boolean(A));
  std::uint32_t dc = s.intern(Decision::boolean(C));
  NodeId one = s.constant(1), zero = s.constant(0), two = s.constant(2);
  NodeId high = s.bool_node(B, one, zero);
  NodeId low = s.bool_node(B, one, s.bool_node(C, two, zero));
  NodeId g = s.bool_node(A, high, low);
  Pruner without(s);
  CHECK(without.prune_redundant(g) == g);
  Pruner with(s);
  with.kb().add({dc, true}, {da, false});
  NodeId r = with.prune_redundant(g);
  CHECK(r == low);
  CHECK(s.decision(s.decision_of(r)).var == B);
}

TEST_CASE("epsilon mode merges nearly equal leaves") {
  Fixture f;
  NodeId g = f.s.ineq_node(f.X(), false, f.s.constant(1), f.s.constant(Rational(1) + frac(1, 10000000000)));
  Pruner p(f.s);
  CHECK(p.prune_redundant(g, RedundancyMode::kExact) == g);
  CHECK(f.s.is_terminal(p.prune_redundant(g, RedundancyMode::kEpsilon)));
}

TEST_CASE("linearize a concave quadratic test") {
  Fixture f;
  NodeId g = f.s.ineq_node(f.c(4) - f.X() * f.X(), false, f.s.constant(1), f.s.constant(0));
  NodeId r = linearize(f.s, g);
  for (auto d : f.s.decisions_in(r)) CHECK(f.s.decision(d).poly.is_linear());
  CHECK(f.s.node_count(r) == 4);
  for (long k = -12; k <= 12; ++k) {
    Assignment a;
    a.set(f.x, frac(k, 4));
    CHECK(f.s.evaluate(r, a) == f.s.evaluate(g, a));
  }
  NodeId irr = f.s.ineq_node(f.X() * f.X() - f.c(2), false, f.s.constant(1), f.s.constant(0));
  linearize(f.s, irr);
  CHECK(f.s.stats().root_approximations == 1);
  NodeId multi = f.s.ineq_node(f.X() * Polynomial::variable(f.y) - f.c(2), false, f.s.constant(1), f.s.constant(0));
  CHECK_THROWS_AS(linearize(f.s, multi), XaddError);
}

TEST_CASE("property: linearization matches the quadratic at rational points") {
  Fixture f;
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> co(-5, 5);
  for (int trial = 0; trial < 150; ++trial) {
    // (x - r1)(x - r2) * k with rational roots, plus perturbations
    Rational r1 = frac(co(rng), 2), r2 = frac(co(rng), 3);
    Rational k = co(rng);
    if (k == 0) k = 1;
    Polynomial p = Polynomial::constant(k) * (f.X() - Polynomial::constant(r1)) * (f.X() - Polynomial::constant(r2)) +
                   Polynomial::constant(trial % 3 == 0 ? frac(co(rng), 4) : Rational(0));
    if (p.degree() != 2) continue;
    NodeId g = f.s.ineq_node(p, trial % 2, f.s.constant(1), f.s.constant(0));
    NodeId r = linearize(f.s, g);
    for (int num = -48; num <= 48; ++num) {
      Assignment a;
      a.set(f.x, frac(num, 12));
      if (f.s.stats().root_approximations > 0) break;
      CHECK(f.s.evaluate(r, a) == f.s.evaluate(g, a));
    }
    f.s.stats().root_approximations = 0;
  }
}

TEST_CASE("property: pruning preserves values and leaves only feasible paths") {
  oracle::Workload w(77);
  w.store.vars().info(w.x).bounds = Interval{-10, 10};
  w.store.vars().info(w.y).bounds = Interval{-10, 10};
  Pruner p(w.store);
  int shrunk = 0;
  for (int trial = 0; trial < 120; ++trial) {
    auto item = w.base();
    NodeId g = w.store.apply(item.node, w.base().node, ApplyOp::kAdd);
    NodeId r = p.prune_inconsistent(g);
    NodeId full = p.prune_redundant(r);
    // sharing can change, but pruning only ever removes paths
    CHECK(w.store.path_count(r) <= w.store.path_count(g));
    CHECK(w.store.path_count(full) <= w.store.path_count(r));
    shrunk += w.store.path_count(r) < w.store.path_count(g);
    for (auto& path : w.store.export_paths(r)) CHECK(p.checker().feasible(path.constraints));
    for (int k = 0; k < 30; ++k) {
      auto pt = w.random_point();
      auto a = pt.to_assignment();
      auto want = w.store.evaluate(g, a);
      CHECK(w.store.evaluate(r, a) == want);
      CHECK(w.store.evaluate(full, a) == want);
    }
  }
  CHECK(shrunk > 10);
}
