// End-to-end checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "hsdp/sdp.hpp"
#include "support/oracle_vi.hpp"
#include "support/random_xadd.hpp"

using namespace hsdp;
using oracle::frac;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string str(const ExtendedValue& v) { return v.to_string(); }

Assignment at(const XaddStore& s, std::initializer_list<std::pair<const char*, Rational>> reals,
              std::initializer_list<std::pair<const char*, bool>> bools = {}) {
  Assignment a;
  for (auto& [n, v] : reals) a.set(s.vars().at(n), v);
  for (auto& [n, v] : bools) a.set(s.vars().at(n), v);
  return a;
}

Rational caic_v2(bool d, const Rational& x) {
  if (d) {
    if (x >= 300) return Rational(Rational(555, 2) - frac(1, 10) * x);
    if (x >= 150) return Rational(Rational(465, 2) + frac(1, 20) * x);
    return Rational(Rational(165, 2) + frac(21, 20) * x);
  }
  if (x >= 200) return Rational(Rational(265, 2) - frac(1, 10) * x);
  if (x >= 50) return Rational(Rational(205, 2) + frac(1, 20) * x);
  return Rational(Rational(105, 2) + frac(21, 20) * x);
}

// 1. closed form of V^2 on x in {0, 5, ..., 500}
std::string caic_closed_form() {
  HmdpModel m = builtin_domain("caic1");
  SolveResult r = value_iteration(m);
  expect(!r.aborted && r.solved_horizon() == 2, "solve did not reach h = 2");
  const XaddStore& s = *r.store;
  int n = 0;
  for (int x = 0; x <= 500; x += 5)
    for (bool d : {true, false}) {
      ExtendedValue v = s.evaluate(r.value[2], at(s, {{"x", x}}, {{"d", d}}));
      expect(v.is_finite() && v.value == caic_v2(d, x),
             "x=" + std::to_string(x) + " d=" + std::to_string(d) + ": got " + str(v));
      ++n;
    }
  return std::to_string(n) + " points exact";
}

// 2. (S, s) policy: order up to 300 under high demand, up to 200 otherwise
std::string scarf_policy() {
  HmdpModel m = builtin_domain("caic1");
  SolveResult r = value_iteration(m);
  const XaddStore& s = *r.store;
  VarId a = s.vars().at("a");
  Polynomial X = Polynomial::variable(s.vars().at("x"));
  int n = 0;
  for (int x = 0; x < 500; x += 20)
    for (bool d : {true, false}) {
      Assignment st = at(s, {{"x", x}}, {{"d", d}});
      PolicyChoice pc = extract_policy(r, 2, st);
      int S = d ? 300 : 200;
      Rational want = x <= S ? S - x : 0;
      expect(pc.action == "order" && pc.params.size() == 1 && pc.params[0].second == want,
             "x=" + std::to_string(x) + " d=" + std::to_string(d));
      // below the threshold the annotation is the expression S - x itself
      if (x < S) {
        const Annotation& ann = s.annotation(s.leaf_at(r.policy[2], st));
        expect(ann.params.size() == 1 && ann.params[0].first == a, "missing annotation");
        const ExtendedTerm& t = s.term(ann.params[0].second);
        expect(t.is_finite() && t.poly == Polynomial::constant(S) - X,
               "annotation is " + t.to_string(s.vars()));
      }
      ++n;
    }
  return std::to_string(n) + " probes";
}

// 3. the worked regression and maximization
std::string worked_trace() {
  HmdpModel m = builtin_domain("caic1");
  Solver sv(m);
  XaddStore& s = sv.store();
  const ActionSchema& act = m.actions[0];
  NodeId q = sv.regress(s.zero(), act);
  for (int x = 0; x <= 500; x += 10)
    for (int a = 0; a <= 800; a += 10)
      for (bool d : {true, false}) {
        ExtendedValue got = s.evaluate(q, at(s, {{"x", x}, {"a", a}}, {{"d", d}}));
        int lo = d ? 150 : 50, dem = d ? 150 : 50;
        if (x + a < lo || x + a > lo + 500) {
          expect(got.kind == TermKind::kNegInf, "Q should be -inf at x+a=" + std::to_string(x + a));
          continue;
        }
        Rational want = Rational(std::min(x, dem)) - frac(1, 10) * a - frac(1, 20) * x;
        expect(got.is_finite() && got.value == want, "Q at x=" + std::to_string(x) + " a=" + std::to_string(a));
      }
  NodeId v = sv.continuous_max(q, act.params[0].var, act.params[0].bounds);
  double drift = 0;
  for (int x = 0; x <= 500; x += 5)
    for (bool d : {true, false}) {
      Rational X = x;
      Rational want = d ? (x >= 150 ? Rational(150 - frac(1, 20) * X) : Rational(-15 + frac(21, 20) * X))
                        : (x >= 50 ? Rational(50 - frac(1, 20) * X) : Rational(-5 + frac(21, 20) * X));
      ExtendedValue got = s.evaluate(v, at(s, {{"x", x}}, {{"d", d}}));
      expect(got.is_finite() && got.value == want, "max Q at x=" + std::to_string(x));
      if (d && x <= 150) drift = std::max(drift, std::abs(got.to_double() - (-14.99925 + 1.05 * x)));
    }
  // the x <= 150 piece before the x >= 150 guard: 135 + 0.05x, or 135.00075 + 0.05x in float
  for (int x = 0; x <= 150; x += 10) {
    double exact = 150 - 0.1 * (150 - x) - 0.05 * x;
    drift = std::max(drift, std::abs(exact - (135.00075 + 0.05 * x)));
  }
  expect(drift < 1e-3, "float constants off by " + std::to_string(drift));
  std::ostringstream os;
  os << "four exact pieces, float drift " << drift;
  return os.str();
}

// Support of x -> V(x, b = false) on [-30, 30] at step 0.25.
std::pair<double, double> support(const SolveResult& r, int h) {
  const XaddStore& s = *r.store;
  double lo = 1e9, hi = -1e9;
  for (int k = -120; k <= 120; ++k) {
    ExtendedValue v = s.evaluate(r.value[h], at(s, {{"x", frac(k, 4)}}, {{"b", false}}));
    if (v.is_finite() && v.value != 0) {
      lo = std::min(lo, k / 4.0);
      hi = std::max(hi, k / 4.0);
    }
  }
  return {lo, hi};
}

// 4. support of the rover value grows to +-12, then +-22
std::string rover_support() {
  SolveOptions opt;
  opt.v0_reward = true;
  SolveResult r = value_iteration(builtin_domain("rover"), opt);
  expect(r.solved_horizon() == 2, "rover did not reach h = 2");
  std::ostringstream os;
  for (int h : {1, 2}) {
    double edge = h == 1 ? 12 : 22;
    auto [lo, hi] = support(r, h);
    expect(hi <= edge && hi >= edge - 0.25 && lo >= -edge && lo <= -edge + 0.25,
           "h=" + std::to_string(h) + " support [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    os << "V" << h << " nonzero on [" << lo << ", " << hi << "] ";
  }
  return os.str();
}

// 5. no pruning blows the budget, consistency pruning finishes, both agree
std::string pruning_necessity() {
  HmdpModel m = builtin_domain("rover");
  SolveOptions none;
  none.v0_reward = true;
  none.prune = PruneMode::kNone;
  none.horizon = 5;
  SolveResult a = value_iteration(m, none);
  expect(a.aborted, "unpruned run finished H=5 within the budget");
  SolveOptions cons;
  cons.v0_reward = true;
  cons.horizon = 6;
  SolveResult b = value_iteration(m, cons);
  expect(!b.aborted && (b.solved_horizon() == 6 || b.converged), "pruned run did not complete H=6");
  int common = std::min(a.solved_horizon(), b.solved_horizon());
  for (int h = 0; h <= common; ++h)
    for (int k = -400; k <= 400; ++k)
      for (bool bv : {true, false}) {
        ExtendedValue u = a.store->evaluate(a.value[h], at(*a.store, {{"x", frac(k, 4)}}, {{"b", bv}}));
        ExtendedValue v = b.store->evaluate(b.value[h], at(*b.store, {{"x", frac(k, 4)}}, {{"b", bv}}));
        expect(u.kind == v.kind && (!u.is_finite() || std::abs(Rational(u.value - v.value).get_d()) <= 1e-9),
               "h=" + std::to_string(h) + " x=" + std::to_string(k / 4.0));
      }
  std::ostringstream os;
  os << "unpruned " << a.abort_reason << "; pruned H=6 V nodes " << b.stats.back().v_nodes
     << "; agree on h <= " << common;
  return os.str();
}

// 6. brute-force numeric value iteration against the symbolic values
struct OracleRun {
  std::string name;
  HmdpModel model;
  SolveOptions opt;
  std::map<std::string, std::pair<double, double>> ranges;
  double lipschitz;  // bound on |dQ/dy| per stage, by inspection of the model
  std::vector<oracle::State> grid;
  std::function<oracle::State(std::mt19937&)> random_point;
};

Assignment to_assignment(const SolveResult& r, const oracle::State& st) {
  Assignment a;
  for (std::size_t i = 0; i < r.model.cont_vars.size(); ++i) {
    Rational x(st.x[i]);
    a.set(r.model.cont_vars[i], x);
  }
  for (std::size_t i = 0; i < r.model.bool_vars.size(); ++i) a.set(r.model.bool_vars[i], st.b[i] != 0);
  return a;
}

ExtendedValue sym_value(const SolveResult& r, int h, const oracle::State& st) {
  return r.store->evaluate(r.value[h], to_assignment(r, st));
}

// True when the optimal parameters along every branch of the symbolic policy
// lie on the 0.01 grid, so a locally refined oracle can attain the optimum.
bool refinable(const SolveResult& r, int h, const Assignment& st) {
  if (h == 0) return true;
  PolicyChoice pc = extract_policy(r, h, st);
  if (pc.action.empty()) return true;
  const XaddStore& s = *r.store;
  Assignment full = st;
  for (auto& [name, v] : pc.params) {
    Rational k = v * 100;
    if (k.get_den() != 1) return false;
    full.set(s.vars().at(name), v);
  }
  const ActionSchema* act = nullptr;
  for (const ActionSchema& a : r.model.actions)
    if (a.name == pc.action) act = &a;
  Assignment next;
  for (VarId x : r.model.cont_vars) {
    ExtendedValue v = s.evaluate(act->cont_transitions.at(s.vars().primed(x)), full);
    if (!v.is_finite()) return false;
    next.set(x, v.value);
  }
  std::size_t nb = r.model.bool_vars.size();
  for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
    for (std::size_t i = 0; i < nb; ++i) next.set(r.model.bool_vars[i], ((mask >> i) & 1) != 0);
    if (!refinable(r, h - 1, next)) return false;
  }
  return true;
}

std::string oracle_equivalence() {
  const double step = 0.5;
  std::vector<OracleRun> runs;
  {
    OracleRun o{"caic1", builtin_domain("caic1"), {}, {{"a", {0, 700}}}, 1.2, {}, {}};
    for (int x = 0; x <= 500; ++x)
      for (bool d : {true, false}) o.grid.push_back({{double(x)}, {d}});
    o.random_point = [](std::mt19937& g) {
      return oracle::State{{double(g() % 501)}, {static_cast<char>(g() % 2)}};
    };
    runs.push_back(std::move(o));
  }
  {
    OracleRun o{"rover", builtin_domain("rover"), {}, {}, 4, {}, {}};
    o.opt.v0_reward = true;
    for (int x = -100; x <= 100; ++x)
      for (bool b : {true, false}) o.grid.push_back({{double(x)}, {b}});
    o.random_point = [](std::mt19937& g) {
      return oracle::State{{(static_cast<int>(g() % 6001) - 3000) / 100.0}, {static_cast<char>(g() % 2)}};
    };
    runs.push_back(std::move(o));
  }
  {
    OracleRun o{"reservoir", builtin_domain("reservoir"), {}, {}, 3, {}, {}};
    // a unit-step grid on the 5000 x 5000 box is 25M states: step 100 over
    // the box, plus unit-step windows in the middle and against the l2 cap
    for (int i = 0; i <= 5000; i += 100)
      for (int j = 0; j <= 5000; j += 100) o.grid.push_back({{double(i), double(j)}, {}});
    for (auto [i0, j0] : {std::pair{1000, 1000}, std::pair{2600, 4380}})
      for (int i = i0; i < i0 + 30; ++i)
        for (int j = j0; j < j0 + 30; ++j) o.grid.push_back({{double(i), double(j)}, {}});
    o.random_point = [](std::mt19937& g) {
      return oracle::State{{50.0 + g() % 4451, 50.0 + g() % 4451}, {}};
    };
    runs.push_back(std::move(o));
  }

  std::ostringstream os;
  for (OracleRun& o : runs) {
    SolveResult r = value_iteration(o.model, o.opt);
    int H = r.solved_horizon();
    expect(!r.aborted && H == o.model.horizon, o.name + ": symbolic solve incomplete");
    double bound = H * o.lipschitz * step / 2;
    oracle::BruteForceVI bf(r.model, step, o.opt.v0_reward, o.ranges);
    double worst = 0;
    int compared = 0, narrow = 0;
    for (const oracle::State& st : o.grid) {
      double want = bf.value(H, st);
      ExtendedValue got = sym_value(r, H, st);
      if (want == oracle::kNegInf) {
        // the legal action set can be narrower than the oracle's grid
        if (got.is_finite()) ++narrow;
        continue;
      }
      expect(got.is_finite(), o.name + ": symbolic -inf where the oracle is finite");
      double g = got.to_double();
      expect(want <= g + 1e-9, o.name + ": oracle beats the symbolic value");
      worst = std::max(worst, g - want);
      ++compared;
    }
    expect(worst <= 2 * bound, o.name + ": gap " + std::to_string(worst) + " over 2x bound " + std::to_string(2 * bound));

    oracle::BruteForceVI fine(r.model, step, o.opt.v0_reward, o.ranges);
    fine.set_refinement(0.01, step);
    std::mt19937 rng(17);
    double worst_fine = 0;
    int sampled = 0, drawn = 0;
    std::string worst_at;
    while (sampled < 100 && drawn < 20000) {
      oracle::State st = o.random_point(rng);
      ++drawn;
      if (!refinable(r, H, to_assignment(r, st))) continue;
      double want = fine.value(H, st);
      ExtendedValue got = sym_value(r, H, st);
      expect(got.is_finite() == (want != oracle::kNegInf), o.name + ": feasibility differs at a random point");
      if (!got.is_finite()) continue;
      double gap = std::abs(got.to_double() - want);
      if (gap > worst_fine) {
        worst_fine = gap;
        std::ostringstream at;
        at << " at (";
        for (double x : st.x) at << x << ' ';
        for (char b : st.b) at << int(b) << ' ';
        at << ") oracle " << want << " symbolic " << got.to_double();
        worst_at = at.str();
      }
      ++sampled;
    }
    expect(sampled == 100, o.name + ": only " + std::to_string(sampled) + " refinable points in " + std::to_string(drawn));
    expect(worst_fine <= 1e-6, o.name + ": refined gap " + std::to_string(worst_fine) + worst_at);
    os << o.name << " grid " << compared << " pts gap " << worst << " (bound " << 2 * bound << ", " << narrow
       << " narrow), refined " << sampled << " of " << drawn << " pts gap " << worst_fine << "; ";
  }
  return os.str();
}

// 7. discrete action sets approach the continuous value from below
std::string discretization() {
  std::ostringstream os;
  for (std::string dom : {"rover", "reservoir"}) {
    HmdpModel m = builtin_domain(dom);
    SolveOptions opt;
    opt.horizon = 3;
    opt.v0_reward = dom == "rover";
    SolveResult cont = value_iteration(m, opt);
    expect(!cont.aborted && cont.solved_horizon() == 3, dom + ": continuous solve incomplete");
    std::vector<Assignment> pts;
    if (dom == "rover") {
      for (int k = -120; k <= 120; ++k)
        for (bool b : {true, false}) pts.push_back(at(*cont.store, {{"x", frac(k, 4)}}, {{"b", b}}));
    } else {
      for (int i = 0; i <= 5000; i += 100)
        for (int j = 0; j <= 5000; j += 100) pts.push_back(at(*cont.store, {{"l1", i}, {"l2", j}}));
    }
    std::vector<ExtendedValue> ref;
    for (auto& p : pts) ref.push_back(cont.store->evaluate(cont.value[3], p));

    std::map<int, std::vector<ExtendedValue>> vals;
    std::vector<double> gaps;
    std::vector<int> missing;
    os << dom << ":";
    for (int n : {2, 4, 8, 16}) {
      SolveOptions dopt = opt;
      dopt.node_budget.reset();  // rover n = 16 needs about 1M allocations at h = 3
      SolveResult r = value_iteration(discretize_actions(m, n), dopt);
      expect(!r.aborted && r.solved_horizon() == 3, dom + " n=" + std::to_string(n) + ": solve incomplete");
      double gap = 0;
      int miss = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        ExtendedValue v = r.store->evaluate(r.value[3], pts[i]);
        expect(!(ref[i] < v), dom + " n=" + std::to_string(n) + ": discrete value above continuous");
        if (ref[i].is_finite() && !v.is_finite()) ++miss;
        if (ref[i].is_finite() && v.is_finite()) gap = std::max(gap, Rational(ref[i].value - v.value).get_d());
        vals[n].push_back(v);
      }
      gaps.push_back(gap);
      missing.push_back(miss);
      os << " n=" << n << " gap " << gap << " (" << miss << " infeasible)";
    }
    // nested pairs: grids of 2 and 4 points sit inside the grid of 16, and 2 inside 4 and 8
    for (auto [a, b] : std::vector<std::pair<int, int>>{{2, 4}, {2, 8}, {2, 16}, {4, 16}})
      for (std::size_t i = 0; i < pts.size(); ++i)
        expect(!(vals[b][i] < vals[a][i]), dom + ": n=" + std::to_string(b) + " below n=" + std::to_string(a));
    for (std::size_t k = 1; k < gaps.size(); ++k) {
      expect(missing[k] <= missing[k - 1], dom + ": infeasible count grows with n");
      expect(gaps[k] <= gaps[k - 1] + 1e-12, dom + ": gap grows with n");
    }
    os << "; ";
  }
  return os.str();
}

// 8. random diagram operations against the interpreter
std::string data_structure_suite() {
  oracle::Workload w(8);
  std::vector<oracle::Workload::Item> pool;
  for (int i = 0; i < 16; ++i) pool.push_back(w.base());
  for (int i = 0; i < 10000; ++i) {
    std::string err = w.step(pool, 100);
    expect(err.empty(), "operation " + std::to_string(i) + ": " + err);
  }
  return "10000 operations x 100 points";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> run;
  };
  std::vector<Criterion> all = {
      {1, "inventory V2 closed form", caic_closed_form},
      {2, "inventory (S, s) policy", scarf_policy},
      {3, "worked regression and maximization", worked_trace},
      {4, "rover support growth", rover_support},
      {5, "pruning necessity and soundness", pruning_necessity},
      {6, "brute-force oracle equivalence", oracle_equivalence},
      {7, "discretization dominance and convergence", discretization},
      {8, "data-structure property suite", data_structure_suite},
  };
  int failed = 0;
  for (auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.run();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.1fs): %s\n", ok ? "PASS" : "FAIL", c.id, c.name, s, detail.c_str());
    std::fflush(stdout);
    failed += !ok;
  }
  return failed ? 1 : 0;
}
