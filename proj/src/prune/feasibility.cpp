#include <algorithm>
#include <map>

#include "hsdp/prune.hpp"

namespace hsdp {

namespace {

// Positive rescaling so the first nonzero coefficient has magnitude 1.
void normalize_row(LinearRow& r) {
  for (auto& c : r.a) {
    if (c == 0) continue;
    Rational s = abs(c);
    for (auto& x : r.a) x /= s;
    r.b /= s;
    return;
  }
}

bool is_trivial(const LinearRow& r) {
  return std::all_of(r.a.begin(), r.a.end(), [](const Rational& c) { return c == 0; });
}

bool trivially_holds(const LinearRow& r) { return r.strict ? r.b > 0 : r.b >= 0; }

struct RowKey {
  const std::vector<Rational>* a;
  bool operator<(const RowKey& o) const {
    for (std::size_t i = 0; i < a->size(); ++i) {
      int c = cmp((*a)[i], (*o.a)[i]);
      if (c) return c < 0;
    }
    return false;
  }
};

// Keeps the tightest row per direction. Returns false on a violated constant row.
bool dedup(std::vector<LinearRow>& rows) {
  std::vector<LinearRow> out;
  std::map<RowKey, std::size_t> seen;
  out.reserve(rows.size());
  for (auto& r : rows) {
    normalize_row(r);
    if (is_trivial(r)) {
      if (!trivially_holds(r)) return false;
      continue;
    }
    out.push_back(std::move(r));
    RowKey key{&out.back().a};
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, out.size() - 1);
      continue;
    }
    LinearRow& kept = out[it->second];
    LinearRow& cand = out.back();
    if (cand.b < kept.b || (cand.b == kept.b && cand.strict && !kept.strict)) {
      kept.b = cand.b;
      kept.strict = cand.strict;
    }
    out.pop_back();
  }
  rows = std::move(out);
  return true;
}

}  // namespace

bool fourier_motzkin_feasible(std::vector<LinearRow> rows, std::size_t n) {
  std::vector<bool> alive(n, true);
  for (std::size_t round = 0; round < n; ++round) {
    if (!dedup(rows)) return false;
    if (rows.empty()) return true;
    // pick the variable with the fewest generated rows
    std::size_t best = n;
    long best_cost = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!alive[v]) continue;
      long pos = 0, neg = 0;
      for (auto& r : rows) {
        if (r.a[v] > 0) ++pos;
        if (r.a[v] < 0) ++neg;
      }
      long cost = pos * neg - pos - neg;
      if (best == n || cost < best_cost) {
        best = v;
        best_cost = cost;
      }
    }
    alive[best] = false;
    std::vector<LinearRow> pos, neg, next;
    for (auto& r : rows) {
      if (r.a[best] > 0)
        pos.push_back(std::move(r));
      else if (r.a[best] < 0)
        neg.push_back(std::move(r));
      else
        next.push_back(std::move(r));
    }
    for (auto& p : pos) {
      for (auto& q : neg) {
        // p: a_v > 0, q: a_v < 0. (-q_v) p + p_v q eliminates v.
        Rational wp = -q.a[best], wq = p.a[best];
        LinearRow r;
        r.a.resize(n);
        for (std::size_t i = 0; i < n; ++i) r.a[i] = wp * p.a[i] + wq * q.a[i];
        r.a[best] = 0;
        r.b = wp * p.b + wq * q.b;
        r.strict = p.strict || q.strict;
        next.push_back(std::move(r));
      }
    }
    rows = std::move(next);
  }
  return dedup(rows);
}

std::optional<Rational> lp_maximize(const std::vector<std::vector<Rational>>& A, const std::vector<Rational>& b,
                                    const std::vector<Rational>& c, bool* unbounded) {
  const std::size_t m = A.size(), n = c.size();
  // columns: n originals, m slacks, m artificials, then rhs
  const std::size_t art0 = n + m, rhs = n + 2 * m;
  std::vector<std::vector<Rational>> T(m, std::vector<Rational>(rhs + 1));
  std::vector<std::size_t> basis(m);
  std::vector<bool> has_art(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    Rational sign = b[i] < 0 ? -1 : 1;
    for (std::size_t j = 0; j < n; ++j) T[i][j] = sign * A[i][j];
    T[i][n + i] = sign;
    T[i][rhs] = sign * b[i];
    if (b[i] < 0) {
      T[i][art0 + i] = 1;
      basis[i] = art0 + i;
      has_art[i] = true;
    } else {
      basis[i] = n + i;
    }
  }
  std::vector<bool> allowed(rhs, true);
  auto pivot = [&](std::vector<Rational>& obj, std::size_t r, std::size_t col) {
    Rational p = T[r][col];
    for (auto& x : T[r]) x /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || T[i][col] == 0) continue;
      Rational f = T[i][col];
      for (std::size_t j = 0; j <= rhs; ++j)
        if (T[r][j] != 0) T[i][j] -= f * T[r][j];
    }
    if (obj[col] != 0) {
      Rational f = obj[col];
      for (std::size_t j = 0; j <= rhs; ++j)
        if (T[r][j] != 0) obj[j] -= f * T[r][j];
    }
    basis[r] = col;
  };
  // Bland's rule. Returns false when unbounded.
  auto run = [&](std::vector<Rational>& obj) {
    for (;;) {
      std::size_t col = rhs;
      for (std::size_t j = 0; j < rhs; ++j)
        if (allowed[j] && obj[j] > 0) {
          col = j;
          break;
        }
      if (col == rhs) return true;
      std::size_t row = m;
      Rational best;
      for (std::size_t i = 0; i < m; ++i) {
        if (T[i][col] <= 0) continue;
        Rational ratio = T[i][rhs] / T[i][col];
        if (row == m || ratio < best || (ratio == best && basis[i] < basis[row])) {
          row = i;
          best = ratio;
        }
      }
      if (row == m) return false;
      pivot(obj, row, col);
    }
  };
  // phase 1: maximize -sum(artificials)
  std::vector<Rational> obj(rhs + 1);
  for (std::size_t i = 0; i < m; ++i) {
    if (!has_art[i]) continue;
    for (std::size_t j = 0; j <= rhs; ++j)
      if (j < art0 || j == rhs) obj[j] += T[i][j];
  }
  run(obj);
  if (obj[rhs] != 0) return std::nullopt;  // remaining infeasibility
  for (std::size_t j = art0; j < rhs; ++j) allowed[j] = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j)
      if (T[i][j] != 0) {
        pivot(obj, i, j);
        break;
      }
  }
  // phase 2
  std::vector<Rational> obj2(rhs + 1);
  for (std::size_t j = 0; j < n; ++j) obj2[j] = c[j];
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t bj = basis[i];
    if (bj >= n || c[bj] == 0) continue;
    Rational f = c[bj];
    for (std::size_t j = 0; j <= rhs; ++j)
      if (T[i][j] != 0) obj2[j] -= f * T[i][j];
  }
  if (!run(obj2)) {
    if (unbounded) *unbounded = true;
    return Rational(0);
  }
  if (unbounded) *unbounded = false;
  return Rational(-obj2[rhs]);
}

bool simplex_feasible(const std::vector<LinearRow>& rows, std::size_t n) {
  // x = xp - xn, plus slack variable t for strict rows: a.x + b - t >= 0, t <= 1.
  bool any_strict = std::any_of(rows.begin(), rows.end(), [](const LinearRow& r) { return r.strict; });
  std::size_t cols = 2 * n + (any_strict ? 1 : 0);
  std::vector<std::vector<Rational>> A;
  std::vector<Rational> b;
  for (auto& r : rows) {
    std::vector<Rational> row(cols);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = -r.a[i];
      row[n + i] = r.a[i];
    }
    if (r.strict) row[2 * n] = 1;
    A.push_back(std::move(row));
    b.push_back(r.b);
  }
  std::vector<Rational> c(cols);
  if (any_strict) {
    std::vector<Rational> cap(cols);
    cap[2 * n] = 1;
    A.push_back(cap);
    b.push_back(1);
    c[2 * n] = 1;
  }
  auto best = lp_maximize(A, b, c);
  if (!best) return false;
  return !any_strict || *best > 0;
}

bool rows_feasible(std::vector<LinearRow> rows, std::size_t n) {
  if (n <= 3) return fourier_motzkin_feasible(std::move(rows), n);
  return simplex_feasible(rows, n);
}

bool FeasibilityChecker::feasible(std::vector<Literal> lits) {
  ++calls_;
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  for (std::size_t i = 1; i < lits.size(); ++i)
    if (lits[i].first == lits[i - 1].first) return false;
  std::vector<Literal> key;
  for (auto& l : lits)
    if (!store_.decision(l.first).is_bool()) key.push_back(l);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  std::map<std::uint32_t, std::size_t> column;
  for (auto& [d, br] : key) {
    const Decision& dec = store_.decision(d);
    if (!dec.poly.is_linear()) throw XaddError("feasibility check on a nonlinear decision");
    for (VarId v : dec.poly.variables()) column.emplace(v.index, 0);
  }
  std::size_t n = 0;
  for (auto& [v, c] : column) c = n++;
  std::vector<LinearRow> rows;
  for (auto& [d, br] : key) {
    const Decision& dec = store_.decision(d);
    LinearRow r;
    r.a.assign(n, 0);
    for (auto& m : dec.poly.terms()) {
      if (m.powers.empty())
        r.b = m.coef;
      else
        r.a[column[m.powers[0].first]] = m.coef;
    }
    if (br) {
      r.strict = dec.strict;
    } else {
      // not(p >= 0) is -p > 0; not(p > 0) is -p >= 0
      for (auto& c : r.a) c = -c;
      r.b = -r.b;
      r.strict = !dec.strict;
    }
    rows.push_back(std::move(r));
  }
  for (auto& [v, c] : column) {
    const VarInfo& info = store_.vars().info(VarId{v});
    if (!info.bounds) continue;
    LinearRow lo, hi;
    lo.a.assign(n, 0);
    hi.a.assign(n, 0);
    lo.a[c] = 1;
    lo.b = -info.bounds->lo;
    hi.a[c] = -1;
    hi.b = info.bounds->hi;
    rows.push_back(std::move(lo));
    rows.push_back(std::move(hi));
  }
  bool ok = rows_feasible(std::move(rows), n);
  cache_.emplace(std::move(key), ok);
  return ok;
}

}  // namespace hsdp
