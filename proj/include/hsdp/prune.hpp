#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hsdp/xadd.hpp"

namespace hsdp {

// (decision id, branch taken)
using Literal = std::pair<std::uint32_t, bool>;

// a . x + b >= 0, or > 0 when strict.
struct LinearRow {
  std::vector<Rational> a;
  Rational b;
  bool strict = false;
};

// Exact feasibility of a conjunction of linear rows over `n` real variables.
// Fourier-Motzkin up to three variables, rational simplex above.
bool rows_feasible(std::vector<LinearRow> rows, std::size_t n);
bool fourier_motzkin_feasible(std::vector<LinearRow> rows, std::size_t n);
bool simplex_feasible(const std::vector<LinearRow>& rows, std::size_t n);

// Maximize c.x subject to A x <= b, x >= 0. Empty when infeasible;
// `unbounded` is set when the objective is unbounded above.
std::optional<Rational> lp_maximize(const std::vector<std::vector<Rational>>& A, const std::vector<Rational>& b,
                                    const std::vector<Rational>& c, bool* unbounded = nullptr);

// Feasibility of decision-literal conjunctions under the registry's bounding box.
class FeasibilityChecker {
 public:
  explicit FeasibilityChecker(const XaddStore& store) : store_(store) {}
  // Throws XaddError when a literal is nonlinear.
  bool feasible(std::vector<Literal> lits);
  std::size_t calls() const { return calls_; }
  std::size_t cache_hits() const { return hits_; }

 private:
  const XaddStore& store_;
  std::map<std::vector<Literal>, bool> cache_;
  std::size_t calls_ = 0;
  std::size_t hits_ = 0;
};

enum class Implied { kTrue, kFalse, kUnknown };

// Verified implications between literals: `from` implies `to`.
class ImplicationKB {
 public:
  void add(Literal from, Literal to) { edges_.insert({from, to}); }
  bool contains(Literal from, Literal to) const { return edges_.count({from, to}) > 0; }
  const std::set<std::pair<Literal, Literal>>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

 private:
  std::set<std::pair<Literal, Literal>> edges_;
};

enum class RedundancyMode { kExact, kEpsilon };

class Pruner {
 public:
  explicit Pruner(XaddStore& store) : store_(store), checker_(store) {}

  Implied test_implied(const std::vector<Literal>& context, std::uint32_t dec);
  // Removes tests whose outcome is fixed by the path above them.
  NodeId prune_inconsistent(NodeId root);
  // Removes tests whose two branches agree wherever the node is reachable,
  // using the implication base. Epsilon mode also merges sibling leaves whose
  // coefficients differ by less than eps.
  NodeId prune_redundant(NodeId root, RedundancyMode mode = RedundancyMode::kExact,
                         const Rational& eps = Rational(1, 1000000000));
  // Records verified pairwise implications among the decisions of root.
  void harvest_implications(NodeId root);

  ImplicationKB& kb() { return kb_; }
  FeasibilityChecker& checker() { return checker_; }
  std::size_t removed_nodes() const { return removed_; }

 private:
  XaddStore& store_;
  FeasibilityChecker checker_;
  ImplicationKB kb_;
  std::size_t removed_ = 0;
};

// Replaces univariate quadratic decisions by tests on their roots.
NodeId linearize(XaddStore& store, NodeId root);

}  // namespace hsdp
