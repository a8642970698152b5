#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hsdp/expr.hpp"

namespace hsdp {

struct NodeId {
  std::uint32_t index = 0;
  std::uint32_t owner = 0;
  friend bool operator==(NodeId a, NodeId b) { return a.index == b.index && a.owner == b.owner; }
  friend bool operator!=(NodeId a, NodeId b) { return !(a == b); }
};

class XaddError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public XaddError {
 public:
  using XaddError::XaddError;
};

// Policy annotation carried by a terminal: the action that produced the
// value and, per action parameter, the maximizing expression (a terminal).
struct Annotation {
  std::string action;
  std::vector<std::pair<VarId, NodeId>> params;  // sorted by VarId
  bool empty() const { return action.empty() && params.empty(); }
  friend bool operator==(const Annotation& a, const Annotation& b) {
    return a.action == b.action && a.params == b.params;
  }
};

enum class ApplyOp { kAdd, kSub, kMul, kMax, kMin };

enum class DecisionOrder { kRegistration, kBooleansFirst };

struct Assignment {
  std::unordered_map<std::uint32_t, bool> bools;
  RealAssignment reals;
  Assignment& set(VarId v, bool b) {
    bools[v.index] = b;
    return *this;
  }
  Assignment& set(VarId v, const Rational& r) {
    reals[v.index] = r;
    return *this;
  }
};

struct Substitution {
  std::map<VarId, Polynomial> reals;
  std::map<VarId, VarId> bools;
};

struct PathCase {
  std::vector<std::pair<std::uint32_t, bool>> constraints;  // (decision id, branch)
  NodeId leaf;
};

struct StoreStats {
  std::size_t root_approximations = 0;  // irrational roots replaced by rational enclosures
};

class XaddStore {
 public:
  explicit XaddStore(VarRegistry vars = {}, DecisionOrder order = DecisionOrder::kRegistration);

  // Independent copy with a fresh owner tag. Ids issued by this store remain
  // valid in the copy.
  XaddStore clone() const;

  VarRegistry& vars() { return vars_; }
  const VarRegistry& vars() const { return vars_; }

  NodeId terminal(ExtendedTerm t, Annotation a = {});
  NodeId constant(const Rational& c) { return terminal(ExtendedTerm::finite(Polynomial::constant(c))); }
  NodeId poly(Polynomial p) { return terminal(ExtendedTerm::finite(std::move(p))); }
  NodeId neg_inf() { return terminal(ExtendedTerm::neg_inf()); }
  NodeId pos_inf() { return terminal(ExtendedTerm::pos_inf()); }
  NodeId zero() { return constant(0); }
  NodeId one() { return constant(1); }

  std::uint32_t intern(const Decision& d);
  const Decision& decision(std::uint32_t id) const { return decisions_.at(id); }
  std::size_t decision_count() const { return decisions_.size(); }
  std::uint64_t order_key(std::uint32_t id) const;

  // Reduced, hash-consed node. Returns `high` when high == low.
  NodeId get_node(std::uint32_t dec, NodeId high, NodeId low);
  // Node testing p >= 0 (p > 0 when strict); folds constant tests.
  NodeId ineq_node(const Polynomial& p, bool strict, NodeId high, NodeId low);
  NodeId bool_node(VarId v, NodeId high, NodeId low);
  // Unshared node that skips the reduction rules; input for reduce().
  NodeId make_raw_node(std::uint32_t dec, NodeId high, NodeId low);
  NodeId reduce(NodeId root);

  bool is_terminal(NodeId n) const;
  std::uint32_t decision_of(NodeId n) const;
  NodeId high(NodeId n) const;
  NodeId low(NodeId n) const;
  const ExtendedTerm& term(NodeId n) const;
  const Annotation& annotation(NodeId n) const;
  bool is_ordered(NodeId n) const;
  bool has_infinity(NodeId n) const;

  std::size_t node_count(NodeId root) const;
  std::size_t path_count(NodeId root) const;
  std::size_t store_size() const { return nodes_.size(); }
  // Reachable nodes, parents before children, high branch first.
  std::vector<NodeId> reachable(NodeId root) const;
  std::vector<std::uint32_t> decisions_in(NodeId root) const;
  bool mentions(NodeId root, VarId v) const;

  ExtendedValue evaluate(NodeId root, const Assignment& a) const;
  // Leaf reached under the assignment.
  NodeId leaf_at(NodeId root, const Assignment& a) const;

  NodeId apply(NodeId f, NodeId g, ApplyOp op);
  NodeId scale(NodeId f, const Rational& c);
  NodeId negate(NodeId f) { return scale(f, -1); }
  // Product with a probability diagram where a zero probability annihilates
  // infinite values.
  NodeId prob_product(NodeId f, NodeId prob);
  NodeId substitute(NodeId f, const Substitution& sigma);
  NodeId reorder(NodeId f);
  NodeId restrict(NodeId f, VarId b, bool value);
  NodeId marginalize_bool(NodeId f, VarId b);
  NodeId strip_annotations(NodeId f);
  // Rebuilds f with each leaf replaced by fn(leaf); the result is reordered.
  NodeId map_leaves(NodeId f, const std::function<NodeId(NodeId)>& fn);
  std::vector<PathCase> export_paths(NodeId root) const;

  std::string leaf_label(NodeId leaf) const;
  std::string to_dot(NodeId root, const std::string& graph_name = "xadd") const;

  // Abort with BudgetExceeded once more than `limit` nodes are allocated
  // past the current store size. nullopt disables the check.
  void set_node_budget(std::optional<std::size_t> limit);

  StoreStats& stats() { return stats_; }
  const StoreStats& stats() const { return stats_; }

  NodeId own(NodeId n) const;  // validates the owner tag

 private:
  enum class Op : std::uint8_t { kAdd, kSub, kMul, kMax, kMin, kMaskProd, kMaskSum, kProbProd };
  static constexpr std::uint32_t kNone = 0xffffffffu;
  static constexpr std::uint64_t kTerminalKey = ~0ull;

  struct Node {
    std::uint32_t dec = kNone;
    std::uint32_t high = 0;
    std::uint32_t low = 0;
    std::uint32_t term = kNone;
    std::uint64_t top_key = kTerminalKey;
    bool ordered = true;
    std::uint8_t inf_mask = 0;  // bit 0: -inf below, bit 1: +inf below
  };
  struct TerminalData {
    ExtendedTerm term;
    Annotation annotation;
  };
  struct TripleHash {
    std::size_t operator()(const std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>& t) const {
      auto [a, b, c] = t;
      return (static_cast<std::size_t>(a) * 0x9E3779B97F4A7C15ull) ^ (static_cast<std::size_t>(b) << 21) ^
             (static_cast<std::size_t>(c) * 0xC2B2AE3D27D4EB4Full);
    }
  };
  struct DecisionHash {
    std::size_t operator()(const Decision& d) const { return d.hash(); }
  };
  struct TerminalHash {
    std::size_t operator()(const TerminalData& t) const;
  };
  struct TerminalEq {
    bool operator()(const TerminalData& a, const TerminalData& b) const {
      return a.term == b.term && a.annotation == b.annotation;
    }
  };

  NodeId wrap(std::uint32_t i) const { return NodeId{i, tag_}; }
  std::uint32_t idx(NodeId n) const { return own(n).index; }
  std::uint32_t alloc(Node n);
  std::uint32_t node_raw(std::uint32_t dec, std::uint32_t high, std::uint32_t low);
  std::uint32_t term_node(ExtendedTerm t, Annotation a);
  bool is_plain_zero(std::uint32_t n) const;
  bool is_plain_one(std::uint32_t n) const;

  std::uint32_t apply_rec(std::uint32_t a, std::uint32_t b, Op op);
  std::optional<std::uint32_t> shortcut(std::uint32_t a, std::uint32_t b, Op op);
  std::uint32_t terminal_op(std::uint32_t a, std::uint32_t b, Op op);
  std::uint32_t compare_leaves(std::uint32_t a, std::uint32_t b, bool take_max);
  std::uint32_t apply_top(std::uint32_t a, std::uint32_t b, Op op);
  std::uint32_t reorder_rec(std::uint32_t n);

  VarRegistry vars_;
  DecisionOrder order_;
  std::uint32_t tag_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> lineage_;  // (ancestor tag, size at copy)
  std::vector<Node> nodes_;
  std::vector<TerminalData> terminals_;
  std::vector<Decision> decisions_;
  std::unordered_map<Decision, std::uint32_t, DecisionHash> decision_ids_;
  std::unordered_map<TerminalData, std::uint32_t, TerminalHash, TerminalEq> terminal_cache_;
  std::unordered_map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t, TripleHash> node_cache_;
  std::unordered_map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t, TripleHash> apply_cache_;
  std::unordered_map<std::uint32_t, std::uint32_t> reorder_cache_;
  std::unordered_map<std::uint32_t, std::uint32_t> reduce_cache_;
  std::optional<std::size_t> budget_limit_;
  std::size_t budget_base_ = 0;
  StoreStats stats_;
};

}  // namespace hsdp
