#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hsdp/hmdp.hpp"
#include "hsdp/prune.hpp"

namespace hsdp {

enum class PruneMode { kNone, kConsistency, kFull, kHeuristic };

struct SolveOptions {
  std::optional<int> horizon;  // defaults to the model horizon
  PruneMode prune = PruneMode::kConsistency;
  Rational epsilon = Rational(1, 1000000000);
  bool v0_reward = false;
  std::optional<std::size_t> node_budget = 200000;  // per iteration
  bool early_stop = true;
};

struct IterationStats {
  int h = 0;
  std::size_t action_count = 0;
  std::size_t v_nodes = 0;
  std::size_t v_paths = 0;
  std::size_t pruned_nodes = 0;
  double ms = 0;
};

struct SolveResult {
  std::shared_ptr<XaddStore> store;
  HmdpModel model;                  // ids valid in `store`
  std::vector<NodeId> value;        // value[h], annotations stripped
  std::vector<NodeId> policy;       // value[h] with action annotations
  std::vector<std::vector<std::pair<std::string, NodeId>>> q;  // q[h]: per action
  std::vector<IterationStats> stats;
  std::vector<std::string> param_order;
  bool converged = false;
  int converged_at = -1;
  bool aborted = false;
  std::string abort_reason;

  int solved_horizon() const { return static_cast<int>(value.size()) - 1; }
};

// One path of a diagram maximized over a single parameter.
struct MaxPartition {
  std::vector<Polynomial> lower;  // candidate lower bounds, declared bound included
  std::vector<Polynomial> upper;
  NodeId lb;                      // casemax of lower
  NodeId ub;                      // casemin of upper
  std::vector<Literal> ind;       // constraints free of the parameter
  std::optional<Polynomial> root;
  NodeId max;                     // guarded by ind and lb <= ub
};

class Solver {
 public:
  explicit Solver(const HmdpModel& m, SolveOptions opt = {});

  XaddStore& store() { return *store_; }
  const HmdpModel& model() const { return model_; }
  Pruner& pruner() { return pruner_; }

  NodeId prime(NodeId v);
  NodeId integrate_delta(NodeId q, VarId xp, NodeId transition);
  NodeId marginalize_discrete(NodeId q, VarId bp, NodeId cpf);
  NodeId regress(NodeId v, const ActionSchema& a);
  MaxPartition maximize_path(const PathCase& path, VarId y, const Interval& bounds);
  NodeId continuous_max(NodeId q, VarId y, const Interval& bounds);
  NodeId casemax(NodeId f, NodeId g) { return store_->apply(f, g, ApplyOp::kMax); }
  // Max of all parts, merged pairwise with simplification.
  NodeId balanced_max(std::vector<NodeId> parts);
  // Linearizes, then applies the configured pruning.
  NodeId simplify(NodeId f);
  NodeId annotate(NodeId q, const std::string& action);

  SolveResult solve();

 private:
  std::shared_ptr<XaddStore> store_;
  HmdpModel model_;
  SolveOptions opt_;
  Pruner pruner_;
};

SolveResult value_iteration(const HmdpModel& m, SolveOptions opt = {});

struct PolicyChoice {
  ExtendedValue value;
  std::string action;  // empty when the state has no legal action
  std::vector<std::pair<std::string, Rational>> params;
};

PolicyChoice extract_policy(const SolveResult& r, int h, const Assignment& state);

// Semantic comparison on a grid over the state box (about `points` states
// per boolean assignment), within tol.
bool grid_equal(const XaddStore& s, const HmdpModel& m, NodeId f, NodeId g, int points = 1000, double tol = 1e-9);

}  // namespace hsdp
