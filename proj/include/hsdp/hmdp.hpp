#pragma once
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsdp/xadd.hpp"

namespace hsdp {

// Error raised while reading or validating a domain. Line and column are 0
// when the problem is not tied to a source position.
class DomainError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kSemantic };
  DomainError(Kind kind, const std::string& msg, int line = 0, int col = 0);
  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  Kind kind_;
  int line_;
  int col_;
};

struct ActionParam {
  VarId var;
  Interval bounds;
  Interval grid;  // range used by discretize_actions; defaults to bounds
};

struct ActionSchema {
  std::string name;
  std::vector<ActionParam> params;
  std::map<VarId, NodeId> bool_cpfs;         // primed boolean -> P(b' = 1)
  std::map<VarId, NodeId> cont_transitions;  // primed continuous -> next value
  std::optional<NodeId> reward;              // replaces the model reward
  // Set on actions produced by discretize_actions.
  std::string origin;
  std::vector<std::pair<VarId, Rational>> fixed;

  bool parameterized() const { return !params.empty(); }
};

struct HmdpModel {
  std::shared_ptr<XaddStore> store;
  std::vector<VarId> bool_vars;
  std::vector<VarId> cont_vars;
  std::vector<ActionSchema> actions;
  std::optional<NodeId> reward;
  Rational discount = 1;
  int horizon = 1;

  NodeId reward_for(const ActionSchema& a) const;
  const ActionSchema* find_action(const std::string& name) const;
  bool parameterized() const;
};

HmdpModel parse_domain(const std::string& text);
HmdpModel load_domain(const std::string& path);
std::string render_domain(const HmdpModel& m);

// Checks the model invariants; throws DomainError(kSemantic).
void validate(const HmdpModel& m);

// Names: "caic<K>", "caic<K>-dd" (deterministic demand), "rover", "reservoir".
std::string builtin_domain_text(const std::string& name);
HmdpModel builtin_domain(const std::string& name);
std::vector<std::string> builtin_domain_names();

// Single-item capacity defaults to 500 per item.
std::string caic_text(int items, std::optional<Rational> capacity = {}, bool deterministic_demand = false);

HmdpModel discretize_actions(const HmdpModel& m, int n);

// Evenly spaced grid over [lo, hi] with both endpoints.
std::vector<Rational> grid_points(const Interval& range, int n);

}  // namespace hsdp
