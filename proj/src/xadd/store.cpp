#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

#include "hsdp/xadd.hpp"

namespace hsdp {

namespace {
std::atomic<std::uint32_t> next_tag{1};
}

std::size_t XaddStore::TerminalHash::operator()(const TerminalData& t) const {
  std::size_t h = static_cast<std::size_t>(t.term.kind) * 0x51ed27u + t.term.poly.hash();
  h = h * 31 + std::hash<std::string>()(t.annotation.action);
  for (auto& [v, n] : t.annotation.params) h = h * 131 + v.index * 7 + n.index;
  return h;
}

XaddStore::XaddStore(VarRegistry vars, DecisionOrder order)
    : vars_(std::move(vars)), order_(order), tag_(next_tag++) {}

XaddStore XaddStore::clone() const {
  XaddStore copy = *this;
  copy.tag_ = next_tag++;
  copy.lineage_.push_back({tag_, static_cast<std::uint32_t>(nodes_.size())});
  copy.budget_limit_.reset();
  return copy;
}

NodeId XaddStore::own(NodeId n) const {
  if (n.owner == tag_) {
    if (n.index >= nodes_.size()) throw XaddError("node id out of range");
    return n;
  }
  for (auto& [tag, size] : lineage_)
    if (tag == n.owner && n.index < size) return NodeId{n.index, tag_};
  throw XaddError("node id belongs to a different store");
}

std::uint32_t XaddStore::alloc(Node n) {
  if (budget_limit_ && nodes_.size() >= budget_base_ + *budget_limit_)
    throw BudgetExceeded("node budget of " + std::to_string(*budget_limit_) + " exceeded");
  nodes_.push_back(n);
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void XaddStore::set_node_budget(std::optional<std::size_t> limit) {
  budget_limit_ = limit;
  budget_base_ = nodes_.size();
}

std::uint32_t XaddStore::term_node(ExtendedTerm t, Annotation a) {
  for (auto& [v, n] : a.params) n = own(n);
  std::sort(a.params.begin(), a.params.end(), [](auto& x, auto& y) { return x.first < y.first; });
  TerminalData key{std::move(t), std::move(a)};
  auto it = terminal_cache_.find(key);
  if (it != terminal_cache_.end()) return it->second;
  Node n;
  n.term = static_cast<std::uint32_t>(terminals_.size());
  n.inf_mask = key.term.kind == TermKind::kNegInf ? 1 : key.term.kind == TermKind::kPosInf ? 2 : 0;
  std::uint32_t id = alloc(n);
  terminals_.push_back(key);
  terminal_cache_.emplace(std::move(key), id);
  return id;
}

NodeId XaddStore::terminal(ExtendedTerm t, Annotation a) { return wrap(term_node(std::move(t), std::move(a))); }

std::uint32_t XaddStore::intern(const Decision& d) {
  auto it = decision_ids_.find(d);
  if (it != decision_ids_.end()) return it->second;
  if (!d.is_bool()) {
    for (auto& v : d.poly.variables())
      if (is_boolean_kind(vars_.kind(v))) throw XaddError("boolean variable inside an inequality");
  } else if (!is_boolean_kind(vars_.kind(d.var))) {
    throw XaddError("boolean decision on a continuous variable");
  }
  auto id = static_cast<std::uint32_t>(decisions_.size());
  decisions_.push_back(d);
  decision_ids_.emplace(d, id);
  return id;
}

std::uint64_t XaddStore::order_key(std::uint32_t id) const {
  if (order_ == DecisionOrder::kBooleansFirst && !decisions_[id].is_bool()) return (1ull << 32) | id;
  return id;
}

std::uint32_t XaddStore::node_raw(std::uint32_t dec, std::uint32_t high, std::uint32_t low) {
  if (high == low) return high;
  auto key = std::make_tuple(dec, high, low);
  auto it = node_cache_.find(key);
  if (it != node_cache_.end()) return it->second;
  Node n;
  n.dec = dec;
  n.high = high;
  n.low = low;
  n.top_key = order_key(dec);
  const Node& h = nodes_[high];
  const Node& l = nodes_[low];
  n.ordered = h.ordered && l.ordered && n.top_key < h.top_key && n.top_key < l.top_key;
  n.inf_mask = h.inf_mask | l.inf_mask;
  std::uint32_t id = alloc(n);
  node_cache_.emplace(key, id);
  return id;
}

NodeId XaddStore::get_node(std::uint32_t dec, NodeId high, NodeId low) {
  if (dec >= decisions_.size()) throw XaddError("unknown decision id");
  return wrap(node_raw(dec, idx(high), idx(low)));
}

NodeId XaddStore::ineq_node(const Polynomial& p, bool strict, NodeId high, NodeId low) {
  NormalizedIneq n = normalize_ineq(p, strict);
  if (n.constant) return *n.constant ? own(high) : own(low);
  std::uint32_t d = intern(n.decision);
  return n.negated ? get_node(d, low, high) : get_node(d, high, low);
}

NodeId XaddStore::bool_node(VarId v, NodeId high, NodeId low) { return get_node(intern(Decision::boolean(v)), high, low); }

NodeId XaddStore::make_raw_node(std::uint32_t dec, NodeId high, NodeId low) {
  if (dec >= decisions_.size()) throw XaddError("unknown decision id");
  Node n;
  n.dec = dec;
  n.high = idx(high);
  n.low = idx(low);
  n.top_key = order_key(dec);
  n.ordered = nodes_[n.high].ordered && nodes_[n.low].ordered && n.top_key < nodes_[n.high].top_key &&
              n.top_key < nodes_[n.low].top_key;
  n.inf_mask = nodes_[n.high].inf_mask | nodes_[n.low].inf_mask;
  return wrap(alloc(n));
}

NodeId XaddStore::reduce(NodeId root) {
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::uint32_t {
    const Node& node = nodes_[n];
    if (node.dec == kNone) return n;
    auto it = reduce_cache_.find(n);
    if (it != reduce_cache_.end()) return it->second;
    std::uint32_t dec = node.dec, hi = node.high, lo = node.low;
    std::uint32_t r = node_raw(dec, rec(hi), rec(lo));
    reduce_cache_[n] = r;
    return r;
  };
  return wrap(rec(idx(root)));
}

bool XaddStore::is_terminal(NodeId n) const { return nodes_[idx(n)].dec == kNone; }

std::uint32_t XaddStore::decision_of(NodeId n) const {
  const Node& node = nodes_[idx(n)];
  if (node.dec == kNone) throw XaddError("terminal has no decision");
  return node.dec;
}

NodeId XaddStore::high(NodeId n) const {
  const Node& node = nodes_[idx(n)];
  if (node.dec == kNone) throw XaddError("terminal has no children");
  return wrap(node.high);
}

NodeId XaddStore::low(NodeId n) const {
  const Node& node = nodes_[idx(n)];
  if (node.dec == kNone) throw XaddError("terminal has no children");
  return wrap(node.low);
}

const ExtendedTerm& XaddStore::term(NodeId n) const {
  const Node& node = nodes_[idx(n)];
  if (node.dec != kNone) throw XaddError("not a terminal");
  return terminals_[node.term].term;
}

const Annotation& XaddStore::annotation(NodeId n) const {
  const Node& node = nodes_[idx(n)];
  if (node.dec != kNone) throw XaddError("not a terminal");
  return terminals_[node.term].annotation;
}

bool XaddStore::is_ordered(NodeId n) const { return nodes_[idx(n)].ordered; }
bool XaddStore::has_infinity(NodeId n) const { return nodes_[idx(n)].inf_mask != 0; }

std::vector<NodeId> XaddStore::reachable(NodeId root) const {
  // reverse post-order of a low-first DFS: parents precede children and
  // high children get the smaller numbers
  std::vector<std::uint32_t> post;
  std::unordered_set<std::uint32_t> seen;
  std::vector<std::pair<std::uint32_t, int>> stack{{idx(root), 0}};
  seen.insert(stack.back().first);
  while (!stack.empty()) {
    auto& [n, state] = stack.back();
    const Node& node = nodes_[n];
    if (node.dec == kNone || state == 2) {
      post.push_back(n);
      stack.pop_back();
      continue;
    }
    std::uint32_t child = state == 0 ? node.low : node.high;
    ++state;
    if (seen.insert(child).second) stack.push_back({child, 0});
  }
  std::vector<NodeId> out;
  out.reserve(post.size());
  for (auto it = post.rbegin(); it != post.rend(); ++it) out.push_back(wrap(*it));
  return out;
}

std::size_t XaddStore::node_count(NodeId root) const { return reachable(root).size(); }

std::size_t XaddStore::path_count(NodeId root) const {
  std::unordered_map<std::uint32_t, std::size_t> memo;
  std::function<std::size_t(std::uint32_t)> rec = [&](std::uint32_t n) -> std::size_t {
    const Node& node = nodes_[n];
    if (node.dec == kNone) return 1;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    std::size_t c = rec(node.high) + rec(node.low);
    memo[n] = c;
    return c;
  };
  return rec(idx(root));
}

std::vector<std::uint32_t> XaddStore::decisions_in(NodeId root) const {
  std::vector<std::uint32_t> out;
  for (NodeId n : reachable(root)) {
    const Node& node = nodes_[n.index];
    if (node.dec != kNone) out.push_back(node.dec);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool XaddStore::mentions(NodeId root, VarId v) const {
  for (NodeId n : reachable(root)) {
    const Node& node = nodes_[n.index];
    if (node.dec == kNone) {
      if (terminals_[node.term].term.poly.mentions(v)) return true;
    } else {
      const Decision& d = decisions_[node.dec];
      if (d.is_bool() ? d.var == v : d.poly.mentions(v)) return true;
    }
  }
  return false;
}

NodeId XaddStore::leaf_at(NodeId root, const Assignment& a) const {
  std::uint32_t n = idx(root);
  while (nodes_[n].dec != kNone) {
    const Node& node = nodes_[n];
    const Decision& d = decisions_[node.dec];
    bool holds;
    if (d.is_bool()) {
      auto it = a.bools.find(d.var.index);
      if (it == a.bools.end()) throw ExprError("unassigned boolean: " + vars_.name(d.var));
      holds = it->second;
    } else {
      Rational v = poly_eval(d.poly, a.reals, &vars_);
      holds = d.strict ? v > 0 : v >= 0;
    }
    n = holds ? node.high : node.low;
  }
  return wrap(n);
}

ExtendedValue XaddStore::evaluate(NodeId root, const Assignment& a) const {
  const ExtendedTerm& t = term(leaf_at(root, a));
  if (t.kind == TermKind::kNegInf) return ExtendedValue::neg_inf();
  if (t.kind == TermKind::kPosInf) return ExtendedValue::pos_inf();
  return ExtendedValue::finite(poly_eval(t.poly, a.reals, &vars_));
}

std::vector<PathCase> XaddStore::export_paths(NodeId root) const {
  std::vector<PathCase> out;
  std::vector<std::pair<std::uint32_t, bool>> path;
  std::function<void(std::uint32_t)> rec = [&](std::uint32_t n) {
    const Node& node = nodes_[n];
    if (node.dec == kNone) {
      out.push_back({path, wrap(n)});
      return;
    }
    std::uint32_t dec = node.dec, hi = node.high, lo = node.low;
    path.push_back({dec, true});
    rec(hi);
    path.back().second = false;
    rec(lo);
    path.pop_back();
  };
  rec(idx(root));
  return out;
}

std::string XaddStore::leaf_label(NodeId leaf) const {
  const TerminalData& t = terminals_[nodes_[idx(leaf)].term];
  std::string s = t.term.to_string(vars_);
  if (!t.annotation.empty()) {
    std::string a = t.annotation.action;
    for (auto& [v, n] : t.annotation.params) {
      if (!a.empty()) a += "; ";
      a += vars_.name(v) + " = " + term(n).to_string(vars_);
    }
    s += " (" + a + ")";
  }
  return s;
}

static std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string XaddStore::to_dot(NodeId root, const std::string& graph_name) const {
  std::vector<NodeId> order = reachable(root);
  std::unordered_map<std::uint32_t, std::size_t> number;
  for (std::size_t i = 0; i < order.size(); ++i) number[order[i].index] = i;
  std::ostringstream os;
  os << "digraph \"" << dot_escape(graph_name) << "\" {\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Node& node = nodes_[order[i].index];
    if (node.dec == kNone) {
      os << "  n" << i << " [shape=box,label=\"" << dot_escape(leaf_label(order[i])) << "\"];\n";
    } else {
      os << "  n" << i << " [shape=ellipse,label=\"" << dot_escape(decisions_[node.dec].to_string(vars_))
         << "\"];\n";
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Node& node = nodes_[order[i].index];
    if (node.dec == kNone) continue;
    os << "  n" << i << " -> n" << number[node.high] << " [style=solid];\n";
    os << "  n" << i << " -> n" << number[node.low] << " [style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace hsdp
