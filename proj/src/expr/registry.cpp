#include "hsdp/expr.hpp"

namespace hsdp {

bool is_boolean_kind(VarKind k) { return k == VarKind::kBoolean || k == VarKind::kPrimedBoolean; }
bool is_primed_kind(VarKind k) { return k == VarKind::kPrimedBoolean || k == VarKind::kPrimedContinuous; }

VarId VarRegistry::add(const std::string& name, VarKind kind, std::optional<Interval> bounds) {
  if (by_name_.count(name)) throw ExprError("duplicate variable: " + name);
  VarId id{static_cast<std::uint32_t>(vars_.size())};
  vars_.push_back({name, kind, std::nullopt, std::move(bounds)});
  by_name_[name] = id.index;
  return id;
}

VarId VarRegistry::add_state(const std::string& name, bool boolean, std::optional<Interval> bounds) {
  VarId v = add(name, boolean ? VarKind::kBoolean : VarKind::kContinuous, std::move(bounds));
  VarId p = add(name + "'", boolean ? VarKind::kPrimedBoolean : VarKind::kPrimedContinuous);
  vars_[v.index].twin = p;
  vars_[p.index].twin = v;
  return v;
}

VarId VarRegistry::add_param(const std::string& name, Interval bounds) {
  if (auto existing = find(name)) {
    const VarInfo& info = vars_[existing->index];
    if (info.kind != VarKind::kActionParam) throw ExprError("parameter name clashes with a state variable: " + name);
    if (info.bounds && (info.bounds->lo != bounds.lo || info.bounds->hi != bounds.hi))
      throw ExprError("parameter redeclared with different bounds: " + name);
    return *existing;
  }
  return add(name, VarKind::kActionParam, std::move(bounds));
}

std::optional<VarId> VarRegistry::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return VarId{it->second};
}

VarId VarRegistry::at(const std::string& name) const {
  auto v = find(name);
  if (!v) throw ExprError("unknown variable: " + name);
  return *v;
}

VarId VarRegistry::primed(VarId v) const {
  const VarInfo& i = info(v);
  if (is_primed_kind(i.kind) || !i.twin) throw ExprError("variable has no primed twin: " + i.name);
  return *i.twin;
}

VarId VarRegistry::unprimed(VarId v) const {
  const VarInfo& i = info(v);
  if (!is_primed_kind(i.kind)) throw ExprError("variable is not primed: " + i.name);
  return *i.twin;
}

std::vector<VarId> VarRegistry::all() const {
  std::vector<VarId> out;
  for (std::uint32_t i = 0; i < vars_.size(); ++i) out.push_back(VarId{i});
  return out;
}

}  // namespace hsdp
