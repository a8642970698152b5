#include "hsdp/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace hsdp::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string fmt_ms(double ms) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << ms;
  return os.str();
}

std::string fmt_value(const ExtendedValue& v) {
  if (v.kind == TermKind::kNegInf) return "-inf";
  if (v.kind == TermKind::kPosInf) return "inf";
  return fmt_double(v.value.get_d());
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

// One point of a state grid.
struct Probe {
  Assignment at;
  std::vector<std::string> cells;  // coordinates as printed
};

std::vector<Rational> axis_values(const GridAxis& a) {
  std::vector<Rational> out;
  for (Rational v = a.lo; v <= a.hi; v += a.step) out.push_back(v);
  return out;
}

std::vector<Probe> state_grid(const XaddStore& s, const HmdpModel& m, const std::vector<GridAxis>& axes,
                              int default_points) {
  std::vector<std::vector<Rational>> values;
  for (VarId x : m.cont_vars) {
    const std::string& name = s.vars().name(x);
    auto it = std::find_if(axes.begin(), axes.end(), [&](const GridAxis& a) { return a.var == name; });
    if (it != axes.end()) {
      values.push_back(axis_values(*it));
      continue;
    }
    const auto& box = s.vars().info(x).bounds;
    values.push_back(box ? grid_points(*box, default_points) : std::vector<Rational>{0});
  }
  for (const GridAxis& a : axes) {
    auto v = s.vars().find(a.var);
    if (!v || s.vars().kind(*v) != VarKind::kContinuous)
      throw UsageError("grid variable '" + a.var + "' is not a continuous state variable");
  }
  std::size_t nb = m.bool_vars.size();
  std::vector<Probe> out;
  std::vector<std::size_t> k(values.size(), 0);
  bool empty = std::any_of(values.begin(), values.end(), [](auto& v) { return v.empty(); });
  if (empty) return out;
  for (;;) {
    for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
      Probe p;
      for (std::size_t i = 0; i < values.size(); ++i) {
        p.at.set(m.cont_vars[i], values[i][k[i]]);
        p.cells.push_back(format_rational(values[i][k[i]]));
      }
      // booleans vary fastest after the first one, reading like a truth table
      for (std::size_t i = 0; i < nb; ++i) {
        bool on = !((mask >> (nb - 1 - i)) & 1);
        p.at.set(m.bool_vars[i], on);
        p.cells.push_back(on ? "1" : "0");
      }
      out.push_back(std::move(p));
    }
    std::size_t i = values.size();
    while (i > 0 && ++k[i - 1] == values[i - 1].size()) k[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

std::vector<GridAxis> parse_axes(const std::vector<std::string>& specs) {
  std::vector<GridAxis> out;
  for (auto& s : specs) out.push_back(parse_grid_axis(s));
  return out;
}

PruneMode prune_mode(const std::string& s) {
  if (s == "none") return PruneMode::kNone;
  if (s == "consistency") return PruneMode::kConsistency;
  if (s == "full") return PruneMode::kFull;
  if (s == "heuristic") return PruneMode::kHeuristic;
  throw UsageError("unknown prune mode '" + s + "'");
}

void add_model_options(CLI::App* app, RunConfig& c) {
  auto* d = app->add_option("--domain", c.domain, "built-in domain: caic1, caic1-dd, caicK, rover, reservoir");
  auto* f = app->add_option("--file", c.file, "domain file");
  d->excludes(f);
  app->add_option("--horizon", c.horizon, "number of iterations (default: the model's horizon)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--discretize", c.discretize, "replace each action parameter by n grid values")
      ->check(CLI::Range(2, 1000000));
  app->add_option("--prune", c.prune, "none, consistency, full or heuristic")
      ->check(CLI::IsMember({"none", "consistency", "full", "heuristic"}));
  app->add_option("--epsilon", c.epsilon, "leaf merge tolerance for heuristic pruning")->check(CLI::PositiveNumber);
  app->add_flag("--v0-reward", c.v0_reward, "start from V0 = R instead of 0");
  app->add_option("--budget", c.budget, "node allocations allowed per iteration, 0 for no limit")
      ->check(CLI::NonNegativeNumber);
}

void require_model(const RunConfig& c) {
  if (c.domain.empty() && c.file.empty()) throw UsageError("one of --domain or --file is required");
}

int write_solve(const RunConfig& c, const SolveResult& r, std::ostream& out) {
  fs::path dir = c.out.empty() ? fs::path("hsdp-out") : fs::path(c.out);
  fs::create_directories(dir);
  const XaddStore& s = *r.store;
  write_file(dir / "stats.csv", stats_csv(r));
  for (int h = 0; h <= r.solved_horizon(); ++h) {
    std::string hs = std::to_string(h);
    write_file(dir / ("V_" + hs + ".dot"), s.to_dot(r.value[h], "V_" + hs));
    write_file(dir / ("policy_" + hs + ".dot"), s.to_dot(r.policy[h], "policy_" + hs));
  }
  std::string summary = summary_text(r);
  write_file(dir / "summary.txt", summary);
  out << summary;
  return r.aborted ? kBudgetAbort : kOk;
}

int cmd_sweep(const RunConfig& c, const std::vector<int>& ns, std::ostream& out) {
  HmdpModel m = load_model(c);
  if (!m.parameterized()) throw DomainError(DomainError::Kind::kSemantic, "sweep needs a parameterized domain");
  SolveOptions opt = solve_options(c);
  std::vector<GridAxis> axes = parse_axes(c.grid);
  SolveResult cont = value_iteration(m, opt);
  std::vector<Probe> probes = state_grid(*cont.store, cont.model, axes, 5);

  std::ostringstream os;
  os << "n,h,v_nodes,ms";
  for (auto& p : probes) {
    os << ",V[";
    std::size_t i = 0;
    for (VarId x : m.cont_vars) os << (i ? " " : "") << m.store->vars().name(x) << "=" << p.cells[i], ++i;
    for (VarId b : m.bool_vars) os << " " << m.store->vars().name(b) << "=" << p.cells[i++];
    os << "]";
  }
  os << ",max_gap,dominated\n";

  auto values = [&](const SolveResult& r, int h) {
    std::vector<ExtendedValue> v;
    for (auto& p : probes) v.push_back(r.store->evaluate(r.value[h], p.at));
    return v;
  };
  auto emit = [&](const std::string& label, const SolveResult& r) {
    for (const IterationStats& st : r.stats) {
      if (st.h > r.solved_horizon()) break;
      std::vector<ExtendedValue> v = values(r, st.h);
      os << label << "," << st.h << "," << st.v_nodes << "," << fmt_ms(st.ms);
      for (auto& e : v) os << "," << fmt_value(e);
      if (st.h > cont.solved_horizon()) {
        os << ",,\n";
        continue;
      }
      std::vector<ExtendedValue> ref = values(cont, st.h);
      double gap = 0;
      bool dom = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (ref[i] < v[i] && !(v[i].is_finite() && ref[i].is_finite() && (v[i].value - ref[i].value) <= Rational(1, 1000000000)))
          dom = false;
        if (v[i].is_finite() && ref[i].is_finite()) gap = std::max(gap, Rational(ref[i].value - v[i].value).get_d());
      }
      os << "," << fmt_double(gap) << "," << (dom ? "true" : "false") << "\n";
    }
  };
  emit("continuous", cont);
  bool aborted = cont.aborted;
  for (int n : ns) {
    SolveResult r = value_iteration(discretize_actions(m, n), opt);
    aborted = aborted || r.aborted;
    emit(std::to_string(n), r);
  }
  if (c.out.empty()) {
    out << os.str();
  } else {
    fs::create_directories(c.out);
    write_file(fs::path(c.out) / "sweep.csv", os.str());
  }
  return aborted ? kBudgetAbort : kOk;
}

}  // namespace

GridAxis parse_grid_axis(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("grid spec '" + spec + "' is not var=lo:hi:step");
  GridAxis a;
  a.var = spec.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("grid spec '" + spec + "' is not var=lo:hi:step");
  try {
    a.lo = parse_rational(parts[0]);
    a.hi = parse_rational(parts[1]);
    a.step = parse_rational(parts[2]);
  } catch (const std::invalid_argument&) {
    throw UsageError("grid spec '" + spec + "' has a bad number");
  }
  if (a.step <= 0) throw UsageError("grid step must be positive in '" + spec + "'");
  if (a.hi < a.lo) throw UsageError("grid range is empty in '" + spec + "'");
  return a;
}

HmdpModel load_model(const RunConfig& c) {
  require_model(c);
  HmdpModel m = c.file.empty() ? builtin_domain(c.domain) : load_domain(c.file);
  if (c.discretize) m = discretize_actions(m, *c.discretize);
  return m;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.horizon = c.horizon;
  o.prune = prune_mode(c.prune);
  o.epsilon = Rational(c.epsilon);
  o.v0_reward = c.v0_reward;
  if (c.budget > 0)
    o.node_budget = static_cast<std::size_t>(c.budget);
  else
    o.node_budget.reset();
  return o;
}

std::string stats_csv(const SolveResult& r) {
  std::ostringstream os;
  os << "h,action_count,v_nodes,v_paths,pruned_nodes,ms\n";
  for (const IterationStats& s : r.stats)
    os << s.h << "," << s.action_count << "," << s.v_nodes << "," << s.v_paths << "," << s.pruned_nodes << ","
       << fmt_ms(s.ms) << "\n";
  return os.str();
}

std::string summary_text(const SolveResult& r) {
  std::ostringstream os;
  std::size_t nodes = 0;
  double ms = 0;
  for (auto& s : r.stats) {
    nodes += s.v_nodes;
    ms += s.ms;
  }
  os << "solved_horizon: " << r.solved_horizon() << "\n";
  os << "converged_at: " << (r.converged ? std::to_string(r.converged_at) : "none") << "\n";
  os << "total_nodes: " << nodes << "\n";
  os << "total_ms: " << fmt_ms(ms) << "\n";
  if (!r.param_order.empty()) {
    os << "param_order:";
    for (auto& p : r.param_order) os << " " << p;
    os << "\n";
  }
  if (r.aborted) os << "aborted: " << r.abort_reason << "\n";
  return os.str();
}

std::string grid_csv(const SolveResult& r, int h, const std::vector<GridAxis>& axes) {
  if (h < 0 || h > r.solved_horizon()) throw UsageError("horizon " + std::to_string(h) + " was not solved");
  const XaddStore& s = *r.store;
  const HmdpModel& m = r.model;
  std::ostringstream os;
  bool first = true;
  for (VarId x : m.cont_vars) os << (first ? "" : ",") << s.vars().name(x), first = false;
  for (VarId b : m.bool_vars) os << (first ? "" : ",") << s.vars().name(b), first = false;
  os << (first ? "" : ",") << "value,policy_action";
  for (auto& p : r.param_order) os << "," << p;
  os << "\n";
  for (const Probe& p : state_grid(s, m, axes, 11)) {
    for (std::size_t i = 0; i < p.cells.size(); ++i) os << (i ? "," : "") << p.cells[i];
    PolicyChoice pc = extract_policy(r, h, p.at);
    os << (p.cells.empty() ? "" : ",") << fmt_value(pc.value) << "," << pc.action;
    for (auto& name : r.param_order) {
      os << ",";
      for (auto& [n, v] : pc.params)
        if (n == name) os << fmt_double(v.get_d());
    }
    os << "\n";
  }
  return os.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symbolic dynamic programming for hybrid MDPs"};
  app.require_subcommand(1);
  RunConfig c;
  std::vector<int> ns;
  std::optional<int> at_h;
  bool policy = false;

  auto* solve = app.add_subcommand("solve", "run value iteration and write stats, DOT files and a summary");
  add_model_options(solve, c);
  solve->add_option("--out", c.out, "output directory (default hsdp-out)");

  auto* grid = app.add_subcommand("grid", "evaluate value and policy on a state grid, as CSV");
  add_model_options(grid, c);
  grid->add_option("--grid", c.grid, "var=lo:hi:step, repeatable");
  grid->add_option("--at", at_h, "horizon to export (default: the last solved)");
  grid->add_option("--out", c.out, "write grid.csv in this directory instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "compare discretized action sets against the continuous solution");
  add_model_options(sweep, c);
  sweep->add_option("--n", ns, "grid sizes, comma separated")->delimiter(',')->required()->check(CLI::Range(2, 1000000));
  sweep->add_option("--grid", c.grid, "probe grid var=lo:hi:step, repeatable (default 5 points per variable)");
  sweep->add_option("--out", c.out, "write sweep.csv in this directory instead of stdout");

  auto* dot = app.add_subcommand("export-dot", "write one value or policy diagram as DOT");
  add_model_options(dot, c);
  dot->add_option("--at", at_h, "horizon to export (default: the last solved)");
  dot->add_flag("--policy", policy, "export the annotated policy diagram");
  dot->add_option("--out", c.out, "output file (default stdout)");

  auto* print = app.add_subcommand("print-domain", "print a domain in file syntax");
  print->add_option("--domain", c.domain, "built-in domain");
  print->add_option("--file", c.file, "domain file to re-render");
  print->add_option("--discretize", c.discretize, "render the discretized model")->check(CLI::Range(2, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands()[0]->help());
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*solve) {
      SolveResult r = value_iteration(load_model(c), solve_options(c));
      return write_solve(c, r, out);
    }
    if (*grid) {
      std::vector<GridAxis> axes = parse_axes(c.grid);
      SolveResult r = value_iteration(load_model(c), solve_options(c));
      std::string csv = grid_csv(r, at_h.value_or(r.solved_horizon()), axes);
      if (c.out.empty()) {
        out << csv;
      } else {
        fs::create_directories(c.out);
        write_file(fs::path(c.out) / "grid.csv", csv);
      }
      return r.aborted ? kBudgetAbort : kOk;
    }
    if (*sweep) return cmd_sweep(c, ns, out);
    if (*dot) {
      SolveResult r = value_iteration(load_model(c), solve_options(c));
      int h = at_h.value_or(r.solved_horizon());
      if (h < 0 || h > r.solved_horizon()) throw UsageError("horizon " + std::to_string(h) + " was not solved");
      std::string name = (policy ? "policy_" : "V_") + std::to_string(h);
      std::string text = r.store->to_dot(policy ? r.policy[h] : r.value[h], name);
      if (c.out.empty())
        out << text;
      else
        write_file(c.out, text);
      return r.aborted ? kBudgetAbort : kOk;
    }
    if (*print) {
      require_model(c);
      if (!c.domain.empty() && !c.file.empty()) throw UsageError("--domain and --file are exclusive");
      if (!c.discretize && !c.domain.empty()) {
        out << builtin_domain_text(c.domain);
      } else {
        out << render_domain(load_model(c));
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace hsdp::cli
