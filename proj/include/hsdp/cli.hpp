#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsdp/sdp.hpp"

namespace hsdp::cli {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInvalidDomain = 3, kBudgetAbort = 4 };

struct GridAxis {
  std::string var;
  Rational lo, hi, step;
};

// "x=-15:15:0.5"
GridAxis parse_grid_axis(const std::string& spec);

struct RunConfig {
  std::string domain;  // built-in name
  std::string file;    // or a domain file
  std::optional<int> horizon;
  std::optional<int> discretize;
  std::string prune = "consistency";
  double epsilon = 1e-9;
  bool v0_reward = false;
  std::vector<std::string> grid;
  std::string out;
  long long budget = 200000;  // 0 disables the budget
};

HmdpModel load_model(const RunConfig& c);
SolveOptions solve_options(const RunConfig& c);

std::string stats_csv(const SolveResult& r);
std::string summary_text(const SolveResult& r);
// Values and policy at every point of the grid, one row per point and
// boolean assignment. Continuous variables without an axis use 11 points
// across their box.
std::string grid_csv(const SolveResult& r, int h, const std::vector<GridAxis>& axes);

// Entry point shared by the tool and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsdp::cli
