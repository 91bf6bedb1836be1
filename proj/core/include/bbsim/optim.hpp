#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace bbsim::optim {

/// Box-constrained minimization problem. `project` (optional) refines the
/// box clamp with a tighter feasible-set projection (e.g. per-block discs);
/// the box itself is always enforced and is what restart sampling uses.
struct Problem {
  std::function<double(std::span<const double>)> objective;
  std::function<void(std::span<const double>, std::span<double>)> gradient;  // optional
  std::vector<double> lower;
  std::vector<double> upper;
  std::function<void(std::span<double>)> project;  // optional, applied after box clamp
  std::vector<double> initial_guess;               // optional start for restart 0

  std::size_t dimension() const { return lower.size(); }
};

struct Result {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  std::vector<double> restart_initial_values;  // objective at each restart's start
};

struct Options {
  int max_iterations = 200;  // per restart
  int restarts = 4;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double step_tolerance = 1e-10;
  double gradient_tolerance = 1e-9;
};

/// Multi-start projected descent with a Barzilai-Borwein initial step and
/// Armijo backtracking. Deterministic for a fixed (problem, seed, options);
/// different seeds sample different restart points, which is the intended
/// source of controller nondeterminism across runs.
Result solve(const Problem& problem, std::uint64_t seed, const Options& options = {});

/// Central finite differences; used when Problem.gradient is not provided
/// and exposed for gradient cross-checks.
void finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, std::span<double> out);

}  // namespace bbsim::optim
