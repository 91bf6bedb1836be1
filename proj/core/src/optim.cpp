#include "bbsim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bbsim/execution.hpp"  // detail::splitmix64 / uniform_unit

namespace bbsim::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_inf(double v) { return std::isnan(v) ? kInf : v; }

void clamp_to_box(const Problem& p, std::span<double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], p.lower[i], p.upper[i]);
  }
}

void project_feasible(const Problem& p, std::span<double> x) {
  clamp_to_box(p, x);
  if (p.project) p.project(x);
}

struct DescentOutcome {
  std::vector<double> x;
  double value = kInf;
  double initial_value = kInf;
  int iterations = 0;
  bool converged = false;
};

DescentOutcome projected_descent(const Problem& p, std::vector<double> x,
                                 const Options& opt) {
  const std::size_t n = p.dimension();
  project_feasible(p, std::span<double>(x));

  auto eval = [&](std::span<const double> v) { return finite_or_inf(p.objective(v)); };
  auto grad = [&](std::span<const double> v, std::span<double> g) {
    if (p.gradient) {
      p.gradient(v, g);
    } else {
      finite_difference_gradient(p.objective, v, g);
    }
  };

  DescentOutcome out;
  out.x = x;
  double f = eval(x);
  out.initial_value = f;
  out.value = f;
  if (!std::isfinite(f)) return out;  // hopeless start, report as-is

  std::vector<double> g(n), x_new(n), g_new(n), dx(n), dg(n);
  grad(x, g);

  double step = 1.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;

    double gnorm2 = 0.0;
    for (double gi : g) gnorm2 += gi * gi;
    if (std::sqrt(gnorm2) <= opt.gradient_tolerance * (1.0 + std::abs(f))) {
      out.converged = true;
      break;
    }

    // Backtracking along the projected-gradient arc.
    double alpha = step;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - alpha * g[i];
      project_feasible(p, std::span<double>(x_new));
      double decrease = 0.0;  // Armijo model: g . (x_new - x)
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
      f_new = eval(x_new);
      if (std::isfinite(f_new) && f_new <= f + opt.armijo_c * decrease) {
        accepted = true;
        break;
      }
      alpha *= opt.backtrack;
    }
    if (!accepted) {
      out.converged = true;  // no acceptable step: treat as a local stop
      break;
    }

    double move2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dx[i] = x_new[i] - x[i];
      move2 += dx[i] * dx[i];
    }

    grad(x_new, g_new);
    // Barzilai-Borwein step seed for the next line search, clamped to keep
    // the backtrack loop short.
    double sy = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dg[i] = g_new[i] - g[i];
      sy += dx[i] * dg[i];
      ss += dx[i] * dx[i];
    }
    step = (sy > 1e-300) ? std::clamp(ss / sy, 1e-8, 1e8) : 1.0;

    x.swap(x_new);
    g.swap(g_new);
    f = f_new;

    if (std::sqrt(move2) <= opt.step_tolerance * (1.0 + std::sqrt(ss))) {
      out.converged = true;
      break;
    }
  }

  out.x = x;
  out.value = f;
  return out;
}

}  // namespace

void finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, std::span<double> out) {
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    out[i] = (fp - fm) / (2.0 * h);
  }
}

Result solve(const Problem& problem, std::uint64_t seed, const Options& options) {
  const std::size_t n = problem.dimension();
  if (problem.upper.size() != n) {
    throw std::invalid_argument("optim: bound arrays disagree on dimension");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(problem.lower[i] <= problem.upper[i])) {
      throw std::invalid_argument("optim: lower bound above upper bound");
    }
  }

  Result best;
  best.value = kInf;
  std::uint64_t rng = seed;

  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> x0(n);
    if (r == 0 && problem.initial_guess.size() == n) {
      x0 = problem.initial_guess;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double u = bbsim::detail::uniform_unit(rng);
        x0[i] = problem.lower[i] + u * (problem.upper[i] - problem.lower[i]);
      }
    }

    DescentOutcome o = projected_descent(problem, std::move(x0), options);
    best.restart_initial_values.push_back(o.initial_value);
    best.iterations += o.iterations;
    best.restarts_used = r + 1;
    // Ties resolve to the earlier restart so parallel evaluation schemes
    // have a well-defined sequential answer to match.
    if (o.value < best.value || best.x.empty()) {
      best.x = o.x;
      best.value = o.value;
      best.converged = o.converged;
    }
  }

  if (!std::isfinite(best.value)) best.converged = false;
  return best;
}

}  // namespace bbsim::optim
