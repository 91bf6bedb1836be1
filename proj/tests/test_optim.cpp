#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "bbsim/geometry.hpp"
#include "bbsim/optim.hpp"

using namespace bbsim;
using namespace bbsim::optim;

namespace {

Problem quadratic(std::vector<double> target, double lo, double hi) {
  Problem p;
  p.lower.assign(target.size(), lo);
  p.upper.assign(target.size(), hi);
  p.objective = [target](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
    return s;
  };
  return p;
}

}  // namespace

TEST_CASE("interior quadratic minimum is found to 1e-6") {
  auto p = quadratic({0.3, -0.2}, -1.0, 1.0);
  auto r = solve(p, 1);
  CHECK(std::abs(r.x[0] - 0.3) < 1e-6);
  CHECK(std::abs(r.x[1] + 0.2) < 1e-6);
  CHECK(r.converged);
}

TEST_CASE("exterior quadratic minimum lands on the box projection") {
  // Unconstrained minimizer (2, 3); the box projection is (1, 1).
  auto p = quadratic({2.0, 3.0}, -1.0, 1.0);
  auto r = solve(p, 3);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-9);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-9);
}

TEST_CASE("rosenbrock on [-2,2]^2 reaches 1e-3 within the default budget") {
  Problem p;
  p.lower = {-2.0, -2.0};
  p.upper = {2.0, 2.0};
  p.objective = [](std::span<const double> x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  auto r = solve(p, 42);
  CHECK(r.value <= 1e-3);
}

TEST_CASE("iterates respect the box and the refinement projection") {
  // Pairwise disc constraint layered over the box, as the MPC uses it.
  Problem p;
  p.lower.assign(4, -1.5);
  p.upper.assign(4, 1.5);
  p.objective = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - 2.0) * (x[i] - 2.0);
    return s;
  };
  p.project = [](std::span<double> v) {
    for (std::size_t k = 0; k + 1 < v.size(); k += 2) {
      const Vec2 c = clamp_norm({v[k], v[k + 1]}, 1.5);
      v[k] = c.x;
      v[k + 1] = c.y;
    }
  };
  auto r = solve(p, 9);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.x[i] >= -1.5);
    CHECK(r.x[i] <= 1.5);
  }
  CHECK(std::hypot(r.x[0], r.x[1]) <= 1.5);
  CHECK(std::hypot(r.x[2], r.x[3]) <= 1.5);
}

TEST_CASE("result is at least as good as every restart's starting point") {
  Problem p;
  p.lower.assign(6, -3.0);
  p.upper.assign(6, 3.0);
  p.objective = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += std::sin(3.0 * x[i]) + 0.3 * x[i] * x[i];
    }
    return s;
  };
  auto r = solve(p, 11);
  REQUIRE(!r.restart_initial_values.empty());
  for (double f0 : r.restart_initial_values) {
    CHECK(r.value <= f0);
  }
}

TEST_CASE("identical inputs give bit-identical results") {
  Problem p;
  p.lower.assign(3, -2.0);
  p.upper.assign(3, 2.0);
  p.objective = [](std::span<const double> x) {
    return std::cos(x[0]) + x[1] * x[1] + std::abs(x[2]);
  };
  auto a = solve(p, 123);
  auto b = solve(p, 123);
  REQUIRE(a.x.size() == b.x.size());
  CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
  CHECK(a.value == b.value);

  auto c = solve(p, 124);
  CHECK((c.x != a.x || c.value == a.value));  // different seed may move; value no worse tie
}

TEST_CASE("finite differences match the analytic gradient of a quadratic") {
  // f(x) = sum (x_i - i)^2, grad = 2(x_i - i)
  auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += (x[i] - double(i)) * (x[i] - double(i));
    }
    return s;
  };
  std::vector<double> x{0.7, -1.3, 2.9, 14.0};
  std::vector<double> g(4);
  finite_difference_gradient(f, x, g);
  for (std::size_t i = 0; i < 4; ++i) {
    const double exact = 2.0 * (x[i] - double(i));
    CHECK(std::abs(g[i] - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}
