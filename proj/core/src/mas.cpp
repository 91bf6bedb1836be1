#include "bbsim/mas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bbsim/optim.hpp"

namespace bbsim::mas {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;
}  // namespace

void MasParams::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("MasParams: dt must be positive");
  if (d_min < 0.0) throw std::invalid_argument("MasParams: d_min must be nonnegative");
  if (horizon < 1) throw std::invalid_argument("MasParams: horizon must be >= 1");
  if (a_max <= 0.0 || v_max <= 0.0) {
    throw std::invalid_argument("MasParams: a_max and v_max must be positive");
  }
  if (lambda < 0.0 || omega_s < 0.0 || omega_t < 0.0 || omega_d < 0.0) {
    throw std::invalid_argument("MasParams: weights must be nonnegative");
  }
}

MasCommand zero_command(std::size_t n) { return MasCommand{std::vector<Vec2>(n)}; }

bool is_zero_command(const MasCommand& u) {
  return std::all_of(u.acc.begin(), u.acc.end(),
                     [](Vec2 a) { return a.x == 0.0 && a.y == 0.0; });
}

double min_pairwise_distance(const MasState& x) {
  double best = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      best = std::min(best, distance(x.agents[i].pos, x.agents[j].pos));
    }
  }
  return best;
}

MasState mas_step(const MasState& x, const MasCommand& u, const MasParams& params,
                  std::span<const double> disturbance) {
  const std::size_t n = x.size();
  if (u.acc.size() != n) {
    throw std::invalid_argument("mas_step: command size does not match agent count");
  }
  if (!disturbance.empty() && disturbance.size() != 4 * n) {
    throw std::invalid_argument("mas_step: disturbance must have 4 components per agent");
  }
  for (const Vec2 a : u.acc) {
    if (a.norm() > params.a_max + kEps) {
      throw std::invalid_argument("mas_step: acceleration exceeds a_max");
    }
  }

  MasState next = x;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 wp{}, wv{};
    if (!disturbance.empty()) {
      wp = {disturbance[4 * i], disturbance[4 * i + 1]};
      wv = {disturbance[4 * i + 2], disturbance[4 * i + 3]};
    }
    next.agents[i].pos = x.agents[i].pos + params.dt * x.agents[i].vel + wp;
    next.agents[i].vel =
        clamp_norm(x.agents[i].vel + params.dt * u.acc[i] + wv, params.v_max);
  }
  return next;
}

namespace {

double separation_term(const MasState& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double d2 = (s.agents[i].pos - s.agents[j].pos).squared_norm();
      if (d2 == 0.0) return kInf;
      sum += 1.0 / d2;
    }
  }
  return sum;
}

// 1 - cos(angle between v and the outward radial direction); agents at the
// center or at rest get the worst-case value 2.
double divergence_term_agent(const AgentState& a, Vec2 center) {
  const Vec2 q = a.pos - center;
  const double qn = q.norm();
  const double vn = a.vel.norm();
  if (qn < kEps || vn < kEps) return 2.0;
  return 1.0 - q.dot(a.vel) / (qn * vn);
}

}  // namespace

double cost_ac(std::span<const MasState> trajectory, const MasParams& params) {
  double total = 0.0;
  for (const MasState& s : trajectory) {
    const double sep = separation_term(s);
    if (sep == kInf) return kInf;
    total += params.omega_s * sep;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += params.omega_t * (s.agents[i].pos - s.targets[i]).squared_norm();
    }
  }
  return total;
}

double cost_bc(std::span<const MasState> trajectory, const MasParams& params) {
  double total = 0.0;
  for (const MasState& s : trajectory) {
    const double sep = separation_term(s);
    if (sep == kInf) return kInf;
    total += params.omega_s * sep;
    for (const AgentState& a : s.agents) {
      total += params.omega_d * divergence_term_agent(a, s.circle_center);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// MPC rollout objective and its reverse-mode gradient

namespace {

struct Rollout {
  // states[t], t = 0..T; pre_clamp[t] is the velocity before clamping that
  // produced states[t] (t >= 1).
  std::vector<MasState> states;
  std::vector<std::vector<Vec2>> pre_clamp;
};

Rollout roll_forward(const MasState& x, std::span<const double> vars,
                     const MasParams& params) {
  const std::size_t n = x.size();
  const int T = params.horizon;
  Rollout r;
  r.states.reserve(T + 1);
  r.states.push_back(x);
  r.pre_clamp.resize(T + 1);
  for (int t = 0; t < T; ++t) {
    const MasState& cur = r.states.back();
    MasState next = cur;
    r.pre_clamp[t + 1].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a{vars[t * 2 * n + 2 * i], vars[t * 2 * n + 2 * i + 1]};
      next.agents[i].pos = cur.agents[i].pos + params.dt * cur.agents[i].vel;
      const Vec2 pre = cur.agents[i].vel + params.dt * a;
      r.pre_clamp[t + 1][i] = pre;
      next.agents[i].vel = clamp_norm(pre, params.v_max);
    }
    r.states.push_back(std::move(next));
  }
  return r;
}

// d(clamp)/d(pre) applied to an adjoint vector. Identity inside the ball,
// scaled tangential projector outside.
Vec2 clamp_jacobian_apply(Vec2 pre, double v_max, Vec2 adj) {
  const double nn = pre.norm();
  if (nn <= v_max) return adj;
  const double s = v_max / nn;
  const Vec2 unit = pre * (1.0 / nn);
  return s * (adj - unit * unit.dot(adj));
}

void add_stage_cost_gradient(const MasState& s, CostKind kind, const MasParams& params,
                             std::vector<Vec2>& dp, std::vector<Vec2>& dv) {
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const Vec2 diff = s.agents[i].pos - s.agents[j].pos;
      const double d2 = diff.squared_norm();
      if (d2 == 0.0) continue;  // objective is +inf here; gradient unused
      const Vec2 g = diff * (-2.0 * params.omega_s / (d2 * d2));
      dp[i] += g;
      dp[j] -= g;
    }
  }
  if (kind == CostKind::advanced) {
    for (std::size_t i = 0; i < n; ++i) {
      dp[i] += 2.0 * params.omega_t * (s.agents[i].pos - s.targets[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 q = s.agents[i].pos - s.circle_center;
      const Vec2 v = s.agents[i].vel;
      const double qn = q.norm();
      const double vn = v.norm();
      if (qn < kEps || vn < kEps) continue;  // flat worst-case region
      const double inv = 1.0 / (qn * vn);
      const double qv = q.dot(v);
      dp[i] += params.omega_d * (q * (qv / (qn * qn)) - v) * inv;
      dv[i] += params.omega_d * (v * (qv / (vn * vn)) - q) * inv;
    }
  }
}

}  // namespace

double rollout_objective(const MasState& x, std::span<const double> vars,
                         CostKind kind, const MasParams& params) {
  const std::size_t n = x.size();
  const int T = params.horizon;
  if (vars.size() != static_cast<std::size_t>(T) * 2 * n) {
    throw std::invalid_argument("rollout_objective: wrong variable count");
  }
  const Rollout r = roll_forward(x, vars, params);
  // Stage costs over the first T states; the effort penalty covers all
  // commands.
  const std::span<const MasState> window(r.states.data(), static_cast<std::size_t>(T));
  double cost = (kind == CostKind::advanced) ? cost_ac(window, params)
                                             : cost_bc(window, params);
  if (cost == kInf) return kInf;
  double effort = 0.0;
  for (const double v : vars) effort += v * v;
  return cost + params.lambda * effort;
}

std::vector<double> rollout_gradient(const MasState& x, std::span<const double> vars,
                                     CostKind kind, const MasParams& params) {
  const std::size_t n = x.size();
  const int T = params.horizon;
  const Rollout r = roll_forward(x, vars, params);

  std::vector<double> grad(vars.size(), 0.0);
  std::vector<Vec2> dp(n), dv(n);  // adjoint of state t during the sweep

  for (int t = T; t >= 1; --t) {
    // Push adjoints from state t back to state t-1 and command t-1.
    std::vector<Vec2> dp_prev(n), dv_prev(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 through_clamp =
          clamp_jacobian_apply(r.pre_clamp[t][i], params.v_max, dv[i]);
      dp_prev[i] = dp[i];
      dv_prev[i] = params.dt * dp[i] + through_clamp;
      const std::size_t base = (t - 1) * 2 * n + 2 * i;
      grad[base] += params.dt * through_clamp.x;
      grad[base + 1] += params.dt * through_clamp.y;
    }
    dp = std::move(dp_prev);
    dv = std::move(dv_prev);
    add_stage_cost_gradient(r.states[t - 1], kind, params, dp, dv);
  }

  for (std::size_t k = 0; k < vars.size(); ++k) {
    grad[k] += 2.0 * params.lambda * vars[k];
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Controllers

CommandSequence<MasCommand> mpc_solve(const MasState& x, CostKind kind,
                                      const MasParams& params, std::uint64_t seed) {
  const std::size_t n = x.size();
  const int T = params.horizon;
  const std::size_t dim = static_cast<std::size_t>(T) * 2 * n;

  optim::Problem problem;
  problem.lower.assign(dim, -params.a_max);
  problem.upper.assign(dim, params.a_max);
  problem.initial_guess.assign(dim, 0.0);
  problem.objective = [x, kind, params](std::span<const double> v) {
    return rollout_objective(x, v, kind, params);
  };
  problem.gradient = [x, kind, params](std::span<const double> v, std::span<double> g) {
    const auto full = rollout_gradient(x, v, kind, params);
    std::copy(full.begin(), full.end(), g.begin());
  };
  // The true feasible set is a disc per agent per step; the box is the
  // enclosing square used for restart sampling.
  const double a_max = params.a_max;
  problem.project = [n, a_max](std::span<double> v) {
    for (std::size_t k = 0; k + 1 < v.size(); k += 2) {
      const Vec2 clamped = clamp_norm({v[k], v[k + 1]}, a_max);
      v[k] = clamped.x;
      v[k + 1] = clamped.y;
    }
  };

  optim::Options options;
  options.max_iterations = params.mpc_iterations;
  options.restarts = params.mpc_restarts;
  const optim::Result res = optim::solve(problem, seed, options);

  std::vector<MasCommand> commands;
  commands.reserve(T);
  for (int t = 0; t < T; ++t) {
    MasCommand u;
    u.acc.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = t * 2 * n + 2 * i;
      u.acc.push_back(clamp_norm({res.x[base], res.x[base + 1]}, params.a_max));
    }
    commands.push_back(std::move(u));
  }
  return CommandSequence<MasCommand>(std::move(commands));
}

MasCommand mas_advanced_controller(const MasState& x, const MasParams& params,
                                   std::uint64_t seed) {
  return mpc_solve(x, CostKind::advanced, params, seed).head();
}

CommandSequence<MasCommand> mas_lookahead_baseline(const MasState& x, const MasCommand& z,
                                                   const MasParams& params,
                                                   std::uint64_t seed) {
  const MasState x_next = mas_step(x, z, params);
  const auto recovery = mpc_solve(x_next, CostKind::baseline, params, seed);
  std::vector<MasCommand> commands;
  commands.reserve(recovery.size() + 2);
  commands.push_back(z);
  for (const auto& u : recovery) commands.push_back(u);
  commands.push_back(zero_command(x.size()));
  return CommandSequence<MasCommand>(std::move(commands));
}

CircleScenario make_circle_scenario(int n, double radius, const MasParams& params) {
  params.validate();
  if (n < 2) throw ConfigError("circle scenario requires at least 2 agents");
  if (radius <= 0.0) throw ConfigError("circle scenario requires a positive radius");

  const double min_gap = 2.0 * radius * std::sin(M_PI / n);
  if (min_gap <= params.d_min) {
    throw ConfigError("initial spacing does not exceed d_min");
  }

  MasState state;
  state.circle_center = {0.0, 0.0};
  state.agents.resize(n);
  state.targets.resize(n);
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * M_PI * k / n;
    const Vec2 on_circle{radius * std::cos(theta), radius * std::sin(theta)};
    state.agents[k] = {on_circle, {0.0, 0.0}};
    state.targets[k] = -on_circle;  // antipodal
  }
  return {state, CommandSequence<MasCommand>::single(zero_command(n))};
}

Plant<MasState, MasCommand> make_plant(std::size_t n, const MasParams& params,
                                       double disturbance_halfwidth) {
  Plant<MasState, MasCommand> plant;
  plant.step = [params](const MasState& x, const MasCommand& u,
                        std::span<const double> w) { return mas_step(x, u, params, w); };
  plant.admissible = [params](const MasState& x) {
    return min_pairwise_distance(x) >= params.d_min;
  };
  plant.disturbance_halfwidth = disturbance_halfwidth;
  plant.disturbance_dim = disturbance_halfwidth > 0.0 ? 4 * n : 0;
  return plant;
}

namespace {

Vec2 centroid(const MasState& x) {
  Vec2 c{};
  for (const auto& a : x.agents) c += a.pos;
  return c * (1.0 / static_cast<double>(x.size()));
}

// Full-throttle convergence on the fleet centroid; reliably produces
// colliding trajectories the checker must refuse.
MasCommand corrupt_command(const MasState& x, double a_max) {
  const Vec2 c = centroid(x);
  MasCommand u;
  u.acc.reserve(x.size());
  for (const auto& a : x.agents) {
    const Vec2 to_center = c - a.pos;
    const double d = to_center.norm();
    u.acc.push_back(d < kEps ? Vec2{} : to_center * (a_max / d));
  }
  return u;
}

MasCommand garbage_command(std::size_t n, double a_max, std::uint64_t& rng) {
  MasCommand u;
  u.acc.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * M_PI * detail::uniform_unit(rng);
    const double mag = a_max * detail::uniform_unit(rng);
    u.acc.push_back({mag * std::cos(angle), mag * std::sin(angle)});
  }
  return u;
}

}  // namespace

AdvancedController<MasState, MasCommand> make_advanced(const MasParams& params,
                                                       std::uint64_t run_seed,
                                                       FaultSchedule faults) {
  return [params, run_seed, faults](const MasState& x,
                                    std::size_t step) -> std::optional<MasCommand> {
    if (auto fault = faults.at(step)) {
      switch (*fault) {
        case FaultKind::hang:
          return std::nullopt;
        case FaultKind::corrupt:
          return corrupt_command(x, params.a_max);
        case FaultKind::garbage: {
          std::uint64_t rng = derive_seed(run_seed, step * 4 + 2);
          return garbage_command(x.size(), params.a_max, rng);
        }
      }
    }
    return mas_advanced_controller(x, params, derive_seed(run_seed, step * 4 + 0));
  };
}

LookaheadController<MasState, MasCommand> make_lookahead(const MasParams& params,
                                                         std::uint64_t run_seed,
                                                         FaultSchedule faults) {
  return [params, run_seed, faults](
             const MasState& x, const MasCommand& z,
             std::size_t step) -> std::optional<CommandSequence<MasCommand>> {
    if (auto fault = faults.at(step)) {
      switch (*fault) {
        case FaultKind::hang:
          return std::nullopt;
        case FaultKind::corrupt: {
          // Head stays z (look-ahead contract) and the zero tail is kept so
          // the rejection comes from the trajectory, not a malformed tail.
          std::vector<MasCommand> cmds;
          cmds.push_back(z);
          MasState cur = mas_step(x, z, params);
          for (int t = 0; t < params.horizon; ++t) {
            MasCommand u = corrupt_command(cur, params.a_max);
            cur = mas_step(cur, u, params);
            cmds.push_back(std::move(u));
          }
          cmds.push_back(zero_command(x.size()));
          return CommandSequence<MasCommand>(std::move(cmds));
        }
        case FaultKind::garbage: {
          std::uint64_t rng = derive_seed(run_seed, step * 4 + 3);
          std::vector<MasCommand> cmds;
          cmds.push_back(z);
          for (int t = 0; t < params.horizon + 1; ++t) {
            cmds.push_back(garbage_command(x.size(), params.a_max, rng));
          }
          return CommandSequence<MasCommand>(std::move(cmds));
        }
      }
    }
    return mas_lookahead_baseline(x, z, params, derive_seed(run_seed, step * 4 + 1));
  };
}

}  // namespace bbsim::mas
