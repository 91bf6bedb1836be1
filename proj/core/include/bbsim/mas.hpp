#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bbsim/command_sequence.hpp"
#include "bbsim/execution.hpp"
#include "bbsim/geometry.hpp"

namespace bbsim::mas {

struct AgentState {
  Vec2 pos;
  Vec2 vel;
};

/// Combined state of all agents plus the scenario anchors (per-agent targets
/// and the circle center used by the divergence cost). Stacking order is
/// fixed as [p1, v1, ..., pn, vn].
struct MasState {
  std::vector<AgentState> agents;
  std::vector<Vec2> targets;
  Vec2 circle_center;

  std::size_t size() const { return agents.size(); }
};

/// One acceleration per agent; the control input for a single step.
struct MasCommand {
  std::vector<Vec2> acc;
};

struct MasParams {
  double dt = 0.3;
  double v_max = 2.0;
  double a_max = 1.5;
  double d_min = 1.7;
  int horizon = 10;  // MPC prediction horizon T

  double lambda = 0.05;   // control-effort penalty
  double omega_s = 40.0;  // separation weight
  double omega_t = 1.0;   // target-seeking weight
  double omega_d = 10.0;  // divergence weight (baseline cost)

  int mpc_restarts = 2;
  int mpc_iterations = 120;
  double target_tolerance = 0.5;

  void validate() const;
};

enum class CostKind { advanced, baseline };

/// Double-integrator step: p += dt*v, v += dt*a, then the velocity is
/// radially clamped to v_max. Disturbance (when non-empty) adds 4 components
/// per agent, [dpx, dpy, dvx, dvy], before the clamp.
MasState mas_step(const MasState& x, const MasCommand& u, const MasParams& params,
                  std::span<const double> disturbance = {});

/// Advanced-controller cost over a predicted trajectory: inverse-square
/// pairwise separation plus squared distance to targets. Coincident agents
/// yield +inf.
double cost_ac(std::span<const MasState> trajectory, const MasParams& params);

/// Baseline cost: the same separation term plus a divergence term that is 0
/// when an agent's velocity points radially out of the circle and 2 when it
/// points inward. Agents at the center or at rest score the worst-case 2.
double cost_bc(std::span<const MasState> trajectory, const MasParams& params);

/// Objective of the MPC program as a function of the stacked acceleration
/// variables (horizon x n x 2, step-major). Exposed for gradient checks.
double rollout_objective(const MasState& x, std::span<const double> vars,
                         CostKind kind, const MasParams& params);

/// Analytic gradient of rollout_objective (reverse sweep through the
/// dynamics, including the velocity-clamp Jacobian).
std::vector<double> rollout_gradient(const MasState& x, std::span<const double> vars,
                                     CostKind kind, const MasParams& params);

/// Receding-horizon solve: per-agent accelerations over the horizon,
/// feasible w.r.t. |a_i| <= a_max by disc projection. Deterministic per
/// (state, kind, params, seed); imperfect by design.
CommandSequence<MasCommand> mpc_solve(const MasState& x, CostKind kind,
                                      const MasParams& params, std::uint64_t seed);

/// First command of the advanced MPC solution.
MasCommand mas_advanced_controller(const MasState& x, const MasParams& params,
                                   std::uint64_t seed);

/// Look-ahead proposal [z, bc-solution from the post-z state, zero command];
/// length horizon + 2, first element always equals z.
CommandSequence<MasCommand> mas_lookahead_baseline(const MasState& x, const MasCommand& z,
                                                   const MasParams& params,
                                                   std::uint64_t seed);

struct CircleScenario {
  MasState state;
  CommandSequence<MasCommand> initial_plan;
};

/// n agents equally spaced and at rest on a circle, targets antipodal; the
/// initial safe plan is a single all-zero command. Throws ConfigError when
/// the initial spacing does not exceed d_min.
CircleScenario make_circle_scenario(int n, double radius, const MasParams& params);

MasCommand zero_command(std::size_t n);
bool is_zero_command(const MasCommand& u);
double min_pairwise_distance(const MasState& x);

// --- Simplex wiring -------------------------------------------------------

Plant<MasState, MasCommand> make_plant(std::size_t n, const MasParams& params,
                                       double disturbance_halfwidth = 0.0);

/// Controllers with an optional fault schedule. Faults: `hang` declines to
/// answer (the kernel's timeout path), `corrupt` replaces accelerations with
/// full-throttle convergence on the fleet centroid, `garbage` emits seeded
/// random accelerations. Corruption of the look-ahead proposal preserves the
/// leading advanced command and the trailing zero command.
AdvancedController<MasState, MasCommand> make_advanced(const MasParams& params,
                                                       std::uint64_t run_seed,
                                                       FaultSchedule faults = {});

LookaheadController<MasState, MasCommand> make_lookahead(const MasParams& params,
                                                         std::uint64_t run_seed,
                                                         FaultSchedule faults = {});

}  // namespace bbsim::mas
