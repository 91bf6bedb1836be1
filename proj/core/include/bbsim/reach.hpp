#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "bbsim/mas.hpp"
#include "bbsim/safety.hpp"
#include "bbsim/zonotope.hpp"

namespace bbsim::reach {

/// Uncertainty description for the reachability-based check. Sensor radii
/// bound the L2 error on each agent's measured position and velocity
/// (bounded by a regular polygon with `polygon_sides` sides, outer
/// approximation); disturbance_bound is the per-component half-width of the
/// interval disturbance added to every position and velocity coordinate at
/// every step.
struct UncertaintyModel {
  double sensor_position_radius = 0.0;
  double sensor_velocity_radius = 0.0;
  int polygon_sides = 16;
  double disturbance_bound = 0.0;
  /// Terminal acceptance under uncertainty: guaranteed pairwise separation
  /// at the end of the horizon must reach this value. <= 0 selects the
  /// default 5 * d_min.
  double separation_threshold = 0.0;

  void validate() const;
  bool deterministic() const {
    return sensor_position_radius == 0.0 && sensor_velocity_radius == 0.0 &&
           disturbance_bound == 0.0;
  }
};

/// One-step update matrices of the stacked linear dynamics (order
/// [p1, v1, ..., pn, vn]); valid while the velocity clamp stays inactive.
struct StackedDynamics {
  Eigen::MatrixXd a;  // 4n x 4n
  Eigen::MatrixXd b;  // 4n x 2n
};
StackedDynamics mas_matrices(std::size_t n, double dt);

Eigen::VectorXd stack_state(const mas::MasState& x);
Eigen::VectorXd stack_command(const mas::MasCommand& u);

/// Measured-state set: the stacked state bloated per agent by the sensor
/// polygons (position and velocity blocks independently).
Zonotope initial_zonotope(const mas::MasState& x, const UncertaintyModel& model);

/// Per-step disturbance box on all 4n coordinates (one generator each).
Zonotope disturbance_zonotope(std::size_t n, double bound);

struct ReachResult {
  std::vector<Zonotope> sets;  // index k = state after k commands
  /// Set when the reachable velocity box could cross v_max: past that point
  /// the linear model no longer matches the clamped plant, so the
  /// computation stops rather than continue unsoundly.
  bool clamp_fault = false;
  int fault_step = -1;
};

ReachResult reach_sequence(const Zonotope& z0, const CommandSequence<mas::MasCommand>& seq,
                           const UncertaintyModel& model, const mas::MasParams& params);

/// Guaranteed lower bound on ||p_i - p_j|| from the axis-aligned bounds of
/// the difference zonotope's position block.
double pair_distance_lower_bound(const Zonotope& z, std::size_t i, std::size_t j);

/// Uncertainty-aware permanent-safety check: every step's guaranteed
/// pairwise separation stays >= d_min and the final step's reaches the
/// large-separation threshold. With no uncertainty at all this reduces
/// exactly to the deterministic checker.
safety::SafetyVerdict mas_permanently_safe_uncertain(const Zonotope& z0,
                                                     const CommandSequence<mas::MasCommand>& seq,
                                                     const UncertaintyModel& model,
                                                     const mas::MasParams& params);

/// Decision-module checker that measures the current state through the
/// uncertainty model (building the initial set per call).
SafetyChecker<mas::MasState, mas::MasCommand> make_uncertain_checker(
    const mas::MasParams& params, const UncertaintyModel& model,
    std::chrono::microseconds budget = std::chrono::microseconds{0});

/// Sample a state consistent with the sensor model (uniform in the L2 error
/// discs, which the polygons contain). Used by containment tests.
mas::MasState sample_uncertain_state(const mas::MasState& x, const UncertaintyModel& model,
                                     std::uint64_t& rng);

}  // namespace bbsim::reach
