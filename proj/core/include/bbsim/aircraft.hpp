#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bbsim/command_sequence.hpp"
#include "bbsim/execution.hpp"
#include "bbsim/geometry.hpp"
#include "bbsim/safety.hpp"

namespace bbsim::aircraft {

/// Horizontal-maneuver advisory. clear_of_conflict leaves the aircraft on
/// its waypoint-following law; the turn advisories command fixed rates.
enum class Advisory { clear_of_conflict, weak_left, weak_right, strong_left, strong_right };

const char* to_string(Advisory a);

struct AircraftState {
  Vec2 position;       // ft
  double heading = 0;  // radians, (-pi, pi], 0 = +x, counterclockwise positive
  double speed = 807;  // ft/s, constant
};

struct FleetState {
  std::vector<AircraftState> aircraft;
  std::size_t size() const { return aircraft.size(); }
};

struct FleetCommand {
  std::vector<Advisory> advisories;  // one per aircraft
};

struct AircraftConfig {
  int n = 3;
  double circle_diameter = 90000.0;  // ft
  double safety_distance = 1500.0;   // ft
  double decision_period = 2.0;      // s
  double speed = 807.0;              // ft/s
  double divergence_window = 5.0;    // s of consecutive strictly-increasing distances
  double rollout_cap = 600.0;        // s, look-ahead rollouts reject past this
  double substep = 0.1;              // s, integration step inside a decision period

  double weak_rate_deg = 1.5;    // deg/s
  double strong_rate_deg = 3.0;  // deg/s

  // Advisory thresholds (the deliberately imperfect pairwise logic).
  double alert_distance = 4000.0;  // ft: conflict iff closest approach below this
  double alert_time = 40.0;        // s: conflicts further out than this are ignored
  double strong_time = 15.0;       // s: closer-in conflicts escalate to strong

  // Waypoint follower: proportional heading correction with a deadband.
  double follower_gain = 1.0;           // (deg/s) per deg of error, capped at strong rate
  double follower_deadband_deg = 0.5;   // below this error the commanded turn is zero

  std::vector<Vec2> waypoints;  // one per aircraft

  void validate() const;
  double turn_rate_deg(Advisory a) const;
  double turn_radius(double rate_deg) const;  // v / omega
};

/// Exact constant-turn-rate kinematics over dt (straight line at rate 0).
AircraftState aircraft_step(const AircraftState& x, double turn_rate_deg, double dt);

/// Commanded turn rate of the waypoint follower at this instant.
double waypoint_turn_rate(const AircraftState& x, Vec2 waypoint, const AircraftConfig& cfg);

struct SubstepTrace {
  std::vector<FleetState> states;           // per substep, excluding the start
  std::vector<std::vector<double>> rates;   // commanded deg/s per aircraft per substep
  double min_separation = 0.0;              // over recorded substeps
};

/// Advance the whole fleet for `duration` seconds under one command,
/// integrating at cfg.substep; clear_of_conflict aircraft re-evaluate the
/// waypoint follower every substep. Returns the trace for checking.
SubstepTrace advance_fleet(const FleetState& x, const FleetCommand& cmd,
                           const AircraftConfig& cfg, double duration);

/// Pairwise advisory: clear when the constant-velocity closest approach is
/// far or late; otherwise turn away from the side the intruder is drifting
/// to, escalating by time-to-closest-approach. Exactly symmetric encounters
/// break toward right turns.
Advisory pairwise_advisory(const AircraftState& ownship, const AircraftState& intruder,
                           const AircraftConfig& cfg);

/// Each ownship runs the pairwise logic against every other aircraft and
/// obeys the nearest intruder that commanded a turn (ties on distance break
/// to the lower index); clear only if every pair is clear.
FleetCommand fleet_baseline_advisories(const FleetState& x, const AircraftConfig& cfg);

/// Closed-loop rollout [z, c1, c2, ...]: re-run the fleet advisory logic
/// from each advanced state until the fleet reaches a provably diverging
/// configuration or the rollout cap; the checker decides whether the result
/// is actually acceptable.
CommandSequence<FleetCommand> aircraft_lookahead_baseline(const FleetState& x,
                                                          const FleetCommand& z,
                                                          const AircraftConfig& cfg);

/// Three-part acceptance: model limits respected, the safety distance holds
/// at every integration substep, and the tail is analyzable forever —
/// either every aircraft ends commanded straight with strictly increasing
/// pairwise distances over the divergence window and a constant-velocity
/// closest approach at or above the safety distance, or the final command
/// turns every aircraft and the resulting circles stay separated.
safety::SafetyVerdict aircraft_permanently_safe(const FleetState& x,
                                                const CommandSequence<FleetCommand>& seq,
                                                const AircraftConfig& cfg);

/// Single-command plan: every aircraft circles clockwise forever. Throws
/// ConfigError when the turn-circle geometry cannot certify it.
CommandSequence<FleetCommand> initial_circles_plan(const FleetState& x,
                                                   const AircraftConfig& cfg);

struct AircraftScenarioSetup {
  FleetState state;
  AircraftConfig config;  // waypoints filled in
  CommandSequence<FleetCommand> initial_plan;
};

/// Evenly spaced fleet on the circle, facing the center, waypoints past the
/// opposite side.
AircraftScenarioSetup make_circle_fleet(const AircraftConfig& cfg);

FleetCommand all_clear(std::size_t n);
double min_pairwise_distance(const FleetState& x);

// --- Simplex wiring -------------------------------------------------------

/// Deterministic plant: one decision period per step. Substep separation
/// minima are appended to *substep_minima when provided (the run-level
/// audit needs finer granularity than the step states).
Plant<FleetState, FleetCommand> make_plant(const AircraftConfig& cfg,
                                           std::vector<double>* substep_minima = nullptr);

AdvancedController<FleetState, FleetCommand> make_advanced(const AircraftConfig& cfg);
LookaheadController<FleetState, FleetCommand> make_lookahead(const AircraftConfig& cfg);
SafetyChecker<FleetState, FleetCommand> make_checker(
    const AircraftConfig& cfg, std::chrono::microseconds budget = std::chrono::microseconds{0});

}  // namespace bbsim::aircraft
