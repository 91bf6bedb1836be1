#include "bbsim/aircraft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bbsim::aircraft {

namespace {
constexpr double kMaxTurnRateDeg = 3.0;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

const char* to_string(Advisory a) {
  switch (a) {
    case Advisory::clear_of_conflict: return "clear_of_conflict";
    case Advisory::weak_left: return "weak_left";
    case Advisory::weak_right: return "weak_right";
    case Advisory::strong_left: return "strong_left";
    case Advisory::strong_right: return "strong_right";
  }
  return "?";
}

void AircraftConfig::validate() const {
  if (n < 1) throw std::invalid_argument("AircraftConfig: n must be >= 1");
  if (safety_distance < 500.0) {
    throw std::invalid_argument("AircraftConfig: safety_distance must be >= 500 ft");
  }
  if (decision_period <= 0.0 || substep <= 0.0 || speed <= 0.0) {
    throw std::invalid_argument("AircraftConfig: period, substep and speed must be positive");
  }
  if (divergence_window <= 0.0 || rollout_cap <= 0.0) {
    throw std::invalid_argument("AircraftConfig: window and rollout cap must be positive");
  }
  if (weak_rate_deg <= 0.0 || strong_rate_deg < weak_rate_deg ||
      strong_rate_deg > kMaxTurnRateDeg) {
    throw std::invalid_argument("AircraftConfig: turn rates out of range");
  }
}

double AircraftConfig::turn_rate_deg(Advisory a) const {
  switch (a) {
    case Advisory::clear_of_conflict: return 0.0;  // follower decides
    case Advisory::weak_left: return weak_rate_deg;
    case Advisory::weak_right: return -weak_rate_deg;
    case Advisory::strong_left: return strong_rate_deg;
    case Advisory::strong_right: return -strong_rate_deg;
  }
  return 0.0;
}

double AircraftConfig::turn_radius(double rate_deg) const {
  return speed / deg_to_rad(std::abs(rate_deg));
}

AircraftState aircraft_step(const AircraftState& x, double turn_rate_deg, double dt) {
  if (std::abs(turn_rate_deg) > kMaxTurnRateDeg + 1e-9) {
    throw std::invalid_argument("aircraft_step: turn rate exceeds 3 deg/s");
  }
  AircraftState next = x;
  const double omega = deg_to_rad(turn_rate_deg);
  if (omega == 0.0) {
    next.position += x.speed * dt * Vec2{std::cos(x.heading), std::sin(x.heading)};
    return next;
  }
  const double h1 = x.heading + omega * dt;
  const double r = x.speed / omega;  // signed
  next.position += Vec2{r * (std::sin(h1) - std::sin(x.heading)),
                        r * (std::cos(x.heading) - std::cos(h1))};
  next.heading = wrap_angle(h1);
  return next;
}

double waypoint_turn_rate(const AircraftState& x, Vec2 waypoint, const AircraftConfig& cfg) {
  const Vec2 to_wp = waypoint - x.position;
  if (to_wp.squared_norm() == 0.0) return 0.0;
  const double err = wrap_angle(std::atan2(to_wp.y, to_wp.x) - x.heading);
  const double err_deg = rad_to_deg(err);
  if (std::abs(err_deg) < cfg.follower_deadband_deg) return 0.0;
  return std::clamp(err_deg * cfg.follower_gain, -cfg.strong_rate_deg, cfg.strong_rate_deg);
}

double min_pairwise_distance(const FleetState& x) {
  double best = kInf;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      best = std::min(best, distance(x.aircraft[i].position, x.aircraft[j].position));
    }
  }
  return best;
}

FleetCommand all_clear(std::size_t n) {
  return FleetCommand{std::vector<Advisory>(n, Advisory::clear_of_conflict)};
}

SubstepTrace advance_fleet(const FleetState& x, const FleetCommand& cmd,
                           const AircraftConfig& cfg, double duration) {
  if (cmd.advisories.size() != x.size()) {
    throw std::invalid_argument("advance_fleet: command size does not match fleet");
  }
  const int substeps = std::max(1, static_cast<int>(std::lround(duration / cfg.substep)));
  const double dt = duration / substeps;

  SubstepTrace trace;
  trace.min_separation = kInf;
  trace.states.reserve(substeps);
  trace.rates.reserve(substeps);

  FleetState cur = x;
  for (int s = 0; s < substeps; ++s) {
    std::vector<double> rates(cur.size());
    FleetState next = cur;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      double rate = cfg.turn_rate_deg(cmd.advisories[i]);
      if (cmd.advisories[i] == Advisory::clear_of_conflict) {
        rate = waypoint_turn_rate(cur.aircraft[i],
                                  i < cfg.waypoints.size() ? cfg.waypoints[i] : Vec2{}, cfg);
      }
      rates[i] = rate;
      next.aircraft[i] = aircraft_step(cur.aircraft[i], rate, dt);
    }
    trace.min_separation = std::min(trace.min_separation, min_pairwise_distance(next));
    trace.rates.push_back(std::move(rates));
    trace.states.push_back(next);
    cur = trace.states.back();
  }
  return trace;
}

Advisory pairwise_advisory(const AircraftState& ownship, const AircraftState& intruder,
                           const AircraftConfig& cfg) {
  const Vec2 vo = ownship.speed * Vec2{std::cos(ownship.heading), std::sin(ownship.heading)};
  const Vec2 vi =
      intruder.speed * Vec2{std::cos(intruder.heading), std::sin(intruder.heading)};
  const auto cpa =
      safety::min_future_distance(ownship.position, vo, intruder.position, vi);
  if (cpa.distance > cfg.alert_distance || cpa.time > cfg.alert_time) {
    return Advisory::clear_of_conflict;
  }
  const bool strong = cpa.time <= cfg.strong_time;
  // Turn away from the side the intruder is drifting toward; a bearing rate
  // of exactly zero (symmetric head-on) breaks toward a right turn.
  const Vec2 dp = intruder.position - ownship.position;
  const Vec2 dv = vi - vo;
  const double bearing_rate = dp.cross(dv);
  if (bearing_rate >= 0.0) {
    return strong ? Advisory::strong_right : Advisory::weak_right;
  }
  return strong ? Advisory::strong_left : Advisory::weak_left;
}

FleetCommand fleet_baseline_advisories(const FleetState& x, const AircraftConfig& cfg) {
  FleetCommand cmd = all_clear(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double best_distance = kInf;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == i) continue;
      const Advisory a = pairwise_advisory(x.aircraft[i], x.aircraft[j], cfg);
      if (a == Advisory::clear_of_conflict) continue;
      const double d = distance(x.aircraft[i].position, x.aircraft[j].position);
      if (d < best_distance) {  // strict: equal distances keep the lower index
        best_distance = d;
        cmd.advisories[i] = a;
      }
    }
  }
  return cmd;
}

namespace {

// Trailing-window test shared by the rollout stopping rule and the checker:
// every commanded rate zero, every pairwise distance strictly increasing,
// and the final constant-velocity closest approach at or above the safety
// distance for every pair.
bool straight_diverging_tail(const std::vector<FleetState>& states,
                             const std::vector<std::vector<double>>& rates,
                             const AircraftConfig& cfg, std::string* why = nullptr,
                             std::pair<int, int>* pair_out = nullptr) {
  const int window = std::max(1, static_cast<int>(std::lround(cfg.divergence_window / cfg.substep)));
  if (static_cast<int>(states.size()) < window + 1 ||
      static_cast<int>(rates.size()) < window) {
    if (why) *why = "trace shorter than divergence window";
    return false;
  }
  const std::size_t n = states.back().size();

  for (std::size_t s = rates.size() - window; s < rates.size(); ++s) {
    for (double r : rates[s]) {
      if (r != 0.0) {
        if (why) *why = "commanded turn inside divergence window";
        return false;
      }
    }
  }
  for (std::size_t s = states.size() - window; s < states.size(); ++s) {
    const auto& prev = states[s - 1].aircraft;
    const auto& cur = states[s].aircraft;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!(distance(cur[i].position, cur[j].position) >
              distance(prev[i].position, prev[j].position))) {
          if (why) *why = "pairwise distance not strictly increasing";
          if (pair_out) *pair_out = {static_cast<int>(i), static_cast<int>(j)};
          return false;
        }
      }
    }
  }

  const auto& fin = states.back().aircraft;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 vi = fin[i].speed * Vec2{std::cos(fin[i].heading), std::sin(fin[i].heading)};
      const Vec2 vj = fin[j].speed * Vec2{std::cos(fin[j].heading), std::sin(fin[j].heading)};
      const auto cpa =
          safety::min_future_distance(fin[i].position, vi, fin[j].position, vj);
      if (cpa.distance < cfg.safety_distance) {
        if (why) *why = "closest approach below safety distance";
        if (pair_out) *pair_out = {static_cast<int>(i), static_cast<int>(j)};
        return false;
      }
    }
  }
  return true;
}

struct TurnCircle {
  Vec2 center;
  double radius = 0.0;
  double omega = 0.0;  // signed rad/s
  double phase = 0.0;  // angle of (position - center)
};

TurnCircle turn_circle(const AircraftState& a, double rate_deg) {
  TurnCircle c;
  c.omega = deg_to_rad(rate_deg);
  const double signed_r = a.speed / c.omega;
  c.center = a.position + signed_r * Vec2{-std::sin(a.heading), std::cos(a.heading)};
  c.radius = std::abs(signed_r);
  const Vec2 rel = a.position - c.center;
  c.phase = std::atan2(rel.y, rel.x);
  return c;
}

// Guaranteed minimum distance, over all future time, between two aircraft
// locked on constant turns. Same signed rate: the relative vector rotates
// rigidly and the bound is exact; otherwise fall back to circle separation.
double turning_pair_min_distance(const TurnCircle& a, const TurnCircle& b) {
  const double dc = distance(a.center, b.center);
  if (a.omega == b.omega) {
    const Vec2 ra{a.radius * std::cos(a.phase), a.radius * std::sin(a.phase)};
    const Vec2 rb{b.radius * std::cos(b.phase), b.radius * std::sin(b.phase)};
    return std::abs(dc - (ra - rb).norm());
  }
  return dc - a.radius - b.radius;
}

}  // namespace

CommandSequence<FleetCommand> aircraft_lookahead_baseline(const FleetState& x,
                                                          const FleetCommand& z,
                                                          const AircraftConfig& cfg) {
  std::vector<FleetCommand> cmds;
  cmds.push_back(z);

  std::vector<FleetState> states{x};
  std::vector<std::vector<double>> rates;

  FleetState cur = x;
  double elapsed = 0.0;
  const FleetCommand* next_cmd = &z;
  FleetCommand advisory_cmd;
  while (true) {
    const SubstepTrace t = advance_fleet(cur, *next_cmd, cfg, cfg.decision_period);
    states.insert(states.end(), t.states.begin(), t.states.end());
    rates.insert(rates.end(), t.rates.begin(), t.rates.end());
    cur = states.back();
    elapsed += cfg.decision_period;

    if (straight_diverging_tail(states, rates, cfg)) break;
    if (elapsed >= cfg.rollout_cap) break;  // checker will refuse it

    advisory_cmd = fleet_baseline_advisories(cur, cfg);
    cmds.push_back(advisory_cmd);
    next_cmd = &advisory_cmd;
  }
  return CommandSequence<FleetCommand>(std::move(cmds));
}

safety::SafetyVerdict aircraft_permanently_safe(const FleetState& x,
                                                const CommandSequence<FleetCommand>& seq,
                                                const AircraftConfig& cfg) {
  using Reason = safety::SafetyVerdict::Reason;

  if (min_pairwise_distance(x) < cfg.safety_distance) {
    safety::SafetyVerdict v{false, Reason::distance_violation};
    v.step = 0;
    v.distance = min_pairwise_distance(x);
    return v;
  }

  std::vector<FleetState> states{x};
  std::vector<std::vector<double>> rates;
  FleetState cur = x;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const SubstepTrace t = advance_fleet(cur, seq[k], cfg, cfg.decision_period);
    if (t.min_separation < cfg.safety_distance) {
      safety::SafetyVerdict v{false, Reason::distance_violation};
      v.step = static_cast<int>(k);
      v.distance = t.min_separation;
      return v;
    }
    states.insert(states.end(), t.states.begin(), t.states.end());
    rates.insert(rates.end(), t.rates.begin(), t.rates.end());
    cur = states.back();
  }

  const FleetCommand& last = seq.last();
  const bool all_turn =
      std::none_of(last.advisories.begin(), last.advisories.end(),
                   [](Advisory a) { return a == Advisory::clear_of_conflict; });
  const bool all_waypoint =
      std::all_of(last.advisories.begin(), last.advisories.end(),
                  [](Advisory a) { return a == Advisory::clear_of_conflict; });

  if (all_turn) {
    // Repeating the final command forever pins every aircraft to a circle;
    // bound the pairwise distances over that whole future.
    const auto& fin = states.back().aircraft;
    for (std::size_t i = 0; i < fin.size(); ++i) {
      const TurnCircle ci = turn_circle(fin[i], cfg.turn_rate_deg(last.advisories[i]));
      for (std::size_t j = i + 1; j < fin.size(); ++j) {
        const TurnCircle cj = turn_circle(fin[j], cfg.turn_rate_deg(last.advisories[j]));
        const double guaranteed = turning_pair_min_distance(ci, cj);
        if (guaranteed < cfg.safety_distance) {
          safety::SafetyVerdict v{false, Reason::converging_final_rays};
          v.agents = {static_cast<int>(i), static_cast<int>(j)};
          v.distance = guaranteed;
          v.detail = "turn_circles";
          return v;
        }
      }
    }
    return safety::SafetyVerdict::ok();
  }

  if (all_waypoint) {
    std::string why;
    std::pair<int, int> pair{-1, -1};
    if (!straight_diverging_tail(states, rates, cfg, &why, &pair)) {
      safety::SafetyVerdict v{false,
                              pair.first >= 0 ? Reason::converging_final_rays
                                              : Reason::horizon_error};
      v.agents = pair;
      v.detail = why;
      return v;
    }
    return safety::SafetyVerdict::ok();
  }

  safety::SafetyVerdict v{false, Reason::horizon_error};
  v.detail = "final command mixes turns and waypoint-following";
  return v;
}

CommandSequence<FleetCommand> initial_circles_plan(const FleetState& x,
                                                   const AircraftConfig& cfg) {
  auto plan = CommandSequence<FleetCommand>::single(
      FleetCommand{std::vector<Advisory>(x.size(), Advisory::strong_right)});
  const auto verdict = aircraft_permanently_safe(x, plan, cfg);
  if (!verdict.accepted) {
    throw ConfigError("clockwise-circles plan cannot be certified: " + verdict.describe());
  }
  return plan;
}

AircraftScenarioSetup make_circle_fleet(const AircraftConfig& cfg) {
  cfg.validate();
  AircraftConfig config = cfg;
  FleetState state;
  const double radius = cfg.circle_diameter / 2.0;
  state.aircraft.resize(cfg.n);
  const bool fill_waypoints = config.waypoints.empty();
  if (fill_waypoints) config.waypoints.resize(cfg.n);
  for (int k = 0; k < cfg.n; ++k) {
    const double phi = 2.0 * M_PI * k / cfg.n;
    const Vec2 radial{std::cos(phi), std::sin(phi)};
    state.aircraft[k].position = radius * radial;
    state.aircraft[k].heading = wrap_angle(phi + M_PI);  // facing the center
    state.aircraft[k].speed = cfg.speed;
    if (fill_waypoints) {
      // Past the opposite side, far enough that no run reaches it.
      config.waypoints[k] = -(radius + 2.0 * cfg.circle_diameter) * radial;
    }
  }
  auto plan = initial_circles_plan(state, config);
  return {std::move(state), std::move(config), std::move(plan)};
}

Plant<FleetState, FleetCommand> make_plant(const AircraftConfig& cfg,
                                           std::vector<double>* substep_minima) {
  Plant<FleetState, FleetCommand> plant;
  plant.step = [cfg, substep_minima](const FleetState& x, const FleetCommand& u,
                                     std::span<const double>) {
    const SubstepTrace t = advance_fleet(x, u, cfg, cfg.decision_period);
    if (substep_minima) substep_minima->push_back(t.min_separation);
    return t.states.back();
  };
  plant.admissible = [cfg](const FleetState& x) {
    return min_pairwise_distance(x) >= cfg.safety_distance;
  };
  return plant;
}

AdvancedController<FleetState, FleetCommand> make_advanced(const AircraftConfig& cfg) {
  (void)cfg;
  return [](const FleetState& x, std::size_t) -> std::optional<FleetCommand> {
    return all_clear(x.size());
  };
}

LookaheadController<FleetState, FleetCommand> make_lookahead(const AircraftConfig& cfg) {
  return [cfg](const FleetState& x, const FleetCommand& z,
               std::size_t) -> std::optional<CommandSequence<FleetCommand>> {
    return aircraft_lookahead_baseline(x, z, cfg);
  };
}

SafetyChecker<FleetState, FleetCommand> make_checker(const AircraftConfig& cfg,
                                                     std::chrono::microseconds budget) {
  SafetyChecker<FleetState, FleetCommand> checker;
  checker.check_budget = budget;
  checker.is_permanently_safe = [cfg](const FleetState& x,
                                      const CommandSequence<FleetCommand>& seq) {
    try {
      const auto v = aircraft_permanently_safe(x, seq, cfg);
      return CheckResult{v.accepted, v.describe()};
    } catch (const std::exception& e) {
      return CheckResult{false, std::string("invalid_proposal: ") + e.what()};
    }
  };
  return checker;
}

}  // namespace bbsim::aircraft
