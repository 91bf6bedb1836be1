#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bbsim/aircraft.hpp"

using namespace bbsim;
using namespace bbsim::aircraft;

namespace {

AircraftConfig late_alert_config() {
  // Deliberately sluggish advisory thresholds: fine for two aircraft, known
  // to fail for three (the bundled raw-failure scenario uses these).
  AircraftConfig cfg;
  cfg.alert_distance = 3000.0;
  cfg.alert_time = 15.0;
  cfg.strong_time = 6.0;
  return cfg;
}

FleetState rotated(const FleetState& x, double angle) {
  FleetState out = x;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& a : out.aircraft) {
    a.position = {c * a.position.x - s * a.position.y, s * a.position.x + c * a.position.y};
    a.heading = wrap_angle(a.heading + angle);
  }
  return out;
}

}  // namespace

TEST_CASE("aircraft_step heading change is rate times time") {
  AircraftState x{{0, 0}, 0.0, 807.0};
  const auto next = aircraft_step(x, 1.5, 2.0);
  CHECK(rad_to_deg(next.heading) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("aircraft_step straight flight covers speed times time") {
  AircraftState x{{0, 0}, 0.0, 807.0};
  const auto next = aircraft_step(x, 0.0, 2.0);
  CHECK(next.position.x == doctest::Approx(1614.0).epsilon(1e-12));
  CHECK(next.position.y == 0.0);
  CHECK(next.heading == 0.0);
}

TEST_CASE("aircraft_step 60 s at 3 deg/s reverses heading onto the circle's far side") {
  AircraftState x{{0, 0}, 0.0, 807.0};
  const auto exact = aircraft_step(x, 3.0, 60.0);
  CHECK(std::abs(wrap_angle(exact.heading - M_PI)) < 1e-12);

  // Oracle: fine-step Euler integration of the same kinematics.
  Vec2 p{0, 0};
  double h = 0.0;
  const double dt = 1e-4;
  const double omega = deg_to_rad(3.0);
  for (int k = 0; k < 600000; ++k) {
    p += 807.0 * dt * Vec2{std::cos(h), std::sin(h)};
    h += omega * dt;
  }
  CHECK((exact.position - p).norm() <= 1.0);

  const double turn_diameter = 2.0 * 807.0 / omega;
  CHECK(exact.position.y == doctest::Approx(turn_diameter).epsilon(1e-9));
}

TEST_CASE("aircraft_step rejects turn rates beyond the strong advisory") {
  AircraftState x{{0, 0}, 0.0, 807.0};
  CHECK_THROWS_AS(aircraft_step(x, 3.5, 1.0), std::invalid_argument);
}

TEST_CASE("advisory turn-rate mapping") {
  AircraftConfig cfg;
  CHECK(cfg.turn_rate_deg(Advisory::clear_of_conflict) == 0.0);
  CHECK(cfg.turn_rate_deg(Advisory::weak_left) == 1.5);
  CHECK(cfg.turn_rate_deg(Advisory::weak_right) == -1.5);
  CHECK(cfg.turn_rate_deg(Advisory::strong_left) == 3.0);
  CHECK(cfg.turn_rate_deg(Advisory::strong_right) == -3.0);
}

TEST_CASE("waypoint follower: deadband, clamp, and proportional band") {
  AircraftConfig cfg;
  AircraftState x{{0, 0}, 0.0, 807.0};
  CHECK(waypoint_turn_rate(x, {100000, 0}, cfg) == 0.0);  // aligned
  CHECK(waypoint_turn_rate(x, {0, 100000}, cfg) == cfg.strong_rate_deg);  // 90 deg left
  CHECK(waypoint_turn_rate(x, {0, -100000}, cfg) == -cfg.strong_rate_deg);
  const double small = waypoint_turn_rate(x, {100000, 1745}, cfg);  // ~1 degree off
  CHECK(small > 0.0);
  CHECK(small < cfg.strong_rate_deg);
}

TEST_CASE("pairwise advisory: receding distant intruder is clear of conflict") {
  AircraftConfig cfg;
  AircraftState own{{0, 0}, 0.0, 807.0};
  AircraftState intruder{{50000, 0}, 0.0, 807.0};  // same heading, ahead
  CHECK(pairwise_advisory(own, intruder, cfg) == Advisory::clear_of_conflict);
}

TEST_CASE("pairwise advisory: close head-on pair turns strongly and survives") {
  AircraftConfig cfg;
  AircraftState own{{0, 0}, 0.0, 807.0};
  AircraftState intruder{{10000, 0}, M_PI, 807.0};

  const Advisory a_own = pairwise_advisory(own, intruder, cfg);
  const Advisory a_int = pairwise_advisory(intruder, own, cfg);
  CHECK((a_own == Advisory::strong_left || a_own == Advisory::strong_right));
  CHECK((a_int == Advisory::strong_left || a_int == Advisory::strong_right));

  // Oracle: enumerate all 25 advisory pairs, simulate 60 s, and collect the
  // collision-free ones; the chosen pair must be among them.
  auto survives = [&](Advisory a, Advisory b) {
    AircraftState o = own, i = intruder;
    double min_d = distance(o.position, i.position);
    for (int k = 0; k < 600; ++k) {
      o = aircraft_step(o, cfg.turn_rate_deg(a), 0.1);
      i = aircraft_step(i, cfg.turn_rate_deg(b), 0.1);
      min_d = std::min(min_d, distance(o.position, i.position));
    }
    return min_d >= 500.0;
  };
  CHECK(survives(a_own, a_int));
  bool any_pair_survives = false;
  for (Advisory a : {Advisory::weak_left, Advisory::weak_right, Advisory::strong_left,
                     Advisory::strong_right}) {
    for (Advisory b : {Advisory::weak_left, Advisory::weak_right, Advisory::strong_left,
                       Advisory::strong_right}) {
      if (survives(a, b)) any_pair_survives = true;
    }
  }
  CHECK(any_pair_survives);
}

TEST_CASE("pairwise advisory: exact symmetric head-on breaks toward right turns") {
  AircraftConfig cfg;
  AircraftState own{{0, 0}, 0.0, 807.0};
  AircraftState intruder{{20000, 0}, M_PI, 807.0};
  CHECK(pairwise_advisory(own, intruder, cfg) == Advisory::strong_right);
  CHECK(pairwise_advisory(intruder, own, cfg) == Advisory::strong_right);
}

TEST_CASE("fleet advisories: distant fleet is all clear") {
  AircraftConfig cfg;
  cfg.n = 3;
  cfg.circle_diameter = 500000.0;
  auto setup = make_circle_fleet(cfg);
  const FleetCommand cmd = fleet_baseline_advisories(setup.state, setup.config);
  for (Advisory a : cmd.advisories) CHECK(a == Advisory::clear_of_conflict);
}

TEST_CASE("fleet advisories obey the nearest conflicting intruder") {
  AircraftConfig cfg = late_alert_config();
  // Ownship 0 heads east; 1 is a close head-on threat; 2 a distant one.
  FleetState x;
  x.aircraft = {{{0, 0}, 0.0, 807.0},
                {{9000, 200}, M_PI, 807.0},
                {{30000, -400}, M_PI, 807.0}};
  cfg.n = 3;
  cfg.waypoints = {{1e6, 0}, {-1e6, 0}, {-1e6, 0}};

  const FleetCommand cmd = fleet_baseline_advisories(x, cfg);

  // Oracle: re-evaluate the arbitration rule directly.
  for (int i = 0; i < 3; ++i) {
    Advisory expect = Advisory::clear_of_conflict;
    double best = 1e300;
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const Advisory a = pairwise_advisory(x.aircraft[i], x.aircraft[j], cfg);
      if (a == Advisory::clear_of_conflict) continue;
      const double d = distance(x.aircraft[i].position, x.aircraft[j].position);
      if (d < best) {
        best = d;
        expect = a;
      }
    }
    CHECK(cmd.advisories[i] == expect);
  }
  CHECK(cmd.advisories[0] != Advisory::clear_of_conflict);  // the close threat fires
}

TEST_CASE("look-ahead rollouts start with the advanced command") {
  AircraftConfig cfg;
  cfg.n = 3;
  auto setup = make_circle_fleet(cfg);
  const FleetCommand z = all_clear(3);
  const auto seq = aircraft_lookahead_baseline(setup.state, z, setup.config);
  CHECK(seq.head().advisories == z.advisories);
  CHECK(seq.size() >= 2);
}

TEST_CASE("look-ahead rollout of a far-apart fleet stays clear throughout") {
  AircraftConfig cfg;
  cfg.n = 2;
  cfg.circle_diameter = 400000.0;
  auto setup = make_circle_fleet(cfg);
  // Two aircraft facing each other across 400k ft: head-on but far; with the
  // default alert_time they stay clear for the whole divergence window only
  // after they pass, so just check the first commands are clear.
  const auto seq = aircraft_lookahead_baseline(setup.state, all_clear(2), setup.config);
  CHECK(seq.head().advisories == all_clear(2).advisories);
}

TEST_CASE("accepted rollouts end in a provably diverging configuration") {
  AircraftConfig cfg;
  cfg.n = 3;
  auto setup = make_circle_fleet(cfg);
  const auto seq = aircraft_lookahead_baseline(setup.state, all_clear(3), setup.config);
  const auto verdict = aircraft_permanently_safe(setup.state, seq, setup.config);
  CHECK(verdict.accepted);  // checker is the oracle for the rollout's ending
}

TEST_CASE("permanent safety: two aircraft flying apart accept") {
  AircraftConfig cfg;
  cfg.n = 2;
  cfg.waypoints = {{1e6, 5000}, {-1e6, -5000}};
  FleetState x;
  x.aircraft = {{{5000, 0}, 0.0, 807.0}, {{-5000, 0}, M_PI, 807.0}};
  const auto plan = CommandSequence<FleetCommand>(
      std::vector<FleetCommand>(5, all_clear(2)));
  const auto verdict = aircraft_permanently_safe(x, plan, cfg);
  CHECK(verdict.accepted);
}

TEST_CASE("permanent safety: separation dips reject at the first violating step") {
  AircraftConfig cfg;
  cfg.n = 2;
  cfg.waypoints = {{1e6, 0}, {-1e6, 0}};
  FleetState x;
  x.aircraft = {{{0, 0}, 0.0, 807.0}, {{10000, 100}, M_PI, 807.0}};  // collision course
  const auto plan = CommandSequence<FleetCommand>(
      std::vector<FleetCommand>(10, all_clear(2)));
  const auto verdict = aircraft_permanently_safe(x, plan, cfg);
  CHECK(!verdict.accepted);
  CHECK(verdict.reason == safety::SafetyVerdict::Reason::distance_violation);
}

TEST_CASE("permanent safety: mixed final commands are not analyzable") {
  AircraftConfig cfg;
  cfg.n = 2;
  cfg.circle_diameter = 300000.0;
  auto setup = make_circle_fleet(cfg);
  FleetCommand mixed{{Advisory::strong_right, Advisory::clear_of_conflict}};
  const auto verdict = aircraft_permanently_safe(
      setup.state, CommandSequence<FleetCommand>::single(mixed), setup.config);
  CHECK(!verdict.accepted);
  CHECK(verdict.reason == safety::SafetyVerdict::Reason::horizon_error);
}

TEST_CASE("circles plan certifies for the bundled fleet sizes") {
  for (int n : {1, 3, 4, 7, 15}) {
    AircraftConfig cfg;
    cfg.n = n;
    cfg.circle_diameter = (n == 4 || n == 7) ? 70000.0 : 90000.0;
    CHECK_NOTHROW(make_circle_fleet(cfg));
  }
}

TEST_CASE("circles plan: turn-circle geometry validates the 3-aircraft paper layout") {
  // Turn diameter at 807 ft/s and 3 deg/s is about 30,826 ft; gaps of about
  // 77,942 ft leave room for safety_distance + two turn diameters.
  AircraftConfig cfg;
  const double turn_diameter = 2.0 * cfg.turn_radius(cfg.strong_rate_deg);
  CHECK(turn_diameter == doctest::Approx(30826.0).epsilon(1e-3));
  const double gap = 90000.0 * std::sin(M_PI / 3.0);
  CHECK(gap == doctest::Approx(77942.0).epsilon(1e-3));
  CHECK(gap > cfg.safety_distance + 2.0 * turn_diameter);

  cfg.n = 3;
  cfg.circle_diameter = 90000.0;
  auto setup = make_circle_fleet(cfg);
  CHECK(setup.initial_plan.size() == 1);
  for (Advisory a : setup.initial_plan.head().advisories) {
    CHECK(a == Advisory::strong_right);
  }
}

TEST_CASE("circles plan: crowded asymmetric fleets are a configuration error") {
  AircraftConfig cfg;
  cfg.n = 2;
  cfg.waypoints = {{1e6, 0}, {-1e6, 0}};
  FleetState x;
  x.aircraft = {{{0, 0}, 0.0, 807.0}, {{2000, 0}, M_PI, 807.0}};
  CHECK_THROWS_AS(initial_circles_plan(x, cfg), ConfigError);
}

TEST_CASE("circles plan: single aircraft is trivially valid") {
  AircraftConfig cfg;
  cfg.n = 1;
  cfg.waypoints = {{1e6, 0}};
  FleetState x;
  x.aircraft = {{{0, 0}, 0.0, 807.0}};
  CHECK_NOTHROW(initial_circles_plan(x, cfg));
}

TEST_CASE("advisory logic is rotation-equivariant") {
  // A generic (asymmetric) converging fleet: exact pairwise ties would pin
  // the tie-break to floating-point noise, which rotation legitimately
  // perturbs, so keep the geometry away from those measure-zero cases.
  AircraftConfig cfg = late_alert_config();
  cfg.n = 3;
  FleetState start;
  start.aircraft.resize(3);
  cfg.waypoints.resize(3);
  const double angles_deg[3] = {3.0, 131.0, 247.0};
  const double radii[3] = {45000.0, 39000.0, 52000.0};  // no common crossing point
  for (int i = 0; i < 3; ++i) {
    const double phi = deg_to_rad(angles_deg[i]);
    start.aircraft[i].position = radii[i] * Vec2{std::cos(phi), std::sin(phi)};
    start.aircraft[i].heading = wrap_angle(phi + M_PI);
    start.aircraft[i].speed = cfg.speed;
    cfg.waypoints[i] = -3.0 * radii[i] * Vec2{std::cos(phi), std::sin(phi)};
  }

  const double angle = deg_to_rad(30.0);
  AircraftConfig cfg_rot = cfg;
  for (auto& w : cfg_rot.waypoints) {
    w = {std::cos(angle) * w.x - std::sin(angle) * w.y,
         std::sin(angle) * w.x + std::cos(angle) * w.y};
  }

  FleetState a = start;
  FleetState b = rotated(start, angle);
  int advisories_fired = 0;
  for (int k = 0; k < 40; ++k) {
    const FleetCommand ca = fleet_baseline_advisories(a, cfg);
    const FleetCommand cb = fleet_baseline_advisories(b, cfg_rot);
    REQUIRE(ca.advisories == cb.advisories);
    for (Advisory adv : ca.advisories) {
      if (adv != Advisory::clear_of_conflict) ++advisories_fired;
    }
    a = advance_fleet(a, ca, cfg, cfg.decision_period).states.back();
    b = advance_fleet(b, cb, cfg_rot, cfg_rot.decision_period).states.back();
    const FleetState a_rot = rotated(a, angle);
    for (int i = 0; i < 3; ++i) {
      CHECK((a_rot.aircraft[i].position - b.aircraft[i].position).norm() <
            1e-6 * (1.0 + a.aircraft[i].position.norm()));
    }
  }
  CHECK(advisories_fired > 0);  // the property must cover non-clear decisions
}

TEST_CASE("raw multi-advisory baseline fails where the simplex run stays safe") {
  AircraftConfig cfg = late_alert_config();
  cfg.n = 3;
  cfg.circle_diameter = 90000.0;
  auto setup = make_circle_fleet(cfg);

  // Raw mode: advisories actuated directly, no decision module.
  FleetState x = setup.state;
  double raw_min = min_pairwise_distance(x);
  for (int k = 0; k < 150; ++k) {
    const FleetCommand cmd = fleet_baseline_advisories(x, setup.config);
    const auto t = advance_fleet(x, cmd, setup.config, setup.config.decision_period);
    raw_min = std::min(raw_min, t.min_separation);
    x = t.states.back();
  }
  CHECK(raw_min < cfg.safety_distance);

  // Same scenario under the full architecture: never below 1500 ft at any
  // integration substep.
  std::vector<double> minima;
  auto plant = make_plant(setup.config, &minima);
  const auto res = run_execution(setup.state, setup.initial_plan, make_advanced(setup.config),
                                 make_lookahead(setup.config), plant, make_checker(setup.config),
                                 ExecutionConfig{.n_steps = 60, .seed = 1});
  CHECK(!res.safety_violation);
  for (double m : minima) CHECK(m >= cfg.safety_distance);
}
