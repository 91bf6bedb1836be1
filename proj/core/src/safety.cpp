#include "bbsim/safety.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bbsim::safety {

bool rays_intersect(const Ray& r1, const Ray& r2) {
  const Vec2 d1 = r1.direction;
  const Vec2 d2 = r2.direction;
  const Vec2 delta = r2.origin - r1.origin;

  const bool point1 = (d1.x == 0.0 && d1.y == 0.0);
  const bool point2 = (d2.x == 0.0 && d2.y == 0.0);
  if (point1 && point2) return delta.x == 0.0 && delta.y == 0.0;
  if (point1 || point2) {
    // Point-on-ray: collinear with a nonnegative parameter.
    const Vec2 d = point1 ? d2 : d1;
    const Vec2 rel = point1 ? (r1.origin - r2.origin) : (r2.origin - r1.origin);
    return d.cross(rel) == 0.0 && rel.dot(d) >= 0.0;
  }

  const double denom = d1.cross(d2);
  if (denom != 0.0) {
    const double t1 = delta.cross(d2) / denom;
    const double t2 = delta.cross(d1) / denom;
    return t1 >= 0.0 && t2 >= 0.0;
  }

  // Parallel rays on distinct lines never meet.
  if (d1.cross(delta) != 0.0) return false;

  // Collinear: compare half-line coverage along d1. Co-directed half-lines
  // on one line always overlap; anti-directed ones overlap iff the second
  // ray starts at or ahead of the first ray's origin.
  if (d2.dot(d1) > 0.0) return true;
  return delta.dot(d1) >= 0.0;
}

FutureClosest min_future_distance(Vec2 p1, Vec2 v1, Vec2 p2, Vec2 v2) {
  const Vec2 dp = p2 - p1;
  const Vec2 dv = v2 - v1;
  const double dv2 = dv.squared_norm();
  double t = 0.0;
  if (dv2 > 0.0) t = std::max(0.0, -dp.dot(dv) / dv2);
  return {(dp + t * dv).norm(), t};
}

std::vector<mas::MasState> simulate_sequence(const mas::MasState& x,
                                             const CommandSequence<mas::MasCommand>& seq,
                                             const mas::MasParams& params) {
  std::vector<mas::MasState> states;
  states.reserve(seq.size() + 1);
  states.push_back(x);
  for (const auto& u : seq) {
    states.push_back(mas::mas_step(states.back(), u, params));
  }
  return states;
}

const char* SafetyVerdict::token() const {
  switch (reason) {
    case Reason::ok: return "ok";
    case Reason::distance_violation: return "distance_violation";
    case Reason::converging_final_rays: return "converging_final_rays";
    case Reason::horizon_error: return "horizon_error";
  }
  return "?";
}

// Comma-free by construction: these strings land in CSV fields unquoted.
std::string SafetyVerdict::describe() const {
  std::ostringstream os;
  os << token();
  if (reason == Reason::distance_violation) {
    os << " step=" << step << " pair=" << agents.first << "-" << agents.second
       << " distance=" << distance;
  } else if (reason == Reason::converging_final_rays) {
    os << " pair=" << agents.first << "-" << agents.second;
    if (!detail.empty()) os << " " << detail;
  } else if (!detail.empty()) {
    os << " " << detail;
  }
  return os.str();
}

SafetyVerdict mas_permanently_safe(const mas::MasState& x,
                                   const CommandSequence<mas::MasCommand>& seq,
                                   const mas::MasParams& params) {
  if (!mas::is_zero_command(seq.last())) {
    SafetyVerdict v{false, SafetyVerdict::Reason::horizon_error};
    v.detail = "sequence does not end with a zero command";
    return v;
  }

  const auto trajectory = simulate_sequence(x, seq, params);
  const int n = static_cast<int>(x.size());

  // Every simulated state keeps every pair at or above d_min. A single dip
  // rejects regardless of how the trajectory ends.
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    const auto& agents = trajectory[s].agents;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = distance(agents[i].pos, agents[j].pos);
        if (d < params.d_min) {
          SafetyVerdict v{false, SafetyVerdict::Reason::distance_violation};
          v.step = static_cast<int>(s);
          v.agents = {i, j};
          v.distance = d;
          return v;
        }
      }
    }
  }

  // Terminal state: the zero tail means constant velocities forever, so the
  // pairwise rays must not intersect and the closed-form closest approach
  // must stay at or above d_min. The second condition covers parallel rays
  // that close laterally, which the ray test alone cannot exclude.
  const auto& fin = trajectory.back().agents;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rays_intersect({fin[i].pos, fin[i].vel}, {fin[j].pos, fin[j].vel})) {
        SafetyVerdict v{false, SafetyVerdict::Reason::converging_final_rays};
        v.agents = {i, j};
        v.detail = "rays";
        return v;
      }
      const FutureClosest fc =
          min_future_distance(fin[i].pos, fin[i].vel, fin[j].pos, fin[j].vel);
      if (fc.distance < params.d_min) {
        SafetyVerdict v{false, SafetyVerdict::Reason::converging_final_rays};
        v.agents = {i, j};
        v.distance = fc.distance;
        v.detail = "closest_approach";
        return v;
      }
    }
  }

  return SafetyVerdict::ok();
}

SafetyChecker<mas::MasState, mas::MasCommand> make_mas_checker(
    const mas::MasParams& params, std::chrono::microseconds budget) {
  SafetyChecker<mas::MasState, mas::MasCommand> checker;
  checker.check_budget = budget;
  checker.is_permanently_safe = [params](const mas::MasState& x,
                                         const CommandSequence<mas::MasCommand>& seq) {
    try {
      const SafetyVerdict v = mas_permanently_safe(x, seq, params);
      return CheckResult{v.accepted, v.describe()};
    } catch (const std::exception& e) {
      return CheckResult{false, std::string("invalid_proposal: ") + e.what()};
    }
  };
  return checker;
}

}  // namespace bbsim::safety
