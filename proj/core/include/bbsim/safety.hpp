#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "bbsim/decision.hpp"
#include "bbsim/geometry.hpp"
#include "bbsim/mas.hpp"

namespace bbsim::safety {

struct Ray {
  Vec2 origin;
  Vec2 direction;  // need not be unit length; zero direction = stationary point
};

/// Exact half-line intersection test, including collinear overlap and
/// degenerate (zero-direction) rays treated as points.
bool rays_intersect(const Ray& r1, const Ray& r2);

struct FutureClosest {
  double distance = 0.0;
  double time = 0.0;  // argmin over t >= 0
};

/// Closed-form minimum of ||(p2-p1) + t (v2-v1)|| over t >= 0. Independent
/// certificate that two constant-velocity agents never close below a bound.
FutureClosest min_future_distance(Vec2 p1, Vec2 v1, Vec2 p2, Vec2 v2);

/// Deterministic forward simulation; returns len(sequence)+1 states.
std::vector<mas::MasState> simulate_sequence(const mas::MasState& x,
                                             const CommandSequence<mas::MasCommand>& seq,
                                             const mas::MasParams& params);

struct SafetyVerdict {
  enum class Reason { ok, distance_violation, converging_final_rays, horizon_error };

  bool accepted = false;
  Reason reason = Reason::ok;
  int step = -1;                 // offending trajectory index, when applicable
  std::pair<int, int> agents{-1, -1};
  double distance = 0.0;
  std::string detail;

  const char* token() const;
  std::string describe() const;

  static SafetyVerdict ok() { return {true, Reason::ok}; }
};

/// Permanent-safety check for the multi-agent system: the simulated
/// trajectory keeps every pair at distance >= d_min (boundary inclusive), the
/// final velocity rays of every pair do not intersect, and the final
/// constant-velocity closest approach of every pair stays >= d_min. The
/// sequence must end with a zero command, otherwise the infinite tail is not
/// analyzable and the checker refuses.
SafetyVerdict mas_permanently_safe(const mas::MasState& x,
                                   const CommandSequence<mas::MasCommand>& seq,
                                   const mas::MasParams& params);

/// The check above wrapped as a decision-module checker; malformed proposals
/// (e.g. command-bound violations) reject rather than propagate.
SafetyChecker<mas::MasState, mas::MasCommand> make_mas_checker(
    const mas::MasParams& params, std::chrono::microseconds budget = std::chrono::microseconds{0});

}  // namespace bbsim::safety
