#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbsim/decision.hpp"

namespace bbsim {

/// Raised when a run cannot even start (inadmissible initial state or an
/// initial plan the checker does not certify).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete-time plant. disturbance_dim components are drawn uniformly from
/// [-disturbance_halfwidth, +disturbance_halfwidth] each step; a zero dim or
/// half-width makes the plant deterministic.
template <typename State, typename Command>
struct Plant {
  std::function<State(const State&, const Command&, std::span<const double>)> step;
  std::function<bool(const State&)> admissible;
  std::size_t disturbance_dim = 0;
  double disturbance_halfwidth = 0.0;
};

/// Controllers may fail to produce output (nullopt), which the kernel treats
/// the same as a budget overrun: the stored plan continues.
template <typename State, typename Command>
using AdvancedController =
    std::function<std::optional<Command>(const State&, std::size_t step)>;

template <typename State, typename Command>
using LookaheadController = std::function<std::optional<CommandSequence<Command>>(
    const State&, const Command&, std::size_t step)>;

// ---------------------------------------------------------------------------
// Fault injection

enum class FaultKind { corrupt, hang, garbage };

inline const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::corrupt: return "corrupt";
    case FaultKind::hang: return "hang";
    case FaultKind::garbage: return "garbage";
  }
  return "?";
}

/// Step-indexed fault plan for one controller. Ranges are inclusive; an
/// open range ({from, npos}) applies from `from` onward.
class FaultSchedule {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  void add(std::size_t step, FaultKind kind) { ranges_.push_back({step, step, kind}); }
  void add_range(std::size_t from, std::size_t to, FaultKind kind) {
    ranges_.push_back({from, to, kind});
  }

  std::optional<FaultKind> at(std::size_t step) const {
    for (const auto& r : ranges_) {
      if (step >= r.from && step <= r.to) return r.kind;
    }
    return std::nullopt;
  }

  bool empty() const { return ranges_.empty(); }

 private:
  struct Range {
    std::size_t from;
    std::size_t to;
    FaultKind kind;
  };
  std::vector<Range> ranges_;
};

// ---------------------------------------------------------------------------
// Execution

struct ExecutionConfig {
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;
  /// Wall-clock budget for each controller invocation; <= 0 means unlimited.
  std::chrono::microseconds controller_budget{0};
  /// Test mode: re-validate the stored sequence against the checker after
  /// every step (the kernel invariant made explicit).
  bool recheck_stored = false;
};

template <typename State, typename Command>
struct StepRecord {
  std::size_t step_index = 0;
  State state_before{};
  State state_after{};
  std::optional<Command> advanced;                      // z_i, absent on controller timeout
  std::optional<CommandSequence<Command>> proposal;     // t_i, absent on controller timeout
  Verdict verdict = Verdict::rejected;
  std::string reason;
  Command applied{};
  bool reverse_switch = false;
  std::chrono::microseconds dm_elapsed{0};
};

template <typename State, typename Command>
struct ExecutionResult {
  std::vector<StepRecord<State, Command>> records;
  DecisionStats stats;
  State final_state{};
  CommandSequence<Command> final_plan;
  bool safety_violation = false;
  std::size_t violation_step = 0;
  std::optional<std::string> abort_reason;
};

namespace detail {

// splitmix64; cheap seeded stream independent of libstdc++ distributions so
// identical seeds replay bit-for-bit.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Mix a role/step into a run seed; used so each controller invocation gets
/// an independent but replayable random stream.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t salt) {
  std::uint64_t s = run_seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  return detail::splitmix64(s);
}

/// Execute the decision-module loop for n_steps from x0.
///
/// Per step: (1) query the advanced controller, (2) query the look-ahead
/// baseline for a proposal starting with the advanced command, (3) dm_update
/// against the checker, (4) dm_step pops the command to apply, (5) the plant
/// advances under that command and a seeded disturbance. A controller that
/// returns nothing or overruns its budget forfeits the step: the stored plan
/// continues unchanged.
///
/// Throws ConfigError if x0 is inadmissible or the initial plan fails the
/// checker. A plant admissibility violation mid-run (impossible with a sound
/// checker; this is the regression alarm) stops the run and is flagged.
template <typename State, typename Command>
ExecutionResult<State, Command> run_execution(
    const State& x0,
    const CommandSequence<Command>& initial_plan,
    const AdvancedController<State, Command>& advanced,
    const LookaheadController<State, Command>& lookahead,
    const Plant<State, Command>& plant,
    const SafetyChecker<State, Command>& checker,
    const ExecutionConfig& config) {
  if (!plant.admissible(x0)) {
    throw ConfigError("initial state is not admissible");
  }
  {
    // Startup validation runs without a budget: a plan we cannot certify is
    // a configuration error, not a runtime fallback.
    CheckResult r = checker.is_permanently_safe(x0, initial_plan);
    if (!r.accepted) {
      throw ConfigError("initial plan is not permanently safe: " + r.reason);
    }
  }

  ExecutionResult<State, Command> result{.final_plan = initial_plan};
  result.records.reserve(config.n_steps);

  State x = x0;
  CommandSequence<Command> stored = initial_plan;
  std::uint64_t rng = derive_seed(config.seed, 0xd15);
  bool prev_accepted = true;

  std::vector<double> w(plant.disturbance_dim, 0.0);

  for (std::size_t i = 0; i < config.n_steps; ++i) {
    StepRecord<State, Command> rec;
    rec.step_index = i;
    rec.state_before = x;

    // budgeted_call wraps the controller's own optional: the outer layer is
    // the budget, the inner layer the controller declining to answer.
    auto z_raw = budgeted_call(
        [&advanced, x, i]() { return advanced(x, i); }, config.controller_budget);
    if (z_raw.has_value() && z_raw->has_value()) rec.advanced = **z_raw;

    std::optional<CommandSequence<Command>> proposal;
    if (rec.advanced.has_value()) {
      Command zv = *rec.advanced;
      auto t_raw = budgeted_call(
          [&lookahead, x, zv, i]() { return lookahead(x, zv, i); },
          config.controller_budget);
      if (t_raw.has_value() && t_raw->has_value()) proposal = **t_raw;
    }
    rec.proposal = proposal;

    if (proposal.has_value()) {
      UpdateOutcome<Command> out = dm_update(x, stored, *proposal, checker);
      stored = out.sequence;
      rec.verdict = out.verdict;
      rec.reason = out.reason;
      rec.dm_elapsed = out.elapsed;
    } else {
      rec.verdict = Verdict::timed_out;
      rec.reason = "controller_timeout";
    }

    switch (rec.verdict) {
      case Verdict::accepted: result.stats.accepts++; break;
      case Verdict::rejected: result.stats.rejects++; break;
      case Verdict::timed_out: result.stats.timeouts++; break;
    }
    rec.reverse_switch = (rec.verdict == Verdict::accepted) && !prev_accepted;
    if (rec.reverse_switch) result.stats.reverse_switches++;
    prev_accepted = (rec.verdict == Verdict::accepted);

    auto [u, next_plan] = dm_step(stored);
    stored = next_plan;
    rec.applied = u;

    // Disturbance samples are drawn every step regardless of the verdict so
    // the stream does not shift with accept/reject history.
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = (2.0 * detail::uniform_unit(rng) - 1.0) * plant.disturbance_halfwidth;
    }

    try {
      x = plant.step(x, u, std::span<const double>(w));
    } catch (const std::exception& e) {
      rec.state_after = x;
      result.records.push_back(std::move(rec));
      result.abort_reason = std::string("plant step failed: ") + e.what();
      break;
    }
    rec.state_after = x;

    if (!plant.admissible(x)) {
      result.safety_violation = true;
      result.violation_step = i;
      result.records.push_back(std::move(rec));
      break;
    }

    if (config.recheck_stored) {
      CheckResult r = checker.is_permanently_safe(x, stored);
      if (!r.accepted) {
        result.records.push_back(std::move(rec));
        result.abort_reason = "kernel invariant lost: stored sequence no longer certified (" +
                              r.reason + ")";
        break;
      }
    }

    result.records.push_back(std::move(rec));
  }

  result.final_state = x;
  result.final_plan = stored;
  return result;
}

}  // namespace bbsim
