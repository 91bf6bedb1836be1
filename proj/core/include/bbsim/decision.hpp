#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>

#include "bbsim/command_sequence.hpp"

namespace bbsim {

enum class Verdict { accepted, rejected, timed_out };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::accepted: return "accepted";
    case Verdict::rejected: return "rejected";
    case Verdict::timed_out: return "timed_out";
  }
  return "?";
}

/// Outcome of a permanent-safety check.
struct CheckResult {
  bool accepted = false;
  std::string reason;  // "ok" when accepted, otherwise a diagnostic tag
};

/// Run fn with a wall-clock budget. The call executes on a detached worker
/// so the caller can stop waiting once the budget elapses; an abandoned
/// invocation keeps running but owns only copies of its inputs and cannot
/// touch caller state. budget <= 0 means no limit (synchronous call).
template <typename F>
auto budgeted_call(F&& fn, std::chrono::microseconds budget)
    -> std::optional<std::invoke_result_t<F&>> {
  using R = std::invoke_result_t<F&>;
  if (budget.count() <= 0) {
    return std::optional<R>(fn());
  }
  std::packaged_task<R()> task(std::forward<F>(fn));
  auto future = task.get_future();
  std::thread(std::move(task)).detach();
  if (future.wait_for(budget) != std::future_status::ready) {
    return std::nullopt;
  }
  return std::optional<R>(future.get());
}

/// Permanently-safe checker plus its per-call wall-clock budget.
/// Soundness contract: is_permanently_safe may return accepted only if the
/// sequence keeps the plant admissible forever from x (conservative
/// rejections are allowed).
template <typename State, typename Command>
struct SafetyChecker {
  std::function<CheckResult(const State&, const CommandSequence<Command>&)> is_permanently_safe;
  std::chrono::microseconds check_budget{0};  // <= 0: unlimited
};

struct DecisionStats {
  long accepts = 0;
  long rejects = 0;
  long timeouts = 0;
  long reverse_switches = 0;
};

template <typename Command>
struct UpdateOutcome {
  CommandSequence<Command> sequence;
  Verdict verdict;
  std::string reason;
  std::chrono::microseconds elapsed{0};
};

/// Replace the stored sequence with the proposal iff the checker accepts it
/// within budget. On rejection or timeout the stored sequence is kept.
template <typename State, typename Command>
UpdateOutcome<Command> dm_update(const State& x,
                                 const CommandSequence<Command>& stored,
                                 const CommandSequence<Command>& proposed,
                                 const SafetyChecker<State, Command>& checker) {
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<CheckResult> result = budgeted_call(
      [&checker, x, proposed]() { return checker.is_permanently_safe(x, proposed); },
      checker.check_budget);
  const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - t0);

  if (!result.has_value()) {
    return {stored, Verdict::timed_out, "timeout", elapsed};
  }
  if (result->accepted) {
    return {proposed, Verdict::accepted, "ok", elapsed};
  }
  return {stored, Verdict::rejected, result->reason, elapsed};
}

}  // namespace bbsim
