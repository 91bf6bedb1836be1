#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <thread>

#include "bbsim/command_sequence.hpp"
#include "bbsim/decision.hpp"
#include "bbsim/execution.hpp"

using namespace bbsim;
using namespace std::chrono_literals;

namespace {

CommandSequence<int> seq(std::vector<int> v) { return CommandSequence<int>(std::move(v)); }

// Reference semantics for the decision module, kept deliberately tiny and
// separate from the implementation under test.
std::pair<int, std::vector<int>> ref_dm_step(std::vector<int> s) {
  const int u = s.front();
  if (s.size() > 1) s.erase(s.begin());
  return {u, s};
}

template <typename Ok>
std::pair<std::vector<int>, bool> ref_dm_update(int x, std::vector<int> s,
                                                std::vector<int> t, Ok&& ok) {
  if (ok(x, t)) return {t, true};
  return {s, false};
}

// Toy plant for exercising the execution loop: integer position, bounded
// corridor, commands are velocity deltas applied directly.
struct ToyState {
  int pos = 0;
};

Plant<ToyState, int> toy_plant(int limit = 100) {
  Plant<ToyState, int> p;
  p.step = [](const ToyState& x, const int& u, std::span<const double>) {
    return ToyState{x.pos + u};
  };
  p.admissible = [limit](const ToyState& x) { return std::abs(x.pos) <= limit; };
  return p;
}

// A sequence is permanently safe here iff its rolled-out positions stay in
// the corridor and the repeated last command is 0 (otherwise the tail
// walks off the edge eventually).
SafetyChecker<ToyState, int> toy_checker(int limit = 100) {
  SafetyChecker<ToyState, int> c;
  c.is_permanently_safe = [limit](const ToyState& x, const CommandSequence<int>& s) {
    if (s.last() != 0) return CheckResult{false, "nonzero_tail"};
    int pos = x.pos;
    for (const int u : s) {
      pos += u;
      if (std::abs(pos) > limit) return CheckResult{false, "corridor"};
    }
    return CheckResult{true, "ok"};
  };
  return c;
}

}  // namespace

TEST_CASE("dm_step removes the first command") {
  auto [u, rest] = dm_step(seq({1, 2, 3}));
  CHECK(u == 1);
  CHECK(rest.commands() == std::vector<int>{2, 3});
}

TEST_CASE("dm_step repeats a single command") {
  auto [u, rest] = dm_step(seq({7}));
  CHECK(u == 7);
  CHECK(rest.commands() == std::vector<int>{7});
}

TEST_CASE("dm_step on a length-2 sequence") {
  auto [u, rest] = dm_step(seq({4, 9}));
  CHECK(u == 4);
  CHECK(rest.commands() == std::vector<int>{9});
}

TEST_CASE("empty command sequences are rejected at construction") {
  CHECK_THROWS_AS(seq({}), std::invalid_argument);
}

TEST_CASE("last_command_extension indexes into the infinite tail") {
  const auto s = seq({10, 20});
  CHECK(last_command_extension(s, 0) == 10);
  CHECK(last_command_extension(s, 1) == 20);
  CHECK(last_command_extension(s, 5) == 20);
  const auto one = seq({3});
  CHECK(last_command_extension(one, 3) == 3);
}

TEST_CASE("dm_step and dm_update match the reference on random sequences") {
  std::uint64_t rng = 20240601;
  auto ok = [](int x, const std::vector<int>& t) { return (x + int(t.size())) % 2 == 0; };

  for (int trial = 0; trial < 10000; ++trial) {
    const int len = 1 + int(detail::splitmix64(rng) % 8);
    std::vector<int> cmds(len);
    for (int& c : cmds) c = int(detail::splitmix64(rng) % 100) - 50;

    auto [u_ref, rest_ref] = ref_dm_step(cmds);
    auto [u_impl, rest_impl] = dm_step(seq(cmds));
    REQUIRE(u_impl == u_ref);
    REQUIRE(rest_impl.commands() == rest_ref);

    std::vector<int> proposal(1 + detail::splitmix64(rng) % 8);
    for (int& c : proposal) c = int(detail::splitmix64(rng) % 100) - 50;
    const int x = int(detail::splitmix64(rng) % 21) - 10;

    SafetyChecker<ToyState, int> checker;
    checker.is_permanently_safe = [&ok](const ToyState& s, const CommandSequence<int>& t) {
      return CheckResult{ok(s.pos, t.commands()), ""};
    };
    auto out = dm_update(ToyState{x}, seq(cmds), seq(proposal), checker);
    auto [ref_seq, ref_accepted] = ref_dm_update(x, cmds, proposal, ok);
    REQUIRE(out.sequence.commands() == ref_seq);
    REQUIRE((out.verdict == Verdict::accepted) == ref_accepted);
  }
}

TEST_CASE("dm_update keeps the stored sequence on rejection") {
  SafetyChecker<ToyState, int> reject_all;
  reject_all.is_permanently_safe = [](const ToyState&, const CommandSequence<int>&) {
    return CheckResult{false, "no"};
  };
  const auto out = dm_update(ToyState{0}, seq({1, 0}), seq({5, 0}), reject_all);
  CHECK(out.verdict == Verdict::rejected);
  CHECK(out.sequence.commands() == std::vector<int>{1, 0});
  CHECK(out.reason == "no");
}

TEST_CASE("dm_update treats a checker budget overrun as rejection") {
  SafetyChecker<ToyState, int> slow;
  slow.check_budget = 2ms;
  slow.is_permanently_safe = [](const ToyState&, const CommandSequence<int>&) {
    std::this_thread::sleep_for(100ms);
    return CheckResult{true, "ok"};
  };
  const auto out = dm_update(ToyState{0}, seq({1, 0}), seq({5, 0}), slow);
  CHECK(out.verdict == Verdict::timed_out);
  CHECK(out.sequence.commands() == std::vector<int>{1, 0});
  std::this_thread::sleep_for(150ms);  // let the abandoned worker finish
}

TEST_CASE("budgeted_call") {
  CHECK(budgeted_call([] { return 41 + 1; }, 0us) == 42);
  CHECK(budgeted_call([] { return 1; }, 500ms) == 1);
  auto slow = budgeted_call(
      [] {
        std::this_thread::sleep_for(100ms);
        return 1;
      },
      2ms);
  CHECK(!slow.has_value());
  std::this_thread::sleep_for(150ms);
}

TEST_CASE("fault schedules cover single steps and open ranges") {
  FaultSchedule f;
  f.add(3, FaultKind::hang);
  f.add_range(10, FaultSchedule::npos, FaultKind::corrupt);
  CHECK(!f.at(2).has_value());
  CHECK(f.at(3) == FaultKind::hang);
  CHECK(!f.at(4).has_value());
  CHECK(f.at(10) == FaultKind::corrupt);
  CHECK(f.at(100000) == FaultKind::corrupt);
}

TEST_CASE("execution applies the advanced command whenever proposals are accepted") {
  // ac asks to march right; lbc wraps it as [z, 0]; everything is safe until
  // the corridor edge, and this run stays far from it.
  AdvancedController<ToyState, int> ac = [](const ToyState&, std::size_t) {
    return std::optional<int>(1);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t) {
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  ExecutionConfig cfg{.n_steps = 20, .seed = 1};
  auto result = run_execution(ToyState{0}, seq({0}), ac, lbc, toy_plant(), toy_checker(), cfg);

  CHECK(result.stats.accepts == 20);
  CHECK(result.stats.rejects == 0);
  CHECK(result.final_state.pos == 20);
  for (const auto& rec : result.records) {
    CHECK(rec.verdict == Verdict::accepted);
    CHECK(rec.applied == *rec.advanced);  // transparency
  }
}

TEST_CASE("rejected steps fall back to the stored plan and recover later") {
  // The advanced controller goes haywire for steps 5..9: it proposes jumps
  // that leave the corridor, so the decision module pins the plant on the
  // stored plan; step 10 is sane again and control returns (reverse switch).
  AdvancedController<ToyState, int> ac = [](const ToyState&, std::size_t i) {
    return std::optional<int>(i >= 5 && i < 10 ? 1000 : 1);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t) {
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  ExecutionConfig cfg{.n_steps = 15, .seed = 1};
  auto result = run_execution(ToyState{0}, seq({0}), ac, lbc, toy_plant(), toy_checker(), cfg);

  CHECK(result.stats.rejects == 5);
  CHECK(result.stats.accepts == 10);
  CHECK(result.stats.reverse_switches == 1);
  CHECK(result.records[10].reverse_switch);

  // StepRecord consistency: accepted steps apply the proposal head; other
  // steps apply the head of the previous stored sequence.
  CommandSequence<int> stored = seq({0});
  for (const auto& rec : result.records) {
    if (rec.verdict == Verdict::accepted) {
      CHECK(rec.applied == rec.proposal->head());
      stored = *rec.proposal;
    } else {
      CHECK(rec.applied == stored.head());
    }
    stored = dm_step(stored).second;
  }
  CHECK(!result.safety_violation);
}

TEST_CASE("controller hang takes the default-command path") {
  AdvancedController<ToyState, int> ac = [](const ToyState&, std::size_t i) {
    return i == 2 ? std::nullopt : std::optional<int>(1);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t i) {
    if (i == 3) {
      std::this_thread::sleep_for(100ms);  // real overrun, abandoned by budget
    }
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  ExecutionConfig cfg{.n_steps = 5, .seed = 1, .controller_budget = 20ms};
  auto result = run_execution(ToyState{0}, seq({0}), ac, lbc, toy_plant(), toy_checker(), cfg);

  CHECK(result.stats.timeouts == 2);
  CHECK(result.records[2].verdict == Verdict::timed_out);
  CHECK(result.records[2].reason == "controller_timeout");
  CHECK(result.records[3].verdict == Verdict::timed_out);
  // Step 2's stored plan was [0]; nothing moves on a timed-out step here.
  CHECK(result.records[2].applied == 0);
  std::this_thread::sleep_for(150ms);
}

TEST_CASE("configuration errors are raised before step zero") {
  AdvancedController<ToyState, int> ac = [](const ToyState&, std::size_t) {
    return std::optional<int>(0);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t) {
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  ExecutionConfig cfg{.n_steps = 1, .seed = 1};
  CHECK_THROWS_AS(
      run_execution(ToyState{500}, seq({0}), ac, lbc, toy_plant(), toy_checker(), cfg),
      ConfigError);
  CHECK_THROWS_AS(
      run_execution(ToyState{0}, seq({1}), ac, lbc, toy_plant(), toy_checker(), cfg),
      ConfigError);
}

TEST_CASE("plant failures abort with a diagnostic") {
  AdvancedController<ToyState, int> ac = [](const ToyState&, std::size_t) {
    return std::optional<int>(1);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t) {
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  Plant<ToyState, int> plant = toy_plant();
  plant.step = [](const ToyState& x, const int& u, std::span<const double>) -> ToyState {
    if (x.pos >= 3) throw std::runtime_error("actuator loss");
    return ToyState{x.pos + u};
  };
  ExecutionConfig cfg{.n_steps = 10, .seed = 1};
  auto result = run_execution(ToyState{0}, seq({0}), ac, lbc, plant, toy_checker(), cfg);
  REQUIRE(result.abort_reason.has_value());
  CHECK(result.abort_reason->find("actuator loss") != std::string::npos);
  CHECK(result.records.size() == 4);
}

TEST_CASE("identical seeds replay identical executions") {
  // Disturbance-heavy plant: the applied trajectory depends on the sampled
  // stream, so equality across runs checks the whole seeding path.
  Plant<ToyState, int> plant = toy_plant(1000000);
  plant.disturbance_dim = 1;
  plant.disturbance_halfwidth = 10.0;
  plant.step = [](const ToyState& x, const int& u, std::span<const double> w) {
    return ToyState{x.pos + u + static_cast<int>(w[0])};
  };
  AdvancedController<ToyState, int> ac = [](const ToyState& x, std::size_t) {
    return std::optional<int>(x.pos % 3 - 1);
  };
  LookaheadController<ToyState, int> lbc = [](const ToyState&, const int& z, std::size_t) {
    return std::optional<CommandSequence<int>>(seq({z, 0}));
  };
  ExecutionConfig cfg{.n_steps = 50, .seed = 77};
  auto a = run_execution(ToyState{0}, seq({0}), ac, lbc, plant, toy_checker(1000000), cfg);
  auto b = run_execution(ToyState{0}, seq({0}), ac, lbc, plant, toy_checker(1000000), cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].applied == b.records[i].applied);
    CHECK(a.records[i].state_after.pos == b.records[i].state_after.pos);
    CHECK(a.records[i].verdict == b.records[i].verdict);
  }

  ExecutionConfig other{.n_steps = 50, .seed = 78};
  auto c = run_execution(ToyState{0}, seq({0}), ac, lbc, plant, toy_checker(1000000), other);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (a.records[i].state_after.pos != c.records[i].state_after.pos) any_difference = true;
  }
  CHECK(any_difference);
}
