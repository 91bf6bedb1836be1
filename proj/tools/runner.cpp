#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bbsim/safety.hpp"
#include "svg.hpp"

namespace bbsim::cli {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

mas::MasState build_mas_state(const ScenarioConfig& cfg) {
  if (cfg.layout == MasLayout::circle) {
    return mas::make_circle_scenario(cfg.mas_n, cfg.mas_radius, cfg.mas_params).state;
  }
  mas::MasState x;
  x.agents = cfg.custom_agents;
  x.targets = cfg.custom_targets;
  x.circle_center = cfg.custom_center;
  if (x.size() < 2) throw ConfigError("custom layout needs at least 2 agents");
  return x;
}

template <typename State, typename Command>
void fill_timing(const ExecutionResult<State, Command>& result, nlohmann::json& out) {
  std::vector<double> us;
  us.reserve(result.records.size());
  for (const auto& rec : result.records) {
    us.push_back(double(rec.dm_elapsed.count()));
  }
  if (us.empty()) return;
  std::sort(us.begin(), us.end());
  out["dm_update_us"] = {
      {"p50", us[us.size() / 2]},
      {"p95", us[std::min(us.size() - 1, (us.size() * 95) / 100)]},
      {"max", us.back()},
  };
}

}  // namespace

bool RunData::safety_violation() const {
  if (mas && mas->safety_violation) return true;
  if (air && air->safety_violation) return true;
  for (double m : air_substep_minima) {
    if (m < air_cfg.safety_distance) return true;
  }
  // Raw runs have no decision module; a violation is expected content, not a
  // malfunction, so it is reported in the summary but not here.
  return false;
}

MinSeparation RunData::min_separation() const {
  MinSeparation best{std::numeric_limits<double>::infinity(), 0, {-1, -1}};
  auto consider = [&best](const auto& agents, std::size_t step, auto position_of) {
    for (std::size_t i = 0; i < agents.size(); ++i) {
      for (std::size_t j = i + 1; j < agents.size(); ++j) {
        const double d = distance(position_of(agents[i]), position_of(agents[j]));
        if (d < best.value) {
          best = {d, step, {int(i), int(j)}};
        }
      }
    }
  };

  if (mas) {
    consider(mas_initial->agents, 0, [](const mas::AgentState& a) { return a.pos; });
    for (std::size_t k = 0; k < mas->records.size(); ++k) {
      consider(mas->records[k].state_after.agents, k + 1,
               [](const mas::AgentState& a) { return a.pos; });
    }
  } else if (air) {
    consider(air_initial->aircraft, 0,
             [](const aircraft::AircraftState& a) { return a.position; });
    for (std::size_t k = 0; k < air->records.size(); ++k) {
      consider(air->records[k].state_after.aircraft, k + 1,
               [](const aircraft::AircraftState& a) { return a.position; });
    }
  } else {
    for (std::size_t k = 0; k < raw_states.size(); ++k) {
      consider(raw_states[k].aircraft, k,
               [](const aircraft::AircraftState& a) { return a.position; });
    }
  }
  return best;
}

double RunData::min_substep_separation() const {
  double best = std::numeric_limits<double>::infinity();
  const auto& minima = raw_states.empty() ? air_substep_minima : raw_substep_minima;
  best = std::min(best, min_separation().value);
  for (double m : minima) best = std::min(best, m);
  return best;
}

RunData run_scenario(const ScenarioConfig& config) {
  RunData data;
  data.config = config;
  const auto t0 = std::chrono::steady_clock::now();

  if (config.case_study == CaseStudy::mas || config.case_study == CaseStudy::mas_uncertain) {
    const mas::MasState x0 = build_mas_state(config);
    data.mas_initial = x0;

    const bool uncertain = config.case_study == CaseStudy::mas_uncertain;
    auto plant = mas::make_plant(x0.size(), config.mas_params,
                                 uncertain ? config.uncertainty.disturbance_bound : 0.0);
    SafetyChecker<mas::MasState, mas::MasCommand> checker =
        uncertain ? reach::make_uncertain_checker(config.mas_params, config.uncertainty,
                                                  config.check_budget())
                  : safety::make_mas_checker(config.mas_params, config.check_budget());

    auto plan = CommandSequence<mas::MasCommand>::single(mas::zero_command(x0.size()));
    ExecutionConfig run_cfg{.n_steps = config.n_steps,
                            .seed = config.seed,
                            .controller_budget = config.controller_budget(),
                            .recheck_stored = config.recheck_stored};
    data.mas = run_execution(x0, plan,
                             mas::make_advanced(config.mas_params, config.seed,
                                                config.fault_advanced),
                             mas::make_lookahead(config.mas_params, config.seed,
                                                 config.fault_baseline),
                             plant, checker, run_cfg);
  } else {
    auto setup = aircraft::make_circle_fleet(config.aircraft_cfg);
    data.air_cfg = setup.config;
    if (config.aircraft_simplex) {
      data.air_initial = setup.state;
      auto plant = aircraft::make_plant(setup.config, &data.air_substep_minima);
      ExecutionConfig run_cfg{.n_steps = config.n_steps,
                              .seed = config.seed,
                              .controller_budget = config.controller_budget()};
      auto checker = aircraft::make_checker(setup.config, config.check_budget());
      data.air = run_execution(setup.state, setup.initial_plan,
                               aircraft::make_advanced(setup.config),
                               aircraft::make_lookahead(setup.config), plant, checker, run_cfg);
    } else {
      // Raw mode: the multi-advisory baseline actuates the fleet directly.
      aircraft::FleetState x = setup.state;
      data.raw_states.push_back(x);
      for (std::size_t k = 0; k < config.n_steps; ++k) {
        const auto cmd = aircraft::fleet_baseline_advisories(x, setup.config);
        const auto trace =
            aircraft::advance_fleet(x, cmd, setup.config, setup.config.decision_period);
        x = trace.states.back();
        data.raw_commands.push_back(cmd);
        data.raw_states.push_back(x);
        data.raw_substep_minima.push_back(trace.min_separation);
      }
    }
  }

  data.total_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return data;
}

nlohmann::json summarize(const RunData& data) {
  nlohmann::json j;
  j["case_study"] = to_string(data.config.case_study);
  j["n_steps"] = data.config.n_steps;
  j["seed"] = data.config.seed;

  const MinSeparation ms = data.min_separation();
  j["min_separation"] = {{"value", ms.value},
                         {"step", ms.step},
                         {"pair", {ms.agents.first, ms.agents.second}}};

  nlohmann::json counts = {{"accepts", 0}, {"rejects", 0}, {"timeouts", 0},
                           {"reverse_switches", 0}};
  if (data.mas) {
    counts = {{"accepts", data.mas->stats.accepts},
              {"rejects", data.mas->stats.rejects},
              {"timeouts", data.mas->stats.timeouts},
              {"reverse_switches", data.mas->stats.reverse_switches}};
  } else if (data.air) {
    counts = {{"accepts", data.air->stats.accepts},
              {"rejects", data.air->stats.rejects},
              {"timeouts", data.air->stats.timeouts},
              {"reverse_switches", data.air->stats.reverse_switches}};
  }
  j["counts"] = counts;

  if (data.mas) {
    std::vector<bool> reached;
    const auto& fin = data.mas->final_state;
    for (std::size_t i = 0; i < fin.size(); ++i) {
      reached.push_back((fin.agents[i].pos - fin.targets[i]).norm() <=
                        data.config.mas_params.target_tolerance);
    }
    j["targets_reached"] = reached;
  } else {
    // An aircraft "reaches" its goal once it has crossed past the far rim of
    // the initial circle along its intended diameter.
    const aircraft::FleetState* start =
        data.air_initial ? &*data.air_initial : (data.raw_states.empty() ? nullptr
                                                                         : &data.raw_states[0]);
    const aircraft::FleetState* fin =
        data.air ? &data.air->final_state
                 : (data.raw_states.empty() ? nullptr : &data.raw_states.back());
    std::vector<bool> reached;
    if (start && fin) {
      for (std::size_t i = 0; i < fin->size(); ++i) {
        const Vec2 s = start->aircraft[i].position;
        const Vec2 dir = -1.0 * s;  // toward and past the antipode
        const double span = 2.0 * s.norm();
        const double progress = (fin->aircraft[i].position - s).dot(dir * (1.0 / dir.norm()));
        reached.push_back(progress >= span);
      }
    }
    j["targets_reached"] = reached;
    j["min_substep_separation"] = data.min_substep_separation();
  }

  j["safety_violation"] = data.safety_violation();
  if (!data.raw_states.empty()) {
    j["raw_baseline_violation"] =
        data.min_substep_separation() < data.air_cfg.safety_distance;
  }

  nlohmann::json timings;
  timings["total_ms"] = data.total_ms;
  if (data.mas) fill_timing(*data.mas, timings);
  if (data.air) fill_timing(*data.air, timings);
  j["timings"] = timings;
  return j;
}

std::string trajectory_csv(const RunData& data) {
  std::string out;
  if (data.mas) {
    out = "step,agent,px,py,vx,vy\n";
    auto emit = [&out](std::size_t step, const mas::MasState& s) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(step) + "," + std::to_string(i) + "," +
               fmt_double(s.agents[i].pos.x) + "," + fmt_double(s.agents[i].pos.y) + "," +
               fmt_double(s.agents[i].vel.x) + "," + fmt_double(s.agents[i].vel.y) + "\n";
      }
    };
    emit(0, *data.mas_initial);
    for (std::size_t k = 0; k < data.mas->records.size(); ++k) {
      emit(k + 1, data.mas->records[k].state_after);
    }
    return out;
  }

  out = "step,aircraft,px,py,heading,advisory\n";
  auto emit = [&out](std::size_t step, const aircraft::FleetState& s, const char* advisory,
                     const std::vector<aircraft::Advisory>* advisories) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += std::to_string(step) + "," + std::to_string(i) + "," +
             fmt_double(s.aircraft[i].position.x) + "," + fmt_double(s.aircraft[i].position.y) +
             "," + fmt_double(s.aircraft[i].heading) + "," +
             (advisories ? aircraft::to_string((*advisories)[i]) : advisory) + "\n";
    }
  };
  if (data.air) {
    for (std::size_t k = 0; k < data.air->records.size(); ++k) {
      emit(k, data.air->records[k].state_before, nullptr,
           &data.air->records[k].applied.advisories);
    }
    if (!data.air->records.empty()) {
      emit(data.air->records.size(), data.air->records.back().state_after, "-", nullptr);
    }
  } else {
    for (std::size_t k = 0; k < data.raw_commands.size(); ++k) {
      emit(k, data.raw_states[k], nullptr, &data.raw_commands[k].advisories);
    }
    if (!data.raw_states.empty()) {
      emit(data.raw_states.size() - 1, data.raw_states.back(), "-", nullptr);
    }
  }
  return out;
}

std::string decisions_csv(const RunData& data) {
  std::string out = "step,verdict,reason,reverse_switch\n";
  auto emit = [&out](const auto& records) {
    for (const auto& rec : records) {
      out += std::to_string(rec.step_index) + "," + to_string(rec.verdict) + "," +
             (rec.verdict == Verdict::accepted ? "ok" : rec.reason) + "," +
             (rec.reverse_switch ? "1" : "0") + "\n";
    }
  };
  if (data.mas) emit(data.mas->records);
  if (data.air) emit(data.air->records);
  return out;  // raw runs: header only, there is no decision module
}

void write_outputs(const RunData& data, const std::string& dir, bool svg) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const std::string& name, const std::string& content) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
    out << content;
  };
  write("trajectory.csv", trajectory_csv(data));
  write("decisions.csv", decisions_csv(data));
  write("summary.json", summarize(data).dump(2) + "\n");
  if (svg) write("run.svg", emit_plot(data));
}

}  // namespace bbsim::cli
