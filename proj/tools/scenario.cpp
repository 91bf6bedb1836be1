#include "scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bbsim::cli {

const char* to_string(CaseStudy c) {
  switch (c) {
    case CaseStudy::mas: return "mas";
    case CaseStudy::mas_uncertain: return "mas_uncertain";
    case CaseStudy::aircraft: return "aircraft";
  }
  return "?";
}

std::chrono::microseconds ScenarioConfig::check_budget() const {
  const double ms = check_budget_ms < 0.0 ? 1000.0 * plant_period_seconds() : check_budget_ms;
  return std::chrono::microseconds(static_cast<long long>(ms * 1000.0));
}

std::chrono::microseconds ScenarioConfig::controller_budget() const {
  const double ms =
      controller_budget_ms < 0.0 ? 1000.0 * plant_period_seconds() : controller_budget_ms;
  return std::chrono::microseconds(static_cast<long long>(ms * 1000.0));
}

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

using Section = std::map<std::string, RawEntry>;
using Document = std::map<std::string, Section>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Document parse_document(const std::string& text, const std::string& origin) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw SchemaError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw SchemaError(origin + ":" + std::to_string(lineno) + ": empty section name");
      }
      doc.try_emplace(section);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw SchemaError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw SchemaError(origin + ":" + std::to_string(lineno) + ": key outside any section");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw SchemaError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    auto [it, inserted] = doc[section].try_emplace(key, RawEntry{value, lineno});
    if (!inserted) {
      throw SchemaError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                        "' in [" + section + "]");
    }
  }
  return doc;
}

class Reader {
 public:
  Reader(Document doc, std::string origin) : doc_(std::move(doc)), origin_(std::move(origin)) {}

  bool has_section(const std::string& s) const { return doc_.count(s) > 0; }

  std::string where(const std::string& section, const RawEntry& e) const {
    return origin_ + ":" + std::to_string(e.line) + " [" + section + "]";
  }

  template <typename F>
  void take(const std::string& section, const std::string& key, F&& apply) {
    auto sec = doc_.find(section);
    if (sec == doc_.end()) return;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return;
    it->second.used = true;
    try {
      apply(it->second.value);
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(where(section, it->second) + " " + key + ": " + e.what());
    }
  }

  // Dynamic keys (fault steps, agent lists): hand every key that no take()
  // call claimed to the handler, which must reject ones it does not know.
  template <typename F>
  void take_unused(const std::string& section, F&& apply) {
    auto sec = doc_.find(section);
    if (sec == doc_.end()) return;
    for (auto& [key, entry] : sec->second) {
      if (entry.used) continue;
      entry.used = true;
      try {
        apply(key, entry.value);
      } catch (const SchemaError&) {
        throw;
      } catch (const std::exception& e) {
        throw SchemaError(where(section, entry) + " " + key + ": " + e.what());
      }
    }
    known_sections_.insert(section);
  }

  void mark_section_known(const std::string& s) { known_sections_.insert(s); }

  /// Every section must be known and every key consumed.
  void finish() const {
    for (const auto& [section, entries] : doc_) {
      if (!known_sections_.count(section)) {
        throw SchemaError(origin_ + ": unknown section [" + section + "]");
      }
      for (const auto& [key, entry] : entries) {
        if (!entry.used) {
          throw SchemaError(where(section, entry) + ": unknown key '" + key + "'");
        }
      }
    }
  }

 private:
  Document doc_;
  std::string origin_;
  std::set<std::string> known_sections_;
};

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::runtime_error("trailing characters in number '" + v + "'");
  return d;
}

long long to_int(const std::string& v) {
  std::size_t pos = 0;
  const long long i = std::stoll(v, &pos);
  if (pos != v.size()) throw std::runtime_error("'" + v + "' is not an integer");
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("'" + v + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& v, std::size_t count) {
  std::istringstream in(v);
  std::vector<double> out;
  double d;
  while (in >> d) out.push_back(d);
  if (!in.eof() || out.size() != count) {
    throw std::runtime_error("expected " + std::to_string(count) + " numbers, got '" + v + "'");
  }
  return out;
}

FaultKind to_fault_kind(const std::string& v) {
  if (v == "corrupt") return FaultKind::corrupt;
  if (v == "hang") return FaultKind::hang;
  if (v == "garbage") return FaultKind::garbage;
  throw std::runtime_error("fault kind must be corrupt|hang|garbage, got '" + v + "'");
}

// Fault step spec: "11" | "11..20" | "11..".
void add_fault(FaultSchedule& schedule, const std::string& key, const std::string& value) {
  const FaultKind kind = to_fault_kind(value);
  const auto dots = key.find("..");
  if (dots == std::string::npos) {
    schedule.add(static_cast<std::size_t>(to_int(key)), kind);
    return;
  }
  const std::size_t from = static_cast<std::size_t>(to_int(key.substr(0, dots)));
  const std::string rest = key.substr(dots + 2);
  const std::size_t to =
      rest.empty() ? FaultSchedule::npos : static_cast<std::size_t>(to_int(rest));
  if (to < from) throw std::runtime_error("fault range ends before it starts");
  schedule.add_range(from, to, kind);
}

void read_fault_section(Reader& reader, const std::string& section, FaultSchedule& out) {
  reader.take_unused(section, [&out](const std::string& key, const std::string& value) {
    add_fault(out, key, value);
  });
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
  Reader reader(parse_document(text, origin), origin);
  ScenarioConfig cfg;

  if (!reader.has_section("run")) throw SchemaError(origin + ": missing [run] section");
  reader.mark_section_known("run");
  bool have_case = false;
  reader.take("run", "case_study", [&](const std::string& v) {
    if (v == "mas") cfg.case_study = CaseStudy::mas;
    else if (v == "mas_uncertain") cfg.case_study = CaseStudy::mas_uncertain;
    else if (v == "aircraft") cfg.case_study = CaseStudy::aircraft;
    else throw std::runtime_error("case_study must be mas|mas_uncertain|aircraft");
    have_case = true;
  });
  if (!have_case) throw SchemaError(origin + ": [run] case_study is required");
  bool have_steps = false;
  reader.take("run", "n_steps", [&](const std::string& v) {
    const long long n = to_int(v);
    if (n < 1) throw std::runtime_error("n_steps must be >= 1");
    cfg.n_steps = static_cast<std::size_t>(n);
    have_steps = true;
  });
  if (!have_steps) throw SchemaError(origin + ": [run] n_steps is required");
  reader.take("run", "seed",
              [&](const std::string& v) { cfg.seed = static_cast<std::uint64_t>(to_int(v)); });
  reader.take("run", "out", [&](const std::string& v) { cfg.out_dir = v; });
  reader.take("run", "svg", [&](const std::string& v) { cfg.svg = to_bool(v); });

  reader.mark_section_known("budgets");
  reader.take("budgets", "check_budget_ms",
              [&](const std::string& v) { cfg.check_budget_ms = to_double(v); });
  reader.take("budgets", "controller_budget_ms",
              [&](const std::string& v) { cfg.controller_budget_ms = to_double(v); });
  reader.take("budgets", "recheck_stored",
              [&](const std::string& v) { cfg.recheck_stored = to_bool(v); });

  const bool is_mas =
      cfg.case_study == CaseStudy::mas || cfg.case_study == CaseStudy::mas_uncertain;

  if (is_mas) {
    if (!reader.has_section("mas")) throw SchemaError(origin + ": missing [mas] section");
    reader.mark_section_known("mas");
    auto& p = cfg.mas_params;
    reader.take("mas", "n", [&](const std::string& v) { cfg.mas_n = int(to_int(v)); });
    reader.take("mas", "radius", [&](const std::string& v) { cfg.mas_radius = to_double(v); });
    reader.take("mas", "dt", [&](const std::string& v) { p.dt = to_double(v); });
    reader.take("mas", "d_min", [&](const std::string& v) { p.d_min = to_double(v); });
    reader.take("mas", "a_max", [&](const std::string& v) { p.a_max = to_double(v); });
    reader.take("mas", "v_max", [&](const std::string& v) { p.v_max = to_double(v); });
    reader.take("mas", "horizon", [&](const std::string& v) { p.horizon = int(to_int(v)); });
    reader.take("mas", "omega_s", [&](const std::string& v) { p.omega_s = to_double(v); });
    reader.take("mas", "omega_t", [&](const std::string& v) { p.omega_t = to_double(v); });
    reader.take("mas", "omega_d", [&](const std::string& v) { p.omega_d = to_double(v); });
    reader.take("mas", "lambda", [&](const std::string& v) { p.lambda = to_double(v); });
    reader.take("mas", "mpc_restarts",
                [&](const std::string& v) { p.mpc_restarts = int(to_int(v)); });
    reader.take("mas", "mpc_iterations",
                [&](const std::string& v) { p.mpc_iterations = int(to_int(v)); });
    reader.take("mas", "target_tolerance",
                [&](const std::string& v) { p.target_tolerance = to_double(v); });
    reader.take("mas", "layout", [&](const std::string& v) {
      if (v == "circle") cfg.layout = MasLayout::circle;
      else if (v == "custom") cfg.layout = MasLayout::custom;
      else throw std::runtime_error("layout must be circle|custom");
    });
    reader.take("mas", "center", [&](const std::string& v) {
      const auto d = to_doubles(v, 2);
      cfg.custom_center = {d[0], d[1]};
    });
    // agent_K / target_K lists for the custom layout
    std::map<int, mas::AgentState> agents;
    std::map<int, Vec2> targets;
    reader.take_unused("mas", [&](const std::string& key, const std::string& value) {
      if (key.rfind("agent_", 0) == 0) {
        const auto d = to_doubles(value, 4);
        agents[int(to_int(key.substr(6)))] = {{d[0], d[1]}, {d[2], d[3]}};
      } else if (key.rfind("target_", 0) == 0) {
        const auto d = to_doubles(value, 2);
        targets[int(to_int(key.substr(7)))] = {d[0], d[1]};
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    });
    if (cfg.layout == MasLayout::custom) {
      if (agents.empty()) throw SchemaError(origin + ": custom layout needs agent_K entries");
      if (agents.size() != targets.size()) {
        throw SchemaError(origin + ": agent_K and target_K counts differ");
      }
      for (int i = 0; i < int(agents.size()); ++i) {
        if (!agents.count(i) || !targets.count(i)) {
          throw SchemaError(origin + ": agent/target indices must be contiguous from 0");
        }
        cfg.custom_agents.push_back(agents[i]);
        cfg.custom_targets.push_back(targets[i]);
      }
      cfg.mas_n = int(cfg.custom_agents.size());
    } else if (!agents.empty() || !targets.empty()) {
      throw SchemaError(origin + ": agent_K/target_K keys require layout = custom");
    }
    p.validate();

    reader.mark_section_known("fault.advanced");
    reader.mark_section_known("fault.baseline");
    read_fault_section(reader, "fault.advanced", cfg.fault_advanced);
    read_fault_section(reader, "fault.baseline", cfg.fault_baseline);
  }

  if (cfg.case_study == CaseStudy::mas_uncertain) {
    if (!reader.has_section("uncertainty")) {
      throw SchemaError(origin + ": mas_uncertain requires an [uncertainty] section");
    }
    reader.mark_section_known("uncertainty");
    auto& u = cfg.uncertainty;
    reader.take("uncertainty", "sensor_position_radius",
                [&](const std::string& v) { u.sensor_position_radius = to_double(v); });
    reader.take("uncertainty", "sensor_velocity_radius",
                [&](const std::string& v) { u.sensor_velocity_radius = to_double(v); });
    reader.take("uncertainty", "polygon_sides",
                [&](const std::string& v) { u.polygon_sides = int(to_int(v)); });
    reader.take("uncertainty", "disturbance_bound",
                [&](const std::string& v) { u.disturbance_bound = to_double(v); });
    reader.take("uncertainty", "separation_threshold",
                [&](const std::string& v) { u.separation_threshold = to_double(v); });
    u.validate();
  }

  if (cfg.case_study == CaseStudy::aircraft) {
    if (!reader.has_section("aircraft")) {
      throw SchemaError(origin + ": missing [aircraft] section");
    }
    reader.mark_section_known("aircraft");
    auto& a = cfg.aircraft_cfg;
    reader.take("aircraft", "n", [&](const std::string& v) { a.n = int(to_int(v)); });
    reader.take("aircraft", "circle_diameter",
                [&](const std::string& v) { a.circle_diameter = to_double(v); });
    reader.take("aircraft", "safety_distance",
                [&](const std::string& v) { a.safety_distance = to_double(v); });
    reader.take("aircraft", "decision_period",
                [&](const std::string& v) { a.decision_period = to_double(v); });
    reader.take("aircraft", "speed", [&](const std::string& v) { a.speed = to_double(v); });
    reader.take("aircraft", "divergence_window",
                [&](const std::string& v) { a.divergence_window = to_double(v); });
    reader.take("aircraft", "rollout_cap",
                [&](const std::string& v) { a.rollout_cap = to_double(v); });
    reader.take("aircraft", "substep", [&](const std::string& v) { a.substep = to_double(v); });
    reader.take("aircraft", "alert_distance",
                [&](const std::string& v) { a.alert_distance = to_double(v); });
    reader.take("aircraft", "alert_time",
                [&](const std::string& v) { a.alert_time = to_double(v); });
    reader.take("aircraft", "strong_time",
                [&](const std::string& v) { a.strong_time = to_double(v); });
    reader.take("aircraft", "follower_gain",
                [&](const std::string& v) { a.follower_gain = to_double(v); });
    reader.take("aircraft", "follower_deadband_deg",
                [&](const std::string& v) { a.follower_deadband_deg = to_double(v); });
    reader.take("aircraft", "simplex",
                [&](const std::string& v) { cfg.aircraft_simplex = to_bool(v); });
    a.validate();
  }

  reader.finish();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open scenario file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

}  // namespace bbsim::cli
