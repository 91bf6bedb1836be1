#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "bbsim/safety.hpp"
#include "runner.hpp"

namespace bbsim::cli {

namespace {

struct Viewport {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  double side = 800.0;

  void include(Vec2 p) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }

  void finalize() {
    const double span = std::max({max_x - min_x, max_y - min_y, 1e-9});
    const double margin = 0.06 * span;
    min_x -= margin;
    min_y -= margin;
    max_x = min_x + span + 2 * margin;
    max_y = min_y + span + 2 * margin;
  }

  // world -> svg (y grows downward in svg)
  Vec2 map(Vec2 p) const {
    const double sx = side * (p.x - min_x) / (max_x - min_x);
    const double sy = side * (1.0 - (p.y - min_y) / (max_y - min_y));
    return {sx, sy};
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void polyline(std::string& svg, const Viewport& vp, const std::vector<Vec2>& pts,
              const char* color, double width, const char* dash = nullptr) {
  if (pts.size() < 2) return;
  svg += "<polyline fill=\"none\" stroke=\"";
  svg += color;
  svg += "\" stroke-width=\"" + num(width) + "\"";
  if (dash) svg += std::string(" stroke-dasharray=\"") + dash + "\"";
  svg += " points=\"";
  for (const Vec2 p : pts) {
    const Vec2 s = vp.map(p);
    svg += num(s.x) + "," + num(s.y) + " ";
  }
  svg += "\"/>\n";
}

void dot(std::string& svg, const Viewport& vp, Vec2 p, const char* color, double r) {
  const Vec2 s = vp.map(p);
  svg += "<circle cx=\"" + num(s.x) + "\" cy=\"" + num(s.y) + "\" r=\"" + num(r) +
         "\" fill=\"" + color + "\"/>\n";
}

void cross(std::string& svg, const Viewport& vp, Vec2 p, const char* color, double r) {
  const Vec2 s = vp.map(p);
  svg += "<path stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" d=\"M " +
         num(s.x - r) + " " + num(s.y - r) + " L " + num(s.x + r) + " " + num(s.y + r) +
         " M " + num(s.x - r) + " " + num(s.y + r) + " L " + num(s.x + r) + " " +
         num(s.y - r) + "\"/>\n";
}

void segment(std::string& svg, const Viewport& vp, Vec2 a, Vec2 b, const char* color,
             double width, const char* dash = nullptr) {
  const Vec2 s1 = vp.map(a);
  const Vec2 s2 = vp.map(b);
  svg += "<line x1=\"" + num(s1.x) + "\" y1=\"" + num(s1.y) + "\" x2=\"" + num(s2.x) +
         "\" y2=\"" + num(s2.y) + "\" stroke=\"" + color + "\" stroke-width=\"" +
         num(width) + "\"";
  if (dash) svg += std::string(" stroke-dasharray=\"") + dash + "\"";
  svg += "/>\n";
}

void label(std::string& svg, double x, double y, const std::string& text) {
  svg += "<text x=\"" + num(x) + "\" y=\"" + num(y) +
         "\" font-family=\"monospace\" font-size=\"14\" fill=\"#333\">" + text + "</text>\n";
}

std::string document(const std::string& body, double side) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"" +
         num(side) + "\" height=\"" + num(side) + "\" viewBox=\"0 0 " + num(side) + " " +
         num(side) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body +
         "</svg>\n";
}

std::string emit_mas(const RunData& data) {
  const auto& result = *data.mas;
  std::vector<mas::MasState> states{*data.mas_initial};
  for (const auto& rec : result.records) states.push_back(rec.state_after);
  const std::size_t n = data.mas_initial->size();

  // Snapshot: first rejected step when there is one, otherwise the last step.
  std::size_t snapshot = result.records.empty() ? 0 : result.records.size() - 1;
  for (std::size_t k = 0; k < result.records.size(); ++k) {
    if (result.records[k].verdict != Verdict::accepted) {
      snapshot = k;
      break;
    }
  }

  // Reconstruct the stored sequence entering the snapshot step.
  CommandSequence<mas::MasCommand> stored =
      CommandSequence<mas::MasCommand>::single(mas::zero_command(n));
  {
    CommandSequence<mas::MasCommand> cur = stored;
    for (std::size_t k = 0; k < result.records.size() && k <= snapshot; ++k) {
      if (k == snapshot) {
        stored = cur;
        break;
      }
      if (result.records[k].verdict == Verdict::accepted) cur = *result.records[k].proposal;
      cur = dm_step(cur).second;
    }
  }

  Viewport vp;
  for (const auto& s : states) {
    for (const auto& a : s.agents) vp.include(a.pos);
  }
  for (const auto& t : data.mas_initial->targets) vp.include(t);
  vp.finalize();

  std::string body;
  for (const auto& t : data.mas_initial->targets) cross(body, vp, t, "#4466cc", 5.0);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> path;
    for (const auto& s : states) path.push_back(s.agents[i].pos);
    polyline(body, vp, path, "#999999", 1.0);
  }

  const mas::MasState& snap_state = states[snapshot];

  // Planned futures from the snapshot state: stored plan in green and, when
  // the step was refused, the rejected proposal in blue.
  {
    const auto future = safety::simulate_sequence(snap_state, stored, data.config.mas_params);
    for (const auto& s : future) {
      for (const auto& a : s.agents) dot(body, vp, a.pos, "#2a9d2a", 2.0);
    }
    if (!result.records.empty()) {
      const auto& rec = result.records[snapshot];
      if (rec.verdict != Verdict::accepted && rec.proposal) {
        const auto bad =
            safety::simulate_sequence(snap_state, *rec.proposal, data.config.mas_params);
        for (const auto& s : bad) {
          for (const auto& a : s.agents) dot(body, vp, a.pos, "#3366ff", 2.0);
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = snap_state.agents[i];
    segment(body, vp, a.pos, a.pos + 2.0 * a.vel, "#3355bb", 1.2);
    dot(body, vp, a.pos, "#cc2222", 4.0);
  }

  const MinSeparation ms = data.min_separation();
  if (ms.agents.first >= 0 && ms.step < states.size()) {
    const auto& s = states[ms.step];
    dot(body, vp, s.agents[ms.agents.first].pos, "#cc2222", 6.0);
    dot(body, vp, s.agents[ms.agents.second].pos, "#cc2222", 6.0);
    segment(body, vp, s.agents[ms.agents.first].pos, s.agents[ms.agents.second].pos,
            "#cc2222", 0.8, "4 3");
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "min separation %.4f at step %zu", ms.value, ms.step);
  label(body, 16.0, vp.side - 16.0, buf);

  return document(body, vp.side);
}

std::string emit_aircraft(const RunData& data) {
  std::vector<aircraft::FleetState> states;
  if (data.air) {
    states.push_back(*data.air_initial);
    for (const auto& rec : data.air->records) states.push_back(rec.state_after);
  } else {
    states = data.raw_states;
  }
  if (states.empty()) return document("", 800.0);
  const std::size_t n = states[0].size();

  Viewport vp;
  for (const auto& s : states) {
    for (const auto& a : s.aircraft) vp.include(a.position);
  }
  vp.finalize();

  std::string body;
  for (const auto& w : data.air_cfg.waypoints) {
    if (w.x >= vp.min_x && w.x <= vp.max_x && w.y >= vp.min_y && w.y <= vp.max_y) {
      cross(body, vp, w, "#4466cc", 5.0);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vec2> path;
    for (const auto& s : states) path.push_back(s.aircraft[i].position);
    polyline(body, vp, path, "#888888", 1.0);
  }

  // Snapshot at the closest approach; the offending pair in red, the rest
  // in black, distance printed bottom-right.
  const MinSeparation ms = data.min_separation();
  const auto& snap = states[std::min(ms.step, states.size() - 1)];
  for (std::size_t i = 0; i < n; ++i) {
    const bool hot = int(i) == ms.agents.first || int(i) == ms.agents.second;
    const auto& a = snap.aircraft[i];
    const Vec2 nose = a.position + (0.02 * (vp.max_x - vp.min_x)) *
                                       Vec2{std::cos(a.heading), std::sin(a.heading)};
    segment(body, vp, a.position, nose, hot ? "#cc2222" : "#222222", 1.5);
    dot(body, vp, a.position, hot ? "#cc2222" : "#222222", 4.0);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "min separation %.1f ft at step %zu", ms.value, ms.step);
  label(body, vp.side - 330.0, vp.side - 16.0, buf);

  return document(body, vp.side);
}

}  // namespace

std::string emit_plot(const RunData& data) {
  if (data.mas) return emit_mas(data);
  return emit_aircraft(data);
}

}  // namespace bbsim::cli
