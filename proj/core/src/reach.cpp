#include "bbsim/reach.hpp"

#include <cmath>
#include <stdexcept>

namespace bbsim::reach {

void UncertaintyModel::validate() const {
  if (sensor_position_radius < 0.0 || sensor_velocity_radius < 0.0) {
    throw std::invalid_argument("UncertaintyModel: sensor radii must be nonnegative");
  }
  if (polygon_sides < 4 || polygon_sides % 2 != 0) {
    throw std::invalid_argument("UncertaintyModel: polygon_sides must be even and >= 4");
  }
  if (disturbance_bound < 0.0) {
    throw std::invalid_argument("UncertaintyModel: disturbance_bound must be nonnegative");
  }
}

StackedDynamics mas_matrices(std::size_t n, double dt) {
  StackedDynamics d;
  d.a = Eigen::MatrixXd::Identity(4 * n, 4 * n);
  d.b = Eigen::MatrixXd::Zero(4 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    d.a(4 * i + 0, 4 * i + 2) = dt;
    d.a(4 * i + 1, 4 * i + 3) = dt;
    d.b(4 * i + 2, 2 * i + 0) = dt;
    d.b(4 * i + 3, 2 * i + 1) = dt;
  }
  return d;
}

Eigen::VectorXd stack_state(const mas::MasState& x) {
  Eigen::VectorXd v(4 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[4 * i + 0] = x.agents[i].pos.x;
    v[4 * i + 1] = x.agents[i].pos.y;
    v[4 * i + 2] = x.agents[i].vel.x;
    v[4 * i + 3] = x.agents[i].vel.y;
  }
  return v;
}

Eigen::VectorXd stack_command(const mas::MasCommand& u) {
  Eigen::VectorXd v(2 * u.acc.size());
  for (std::size_t i = 0; i < u.acc.size(); ++i) {
    v[2 * i + 0] = u.acc[i].x;
    v[2 * i + 1] = u.acc[i].y;
  }
  return v;
}

Zonotope initial_zonotope(const mas::MasState& x, const UncertaintyModel& model) {
  const std::size_t n = x.size();
  const Zonotope pos_poly = l2_ball_polytope(model.sensor_position_radius, model.polygon_sides);
  const Zonotope vel_poly = l2_ball_polytope(model.sensor_velocity_radius, model.polygon_sides);

  Zonotope z;
  z.center = stack_state(x);
  const Eigen::Index per_agent = pos_poly.order() + vel_poly.order();
  z.generators = Eigen::MatrixXd::Zero(4 * n, per_agent * static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < pos_poly.order(); ++j, ++col) {
      z.generators.block<2, 1>(4 * i, col) = pos_poly.generators.col(j);
    }
    for (Eigen::Index j = 0; j < vel_poly.order(); ++j, ++col) {
      z.generators.block<2, 1>(4 * i + 2, col) = vel_poly.generators.col(j);
    }
  }
  return z;
}

Zonotope disturbance_zonotope(std::size_t n, double bound) {
  if (bound == 0.0) return Zonotope::point(Eigen::VectorXd::Zero(4 * n));
  Zonotope z;
  z.center = Eigen::VectorXd::Zero(4 * n);
  z.generators = Eigen::MatrixXd::Identity(4 * n, 4 * n) * bound;
  return z;
}

namespace {

// Largest possible agent speed consistent with the per-component velocity
// intervals; if this can reach v_max the clamp could bite.
bool velocity_box_exceeds(const Zonotope& z, double v_max) {
  const auto bounds = box_bounds(z);
  const std::size_t n = z.dim() / 4;
  for (std::size_t i = 0; i < n; ++i) {
    const Interval vx = bounds[4 * i + 2];
    const Interval vy = bounds[4 * i + 3];
    const double mx = std::max(std::abs(vx.lo), std::abs(vx.hi));
    const double my = std::max(std::abs(vy.lo), std::abs(vy.hi));
    if (std::hypot(mx, my) > v_max) return true;
  }
  return false;
}

}  // namespace

ReachResult reach_sequence(const Zonotope& z0, const CommandSequence<mas::MasCommand>& seq,
                           const UncertaintyModel& model, const mas::MasParams& params) {
  model.validate();
  const std::size_t n = z0.dim() / 4;
  if (z0.dim() % 4 != 0) {
    throw std::invalid_argument("reach_sequence: state dimension must be 4n");
  }
  const StackedDynamics dyn = mas_matrices(n, params.dt);
  const Zonotope w = disturbance_zonotope(n, model.disturbance_bound);

  ReachResult result;
  result.sets.push_back(z0);
  if (velocity_box_exceeds(z0, params.v_max)) {
    result.clamp_fault = true;
    result.fault_step = 0;
    return result;
  }

  for (std::size_t k = 0; k < seq.size(); ++k) {
    const Zonotope& cur = result.sets.back();
    Zonotope next;
    next.center = dyn.a * cur.center + dyn.b * stack_command(seq[k]);
    next.generators = dyn.a * cur.generators;
    if (w.order() > 0) next = minkowski_sum(next, w);

    if (velocity_box_exceeds(next, params.v_max)) {
      result.clamp_fault = true;
      result.fault_step = static_cast<int>(k + 1);
      result.sets.push_back(std::move(next));
      return result;
    }
    result.sets.push_back(std::move(next));
  }
  return result;
}

double pair_distance_lower_bound(const Zonotope& z, std::size_t i, std::size_t j) {
  // Difference of the two position blocks is itself a zonotope; its box
  // bounds give a sound per-axis gap.
  Eigen::Vector2d c;
  c << z.center[4 * i] - z.center[4 * j], z.center[4 * i + 1] - z.center[4 * j + 1];
  Eigen::Vector2d radius = Eigen::Vector2d::Zero();
  for (Eigen::Index g = 0; g < z.order(); ++g) {
    radius[0] += std::abs(z.generators(4 * i, g) - z.generators(4 * j, g));
    radius[1] += std::abs(z.generators(4 * i + 1, g) - z.generators(4 * j + 1, g));
  }
  double gap2 = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = c[axis] - radius[axis];
    const double hi = c[axis] + radius[axis];
    if (lo <= 0.0 && 0.0 <= hi) continue;
    const double gap = std::min(std::abs(lo), std::abs(hi));
    gap2 += gap * gap;
  }
  return std::sqrt(gap2);
}

namespace {

mas::MasState state_from_center(const Eigen::VectorXd& center) {
  const std::size_t n = center.size() / 4;
  mas::MasState x;
  x.agents.resize(n);
  x.targets.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    x.agents[i].pos = {center[4 * i], center[4 * i + 1]};
    x.agents[i].vel = {center[4 * i + 2], center[4 * i + 3]};
  }
  return x;
}

}  // namespace

safety::SafetyVerdict mas_permanently_safe_uncertain(
    const Zonotope& z0, const CommandSequence<mas::MasCommand>& seq,
    const UncertaintyModel& model, const mas::MasParams& params) {
  // No uncertainty anywhere: the sets are single points and the question is
  // exactly the deterministic one.
  if (model.deterministic() && z0.order() == 0) {
    return safety::mas_permanently_safe(state_from_center(z0.center), seq, params);
  }

  const std::size_t n = z0.dim() / 4;
  const ReachResult reach = reach_sequence(z0, seq, model, params);
  if (reach.clamp_fault) {
    safety::SafetyVerdict v{false, safety::SafetyVerdict::Reason::horizon_error};
    v.step = reach.fault_step;
    v.detail = "velocity bounds reach the clamp; linear model invalid";
    return v;
  }

  for (std::size_t k = 0; k < reach.sets.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double lb = pair_distance_lower_bound(reach.sets[k], i, j);
        if (lb < params.d_min) {
          safety::SafetyVerdict v{false, safety::SafetyVerdict::Reason::distance_violation};
          v.step = static_cast<int>(k);
          v.agents = {static_cast<int>(i), static_cast<int>(j)};
          v.distance = lb;
          return v;
        }
      }
    }
  }

  // Growing sets make the deterministic ray argument unavailable; instead
  // demand a guaranteed wide berth at the end of the horizon.
  const double threshold =
      model.separation_threshold > 0.0 ? model.separation_threshold : 5.0 * params.d_min;
  const Zonotope& fin = reach.sets.back();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double lb = pair_distance_lower_bound(fin, i, j);
      if (lb < threshold) {
        safety::SafetyVerdict v{false, safety::SafetyVerdict::Reason::converging_final_rays};
        v.agents = {static_cast<int>(i), static_cast<int>(j)};
        v.distance = lb;
        v.detail = "guaranteed_separation";
        return v;
      }
    }
  }
  return safety::SafetyVerdict::ok();
}

SafetyChecker<mas::MasState, mas::MasCommand> make_uncertain_checker(
    const mas::MasParams& params, const UncertaintyModel& model,
    std::chrono::microseconds budget) {
  model.validate();
  SafetyChecker<mas::MasState, mas::MasCommand> checker;
  checker.check_budget = budget;
  checker.is_permanently_safe = [params, model](const mas::MasState& x,
                                                const CommandSequence<mas::MasCommand>& seq) {
    try {
      const Zonotope z0 = initial_zonotope(x, model);
      const safety::SafetyVerdict v = mas_permanently_safe_uncertain(z0, seq, model, params);
      return CheckResult{v.accepted, v.describe()};
    } catch (const std::exception& e) {
      return CheckResult{false, std::string("invalid_proposal: ") + e.what()};
    }
  };
  return checker;
}

mas::MasState sample_uncertain_state(const mas::MasState& x, const UncertaintyModel& model,
                                     std::uint64_t& rng) {
  auto disc_sample = [&rng](double radius) -> Vec2 {
    const double angle = 2.0 * M_PI * detail::uniform_unit(rng);
    const double r = radius * std::sqrt(detail::uniform_unit(rng));
    return {r * std::cos(angle), r * std::sin(angle)};
  };
  mas::MasState out = x;
  for (auto& agent : out.agents) {
    agent.pos += disc_sample(model.sensor_position_radius);
    agent.vel += disc_sample(model.sensor_velocity_radius);
  }
  return out;
}

}  // namespace bbsim::reach
