#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bbsim::reach {

/// Center-generator set representation: { c + sum_j alpha_j g_j : alpha in
/// [-1,1]^m }. Closed under linear maps and Minkowski sums, which is all the
/// linear reachability loop needs.
struct Zonotope {
  Eigen::VectorXd center;
  Eigen::MatrixXd generators;  // one generator per column; d x m

  Eigen::Index dim() const { return center.size(); }
  Eigen::Index order() const { return generators.cols(); }

  static Zonotope point(Eigen::VectorXd c) {
    Zonotope z;
    z.generators.resize(c.size(), 0);
    z.center = std::move(c);
    return z;
  }
};

/// Image under a linear map: M c, {M g_j}. Dimension mismatch throws.
Zonotope linear_map(const Eigen::MatrixXd& m, const Zonotope& z);

/// Minkowski sum: centers add, generator lists concatenate.
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Tight axis-aligned bounds: [c_k - sum_j |g_jk|, c_k + sum_j |g_jk|].
std::vector<Interval> box_bounds(const Zonotope& z);

/// Remove exactly-zero generator columns. No order reduction beyond that, so
/// generator counts stay predictable.
Zonotope prune_zero_generators(const Zonotope& z);

/// Regular 2m-gon (m = sides/2 generators) circumscribing the L2 disc of the
/// given radius: the polygon's inradius equals the disc radius, so the disc
/// is contained. sides must be even and >= 4; radius 0 gives a point.
Zonotope l2_ball_polytope(double radius, int sides);

/// Support value max_{x in Z} u . x; used by tests as an independent oracle.
double support(const Zonotope& z, const Eigen::VectorXd& u);

}  // namespace bbsim::reach
