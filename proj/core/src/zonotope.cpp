#include "bbsim/zonotope.hpp"

#include <cmath>
#include <stdexcept>

namespace bbsim::reach {

Zonotope linear_map(const Eigen::MatrixXd& m, const Zonotope& z) {
  if (m.cols() != z.dim()) {
    throw std::invalid_argument("linear_map: dimension mismatch");
  }
  Zonotope out;
  out.center = m * z.center;
  out.generators = m * z.generators;
  return prune_zero_generators(out);
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("minkowski_sum: dimension mismatch");
  }
  Zonotope out;
  out.center = a.center + b.center;
  out.generators.resize(a.dim(), a.order() + b.order());
  out.generators << a.generators, b.generators;
  return out;
}

std::vector<Interval> box_bounds(const Zonotope& z) {
  std::vector<Interval> bounds(z.dim());
  const Eigen::VectorXd radius = z.generators.cwiseAbs().rowwise().sum();
  for (Eigen::Index k = 0; k < z.dim(); ++k) {
    bounds[k] = {z.center[k] - radius[k], z.center[k] + radius[k]};
  }
  return bounds;
}

Zonotope prune_zero_generators(const Zonotope& z) {
  std::vector<Eigen::Index> keep;
  keep.reserve(z.order());
  for (Eigen::Index j = 0; j < z.order(); ++j) {
    if (!z.generators.col(j).isZero(0.0)) keep.push_back(j);
  }
  if (static_cast<Eigen::Index>(keep.size()) == z.order()) return z;
  Zonotope out;
  out.center = z.center;
  out.generators.resize(z.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.generators.col(static_cast<Eigen::Index>(j)) = z.generators.col(keep[j]);
  }
  return out;
}

Zonotope l2_ball_polytope(double radius, int sides) {
  if (radius < 0.0) throw std::invalid_argument("l2_ball_polytope: negative radius");
  if (sides < 4 || sides % 2 != 0) {
    throw std::invalid_argument("l2_ball_polytope: sides must be even and >= 4");
  }
  if (radius == 0.0) return Zonotope::point(Eigen::Vector2d::Zero());

  const int m = sides / 2;
  // Unit generators spread over half the circle produce a regular 2m-gon.
  // The minimal support of the unscaled polygon over all directions occurs
  // at the kink angles of sum_k |cos(pi k / m - phi)|; scaling by
  // radius / min_support makes the inradius exactly `radius`, i.e. the
  // polygon circumscribes the disc.
  double min_support = 0.0;
  for (int k = 0; k < m; ++k) {
    min_support += std::abs(std::cos(M_PI * k / m - M_PI / 2.0));
  }
  const double scale = radius / min_support;

  Zonotope z;
  z.center = Eigen::Vector2d::Zero();
  z.generators.resize(2, m);
  for (int k = 0; k < m; ++k) {
    const double angle = M_PI * k / m;
    z.generators.col(k) << scale * std::cos(angle), scale * std::sin(angle);
  }
  return z;
}

double support(const Zonotope& z, const Eigen::VectorXd& u) {
  return z.center.dot(u) + (z.generators.transpose() * u).cwiseAbs().sum();
}

}  // namespace bbsim::reach
