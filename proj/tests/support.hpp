#pragma once

// Independent oracles shared by the unit and acceptance tests. None of these
// call into the solver or the polygon code they are used to check.

#include "depthreg/estimators.hpp"
#include "depthreg/geometry.hpp"
#include "depthreg/qr_solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

inline double check(double z, double tau)
{
  return z < 0 ? (tau - 1.0) * z : tau * z;
}

inline double weighted_loss(const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& w,
                            double tau,
                            const Eigen::VectorXd& theta)
{
  double f = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    f += w(i) * check(y(i) - x.row(i).dot(theta), tau);
  return f;
}

/// Minimum of the loss over all fits interpolating q observations with
/// positive weight (an L1 optimum is attained at one of them).
inline double basic_solution_minimum(const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& w,
                                     double tau)
{
  const int n = static_cast<int>(y.size());
  const int q = static_cast<int>(x.cols());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(q);
  // Enumerate q-subsets in lexicographic order.
  for (int k = 0; k < q; ++k)
    idx[k] = k;
  while (true) {
    Eigen::MatrixXd xb(q, q);
    Eigen::VectorXd yb(q);
    for (int k = 0; k < q; ++k) {
      xb.row(k) = x.row(idx[k]);
      yb(k) = y(idx[k]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
    if (lu.isInvertible())
      best = std::min(best, weighted_loss(y, x, w, tau, lu.solve(yb)));
    int k = q - 1;
    while (k >= 0 && idx[k] == n - q + k)
      --k;
    if (k < 0)
      break;
    ++idx[k];
    for (int j = k + 1; j < q; ++j)
      idx[j] = idx[j - 1] + 1;
  }
  return best;
}

/// Points spaced at most `step` apart along the boundary.
inline std::vector<Eigen::Vector2d> sample_boundary(const depthreg::geometry::ConvexPolygon& p, double step)
{
  std::vector<Eigen::Vector2d> pts;
  const auto& v = p.vertices();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Eigen::Vector2d a = v[k];
    const Eigen::Vector2d b = v[(k + 1) % v.size()];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int s = 0; s < pieces; ++s)
      pts.push_back(a + (b - a) * (static_cast<double>(s) / pieces));
  }
  return pts;
}

inline double segment_distance(const Eigen::Vector2d& y, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
  const Eigen::Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0 ? std::clamp((y - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (a + t * d - y).norm();
}

inline double distance_to_boundary(const depthreg::geometry::ConvexPolygon& p, const Eigen::Vector2d& y)
{
  double best = std::numeric_limits<double>::infinity();
  const auto& v = p.vertices();
  for (std::size_t k = 0; k < v.size(); ++k)
    best = std::min(best, segment_distance(y, v[k], v[(k + 1) % v.size()]));
  return best;
}

/// Dense-sampling Hausdorff distance between polygon boundaries; error at
/// most step / 2.
inline double sampled_hausdorff(const depthreg::geometry::ConvexPolygon& a,
                                const depthreg::geometry::ConvexPolygon& b,
                                double step)
{
  double h = 0.0;
  for (const auto& y : sample_boundary(a, step))
    h = std::max(h, distance_to_boundary(b, y));
  for (const auto& y : sample_boundary(b, step))
    h = std::max(h, distance_to_boundary(a, y));
  return h;
}

inline Eigen::Matrix2d rotation(double angle)
{
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Random orthogonal 2x2 matrix: rotation, optionally composed with a reflection.
inline Eigen::Matrix2d random_orthogonal(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  Eigen::Matrix2d o = rotation(angle(rng));
  if (rng() & 1U)
    o.col(1) *= -1.0;
  return o;
}

inline depthreg::estimators::Dataset gaussian_location_sample(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  depthreg::estimators::Dataset d;
  d.covariates.resize(n, 0);
  d.responses.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    d.responses(i, 0) = z(rng);
    d.responses(i, 1) = z(rng);
  }
  return d;
}

/// The grid's directions mapped by `o`; frames rebuilt from the mapped u.
inline depthreg::geometry::DirectionGrid mapped_grid(const depthreg::geometry::DirectionGrid& grid,
                                                     const Eigen::Matrix2d& o)
{
  depthreg::geometry::DirectionGrid out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::Vector2d u = o * grid.directions[k].u;
    out.directions.push_back(depthreg::geometry::make_frame(u));
    out.angles.push_back(std::atan2(u(1), u(0)));
  }
  return out;
}

} // namespace testing
