#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace depthreg::geometry {

/// Unit direction u together with an orthonormal basis of its orthocomplement.
///
/// [u | gamma] is an m x m orthogonal matrix. For m = 2 gamma is u rotated by
/// -pi/2; for m >= 3 it is taken from a Householder reflection pivoted on the
/// largest |u_k|, so the basis is a deterministic function of u.
struct DirectionFrame
{
  Eigen::VectorXd u;
  Eigen::MatrixXd gamma;

  int dimension() const { return static_cast<int>(u.size()); }
};

DirectionFrame make_frame(const Eigen::VectorXd& u);

/// Angle-ordered set of frames, equispaced on [0, 2pi) (m = 2 only).
struct DirectionGrid
{
  std::vector<DirectionFrame> directions;
  std::vector<double> angles;

  std::size_t size() const { return directions.size(); }
};

DirectionGrid direction_grid(int m, int count);

/// {y : normal . y >= offset}
struct Halfspace2D
{
  Eigen::Vector2d normal;
  double offset = 0.0;

  double slack(const Eigen::Vector2d& y) const { return normal.dot(y) - offset; }
};

class ConvexPolygon
{
public:
  ConvexPolygon() = default;
  /// Takes counterclockwise vertices as-is; use canonicalize() for the
  /// standard starting vertex.
  explicit ConvexPolygon(std::vector<Eigen::Vector2d> vertices);

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

  double area() const;
  Eigen::Vector2d centroid() const;
  /// Inside-or-on, with `tol` measured as distance outside any edge line.
  bool contains(const Eigen::Vector2d& y, double tol = 1e-9) const;
  /// Largest |coordinate| over the vertices.
  double extent() const;

  /// Edge halfspaces (normal pointing inward, unit length).
  std::vector<Halfspace2D> edge_halfspaces() const;

private:
  std::vector<Eigen::Vector2d> vertices_;
};

/// Rotates the vertex list so that it starts at the vertex of smallest polar
/// angle in [0, 2pi) around the vertex mean, keeping counterclockwise order.
ConvexPolygon canonicalize(const std::vector<Eigen::Vector2d>& ccw_vertices);

constexpr double default_bound = 1e6;
constexpr double merge_tolerance = 1e-9;

std::optional<ConvexPolygon> clip(const ConvexPolygon& polygon, const Halfspace2D& halfspace);

/// Intersection of the halfspaces with the square [-bound, bound]^2.
/// Empty (nullopt) when the intersection is void or has zero area.
std::optional<ConvexPolygon> intersect_halfspaces(std::span<const Halfspace2D> halfspaces,
                                                  double bound = default_bound);

std::optional<ConvexPolygon> intersect(const ConvexPolygon& a, const ConvexPolygon& b);

/// True when some vertex lies on the bounding square used by
/// intersect_halfspaces.
bool touches_bound(const ConvexPolygon& polygon, double bound = default_bound);

/// Symmetric Hausdorff distance between the two polygon boundaries.
double hausdorff_distance(const ConvexPolygon& a, const ConvexPolygon& b);

/// Distance from y to the boundary of a polygon (zero on the boundary).
double boundary_distance(const ConvexPolygon& polygon, const Eigen::Vector2d& y);

/// Regular polygon with `count` vertices inscribed in the given circle,
/// first vertex at angle 0.
ConvexPolygon regular_polygon(const Eigen::Vector2d& center, double radius, int count);

std::string to_json(const ConvexPolygon& polygon);
std::string to_csv(const ConvexPolygon& polygon);

} // namespace depthreg::geometry
