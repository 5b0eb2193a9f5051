#include "depthreg/geometry.hpp"

#include "depthreg/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace depthreg::geometry {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
  return a.x() * b.y() - a.y() * b.x();
}

double signed_area(const std::vector<Eigen::Vector2d>& v)
{
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    twice += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * twice;
}

// Merges near-duplicate neighbours and drops collinear middle vertices.
std::vector<Eigen::Vector2d> cleanup(std::vector<Eigen::Vector2d> v)
{
  bool changed = true;
  while (changed && v.size() >= 2) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() >= 2; ++i) {
      const std::size_t j = (i + 1) % v.size();
      if ((v[i] - v[j]).norm() <= merge_tolerance) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(j));
        changed = true;
        break;
      }
    }
    if (changed || v.size() < 3)
      continue;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& a = v[(i + v.size() - 1) % v.size()];
      const auto& b = v[i];
      const auto& c = v[(i + 1) % v.size()];
      const Eigen::Vector2d e1 = b - a;
      const Eigen::Vector2d e2 = c - b;
      if (std::abs(cross(e1, e2)) <= 1e-13 * e1.norm() * e2.norm() && e1.dot(e2) >= 0.0) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return v;
}

std::optional<ConvexPolygon> finish(std::vector<Eigen::Vector2d> v)
{
  v = cleanup(std::move(v));
  if (v.size() < 3)
    return std::nullopt;
  double scale = 1.0;
  for (const auto& p : v)
    scale = std::max(scale, p.cwiseAbs().maxCoeff());
  if (signed_area(v) <= 1e-15 * scale * scale)
    return std::nullopt;
  return canonicalize(v);
}

std::vector<Eigen::Vector2d> clip_vertices(const std::vector<Eigen::Vector2d>& v, const Halfspace2D& h)
{
  double scale = std::abs(h.offset);
  for (const auto& p : v)
    scale = std::max(scale, h.normal.norm() * p.cwiseAbs().maxCoeff());
  const double eps = 1e-14 * std::max(scale, 1e-300);

  std::vector<Eigen::Vector2d> out;
  out.reserve(v.size() + 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    const double sa = h.slack(a);
    const double sb = h.slack(b);
    if (sa >= -eps)
      out.push_back(a);
    if ((sa > eps && sb < -eps) || (sa < -eps && sb > eps))
      out.push_back(a + (sa / (sa - sb)) * (b - a));
  }
  return out;
}

// Parameter interval of segment p + t (q - p), t in [0, 1], inside the polygon.
std::optional<std::pair<double, double>> inside_interval(const std::vector<Halfspace2D>& edges,
                                                         const Eigen::Vector2d& p,
                                                         const Eigen::Vector2d& q)
{
  double lo = 0.0;
  double hi = 1.0;
  const Eigen::Vector2d d = q - p;
  for (const auto& e : edges) {
    const double s0 = e.slack(p);
    const double ds = e.normal.dot(d);
    if (ds == 0.0) {
      if (s0 < 0.0)
        return std::nullopt;
      continue;
    }
    const double t = -s0 / ds;
    if (ds > 0.0)
      lo = std::max(lo, t);
    else
      hi = std::min(hi, t);
    if (lo > hi)
      return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

double min_edge_slack(const std::vector<Halfspace2D>& edges, const Eigen::Vector2d& y)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : edges)
    best = std::min(best, e.slack(y));
  return best;
}

double segment_distance(const Eigen::Vector2d& y, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
  const Eigen::Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (y - a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * d - y).norm();
}

double directed_hausdorff(const ConvexPolygon& a, const ConvexPolygon& b)
{
  const auto edges = b.edge_halfspaces();
  const auto& va = a.vertices();
  double worst = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const auto& p = va[i];
    const auto& q = va[(i + 1) % va.size()];
    worst = std::max(worst, boundary_distance(b, p));
    // Outside b the distance is convex along the segment, so the endpoints
    // dominate. Inside b it is the concave lower envelope of edge slacks.
    const auto interval = inside_interval(edges, p, q);
    if (!interval)
      continue;
    double lo = interval->first;
    double hi = interval->second;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double t) { return min_edge_slack(edges, p + t * (q - p)); };
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = f(x1);
      }
    }
    worst = std::max({ worst, f1, f2 });
  }
  return worst;
}

} // namespace

DirectionFrame make_frame(const Eigen::VectorXd& u)
{
  const auto m = u.size();
  const double norm = u.norm();
  if (m < 2)
    throw Error(ErrorCode::unsupported_dimension, "geometry", "direction dimension must be at least 2");
  if (!std::isfinite(norm) || norm == 0.0)
    throw Error(ErrorCode::invalid_direction, "geometry", "direction must be a finite nonzero vector");

  DirectionFrame frame;
  frame.u = u / norm;
  frame.gamma.resize(m, m - 1);
  if (m == 2) {
    frame.gamma(0, 0) = frame.u(1);
    frame.gamma(1, 0) = -frame.u(0);
    return frame;
  }

  Eigen::Index pivot = 0;
  frame.u.cwiseAbs().maxCoeff(&pivot);
  const double sign = frame.u(pivot) >= 0.0 ? 1.0 : -1.0;
  Eigen::VectorXd v = frame.u;
  v(pivot) += sign;
  // H = I - 2 v v' / v'v maps u to -sign e_pivot, so its other columns span u-perp.
  const Eigen::MatrixXd h =
    Eigen::MatrixXd::Identity(m, m) - (2.0 / v.squaredNorm()) * v * v.transpose();
  Eigen::Index col = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k == pivot)
      continue;
    frame.gamma.col(col++) = h.col(k);
  }
  return frame;
}

DirectionGrid direction_grid(int m, int count)
{
  if (m != 2)
    throw Error(ErrorCode::unsupported_dimension, "geometry", "direction grids are only supported for m = 2");
  if (count < 3)
    throw Error(ErrorCode::invalid_input, "geometry", "a direction grid needs at least 3 directions");
  DirectionGrid grid;
  grid.directions.reserve(static_cast<std::size_t>(count));
  grid.angles.reserve(static_cast<std::size_t>(count));
  const double step = 2.0 * std::numbers::pi / count;
  for (int k = 0; k < count; ++k) {
    const double phi = step * k;
    grid.angles.push_back(phi);
    grid.directions.push_back(make_frame(Eigen::Vector2d(std::cos(phi), std::sin(phi))));
  }
  return grid;
}

ConvexPolygon::ConvexPolygon(std::vector<Eigen::Vector2d> vertices)
  : vertices_(std::move(vertices))
{}

double ConvexPolygon::area() const
{
  return vertices_.size() < 3 ? 0.0 : signed_area(vertices_);
}

Eigen::Vector2d ConvexPolygon::centroid() const
{
  if (vertices_.empty())
    return Eigen::Vector2d::Zero();
  const double a = area();
  if (a <= 0.0) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& v : vertices_)
      mean += v;
    return mean / static_cast<double>(vertices_.size());
  }
  // Shift to the first vertex to keep the shoelace sums well conditioned.
  const Eigen::Vector2d origin = vertices_.front();
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Eigen::Vector2d p = vertices_[i] - origin;
    const Eigen::Vector2d q = vertices_[(i + 1) % vertices_.size()] - origin;
    acc += cross(p, q) * (p + q);
  }
  return origin + acc / (6.0 * a);
}

bool ConvexPolygon::contains(const Eigen::Vector2d& y, double tol) const
{
  if (vertices_.size() < 3)
    return false;
  for (const auto& e : edge_halfspaces())
    if (e.slack(y) < -tol)
      return false;
  return true;
}

double ConvexPolygon::extent() const
{
  double e = 0.0;
  for (const auto& v : vertices_)
    e = std::max(e, v.cwiseAbs().maxCoeff());
  return e;
}

std::vector<Halfspace2D> ConvexPolygon::edge_halfspaces() const
{
  std::vector<Halfspace2D> out;
  out.reserve(vertices_.size());
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % vertices_.size()];
    const Eigen::Vector2d d = b - a;
    // Inward normal of a counterclockwise edge is the left perpendicular.
    const Eigen::Vector2d n = Eigen::Vector2d(-d.y(), d.x()).normalized();
    out.push_back({ n, n.dot(a) });
  }
  return out;
}

ConvexPolygon canonicalize(const std::vector<Eigen::Vector2d>& ccw_vertices)
{
  if (ccw_vertices.empty())
    return ConvexPolygon{};
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& v : ccw_vertices)
    mean += v;
  mean /= static_cast<double>(ccw_vertices.size());
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ccw_vertices.size(); ++i) {
    const Eigen::Vector2d d = ccw_vertices[i] - mean;
    double angle = std::atan2(d.y(), d.x());
    if (angle < 0.0)
      angle += 2.0 * std::numbers::pi;
    if (angle < best) {
      best = angle;
      start = i;
    }
  }
  std::vector<Eigen::Vector2d> out(ccw_vertices.begin() + static_cast<std::ptrdiff_t>(start), ccw_vertices.end());
  out.insert(out.end(), ccw_vertices.begin(), ccw_vertices.begin() + static_cast<std::ptrdiff_t>(start));
  return ConvexPolygon(std::move(out));
}

std::optional<ConvexPolygon> clip(const ConvexPolygon& polygon, const Halfspace2D& halfspace)
{
  if (halfspace.normal.norm() <= 0.0)
    throw Error(ErrorCode::invalid_input, "geometry", "halfspace normal must be nonzero");
  return finish(clip_vertices(polygon.vertices(), halfspace));
}

std::optional<ConvexPolygon> intersect_halfspaces(std::span<const Halfspace2D> halfspaces, double bound)
{
  if (!(bound > 0.0))
    throw Error(ErrorCode::invalid_input, "geometry", "bound must be positive");
  std::vector<Eigen::Vector2d> v{
    { -bound, -bound }, { bound, -bound }, { bound, bound }, { -bound, bound }
  };
  for (const auto& h : halfspaces) {
    if (!(h.normal.norm() > 0.0) || !h.normal.allFinite() || !std::isfinite(h.offset))
      throw Error(ErrorCode::invalid_input, "geometry", "halfspace must have a finite nonzero normal");
    v = cleanup(clip_vertices(v, h));
    if (v.size() < 3)
      return std::nullopt;
  }
  return finish(std::move(v));
}

std::optional<ConvexPolygon> intersect(const ConvexPolygon& a, const ConvexPolygon& b)
{
  std::vector<Eigen::Vector2d> v = a.vertices();
  for (const auto& h : b.edge_halfspaces()) {
    v = cleanup(clip_vertices(v, h));
    if (v.size() < 3)
      return std::nullopt;
  }
  return finish(std::move(v));
}

bool touches_bound(const ConvexPolygon& polygon, double bound)
{
  const double tol = 1e-9 * bound;
  for (const auto& v : polygon.vertices())
    if (v.cwiseAbs().maxCoeff() >= bound - tol)
      return true;
  return false;
}

double boundary_distance(const ConvexPolygon& polygon, const Eigen::Vector2d& y)
{
  const auto& v = polygon.vertices();
  if (v.size() < 3)
    throw Error(ErrorCode::invalid_input, "geometry", "polygon must be non-empty");
  const auto edges = polygon.edge_halfspaces();
  const double inner = min_edge_slack(edges, y);
  if (inner >= 0.0)
    return inner;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, segment_distance(y, v[i], v[(i + 1) % v.size()]));
  return best;
}

double hausdorff_distance(const ConvexPolygon& a, const ConvexPolygon& b)
{
  if (a.size() < 3 || b.size() < 3)
    throw Error(ErrorCode::invalid_input, "geometry", "Hausdorff distance needs two non-empty polygons");
  const double d = std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
  return d <= 1e-12 ? 0.0 : d;
}

ConvexPolygon regular_polygon(const Eigen::Vector2d& center, double radius, int count)
{
  std::vector<Eigen::Vector2d> v;
  v.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / count;
    v.emplace_back(center + radius * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
  }
  return ConvexPolygon(std::move(v));
}

std::string to_json(const ConvexPolygon& polygon)
{
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : polygon.vertices())
    j.push_back({ v.x(), v.y() });
  return j.dump();
}

std::string to_csv(const ConvexPolygon& polygon)
{
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "vertex_index,y1,y2\n";
  for (std::size_t i = 0; i < polygon.size(); ++i)
    os << i << ',' << polygon.vertices()[i].x() << ',' << polygon.vertices()[i].y() << '\n';
  return os.str();
}

} // namespace depthreg::geometry
