#pragma once

#include "depthreg/estimators.hpp"
#include "depthreg/geometry.hpp"
#include "depthreg/kernels.hpp"

#include <optional>
#include <string>
#include <vector>

namespace depthreg::contours {

using estimators::Dataset;
using geometry::ConvexPolygon;

enum class Method
{
  local_constant,
  local_bilinear,
  global
};

Method parse_method(const std::string& name);
const char* to_string(Method method);

/// Conditional hyperplane fitted for one direction of the grid.
struct DirectionFit
{
  Eigen::VectorXd u;
  Eigen::VectorXd gamma_c; // gamma * c, so the halfspace normal is u - gamma_c
  double a = 0.0;
  Eigen::VectorXd c;
  double objective = 0.0;
  double subgrad_lo = 0.0;
  double subgrad_hi = 0.0;
  qr::SolveStatus status = qr::SolveStatus::failed;
  std::string error; // non-empty when the fit failed and the direction was skipped

  bool ok() const { return error.empty(); }
  Eigen::VectorXd normal() const { return u - gamma_c; }
};

/// Polygonal w0-cut at level tau (m = 2); for other m only the per-direction
/// hyperplanes are produced.
struct CutContour
{
  Eigen::VectorXd w0;
  double tau = 0.2;
  Method method = Method::local_bilinear;
  double bandwidth = 0.0;
  std::optional<ConvexPolygon> polygon;
  std::vector<DirectionFit> per_direction;
  bool unbounded_suspect = false;
  int failed_directions = 0;
  std::vector<std::string> warnings;
};

struct CutOptions
{
  double bound = geometry::default_bound;
  /// Worker threads over direction blocks; results do not depend on it.
  int threads = 1;
  /// Directions fitted in one warm-started chain.
  int block_size = 30;
  std::string dump_path;
};

/// Fits every direction of the grid at (tau, w0) and intersects the upper
/// halfspaces {y : (u - gamma c)'y >= a}. Up to 1% of the directions may fail
/// (they are recorded and skipped); more failures throw contour_failure.
/// `h` is ignored for Method::global, which uses unit weights.
CutContour build_cut(const Dataset& data,
                     double tau,
                     const Eigen::VectorXd& w0,
                     const geometry::DirectionGrid& grid,
                     const kernels::KernelSpec& kernel,
                     double h,
                     Method method,
                     const CutOptions& options = {});

/// Upper halfspaces of the successful direction fits (m = 2).
std::vector<geometry::Halfspace2D> halfspaces(const std::vector<DirectionFit>& fits);

/// Re-runs the intersection step for a set of direction fits.
std::optional<ConvexPolygon> assemble(const std::vector<DirectionFit>& fits, double bound = geometry::default_bound);

struct ContourFamily
{
  Eigen::VectorXd w0;
  std::vector<double> taus;
  std::vector<CutContour> contours;
  bool nested_repaired = false;
};

ContourFamily build_family(const Dataset& data,
                           const std::vector<double>& taus,
                           const Eigen::VectorXd& w0,
                           const geometry::DirectionGrid& grid,
                           const kernels::KernelSpec& kernel,
                           const kernels::BandwidthPlan& plan,
                           Method method,
                           bool repair_nesting,
                           const CutOptions& options = {});

/// Replaces each polygon by its intersection with all lower-tau polygons.
ContourFamily repair_nesting(ContourFamily family);

/// True when every vertex of `inner` lies in `outer` within tol.
bool nested_in(const ConvexPolygon& inner, const ConvexPolygon& outer, double tol = 1e-7);

/// Weighted fraction (weights normalized to one) of points inside-or-on the
/// polygon, tolerance 1e-9. Throws invalid_input on an empty polygon.
double empirical_coverage(const CutContour& contour, const Eigen::MatrixXd& points, const Eigen::VectorXd& weights);

} // namespace depthreg::contours
