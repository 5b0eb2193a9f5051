#include "depthreg/contours.hpp"

#include "depthreg/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace depthreg::contours {

namespace {

struct Conditional
{
  double a;
  Eigen::VectorXd c;
  double objective;
  double lo;
  double hi;
  qr::SolveStatus status;
  std::vector<Eigen::Index> basis;
};

Conditional fit_direction(const Dataset& data,
                          double tau,
                          const geometry::DirectionFrame& frame,
                          const Eigen::VectorXd& w0,
                          const Eigen::VectorXd& weights,
                          Method method,
                          const estimators::FitOptions& options)
{
  switch (method) {
    case Method::local_constant: {
      const auto f = estimators::fit_local_constant(data, tau, frame, w0, weights, options);
      return { f.a, f.c, f.objective, f.subgrad_lo, f.subgrad_hi, f.status, f.basis };
    }
    case Method::local_bilinear: {
      const auto f = estimators::fit_local_bilinear(data, tau, frame, w0, weights, options);
      const auto cond = estimators::extract_conditional(f);
      return { cond.a, cond.c, f.objective, f.subgrad_lo, f.subgrad_hi, f.status, f.basis };
    }
    case Method::global: {
      const auto f = estimators::fit_global(data, tau, frame, weights, options);
      double a = f.a(0);
      if (w0.size() > 0)
        a += f.a.tail(w0.size()).dot(w0);
      return { a, f.c, f.objective, f.subgrad_lo, f.subgrad_hi, f.status, f.basis };
    }
  }
  throw Error(ErrorCode::invalid_input, "contours", "unknown method");
}

} // namespace

Method parse_method(const std::string& name)
{
  if (name == "constant" || name == "local_constant" || name == "local-constant")
    return Method::local_constant;
  if (name == "bilinear" || name == "local_bilinear" || name == "local-bilinear")
    return Method::local_bilinear;
  if (name == "global")
    return Method::global;
  throw Error(ErrorCode::config_error, "contours", "unknown method", name);
}

const char* to_string(Method method)
{
  switch (method) {
    case Method::local_constant: return "local_constant";
    case Method::local_bilinear: return "local_bilinear";
    case Method::global: return "global";
  }
  return "unknown";
}

std::vector<geometry::Halfspace2D> halfspaces(const std::vector<DirectionFit>& fits)
{
  std::vector<geometry::Halfspace2D> hs;
  hs.reserve(fits.size());
  for (const auto& f : fits) {
    if (!f.ok())
      continue;
    const Eigen::VectorXd n = f.normal();
    hs.push_back({ Eigen::Vector2d(n(0), n(1)), f.a });
  }
  return hs;
}

std::optional<ConvexPolygon> assemble(const std::vector<DirectionFit>& fits, double bound)
{
  const auto hs = halfspaces(fits);
  return geometry::intersect_halfspaces(hs, bound);
}

CutContour build_cut(const Dataset& data,
                     double tau,
                     const Eigen::VectorXd& w0,
                     const geometry::DirectionGrid& grid,
                     const kernels::KernelSpec& kernel,
                     double h,
                     Method method,
                     const CutOptions& options)
{
  estimators::validate(data);
  if (grid.size() == 0)
    throw Error(ErrorCode::invalid_input, "contours", "direction grid is empty");
  if (w0.size() != data.p() - 1)
    throw Error(ErrorCode::invalid_input, "contours", "w0 dimension differs from covariate dimension");

  CutContour cut;
  cut.w0 = w0;
  cut.tau = tau;
  cut.method = method;
  cut.bandwidth = method == Method::global ? 0.0 : h;

  const Eigen::VectorXd weights = method == Method::global
                                    ? Eigen::VectorXd::Ones(data.size())
                                    : kernels::local_weights(data.covariates, w0, kernel, h);

  const auto count = grid.size();
  cut.per_direction.resize(count);
  const std::size_t block = static_cast<std::size_t>(std::max(1, options.block_size));
  const std::size_t blocks = (count + block - 1) / block;

  auto run_block = [&](std::size_t b) {
    estimators::FitOptions fit_options;
    fit_options.dump_path = options.dump_path;
    for (std::size_t k = b * block; k < std::min(count, (b + 1) * block); ++k) {
      const auto& frame = grid.directions[k];
      DirectionFit& out = cut.per_direction[k];
      out.u = frame.u;
      try {
        const auto r = fit_direction(data, tau, frame, w0, weights, method, fit_options);
        out.a = r.a;
        out.c = r.c;
        out.gamma_c = frame.gamma * r.c;
        out.objective = r.objective;
        out.subgrad_lo = r.lo;
        out.subgrad_hi = r.hi;
        out.status = r.status;
        fit_options.warm_basis = r.basis;
      } catch (const Error& e) {
        // A design-level problem affects every direction alike.
        if (e.code() == ErrorCode::degenerate_design || e.code() == ErrorCode::empty_neighborhood ||
            e.code() == ErrorCode::invalid_input)
          throw;
        out.error = e.what();
        fit_options.warm_basis.clear();
      }
    }
  };

  const int threads = std::clamp(options.threads, 1, static_cast<int>(blocks));
  if (threads == 1) {
    for (std::size_t b = 0; b < blocks; ++b)
      run_block(b);
  } else {
    std::atomic<std::size_t> next{ 0 };
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t b = next++; b < blocks; b = next++)
            run_block(b);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    for (auto& th : pool)
      th.join();
    for (auto& e : errors)
      if (e)
        std::rethrow_exception(e);
  }

  for (const auto& f : cut.per_direction)
    if (!f.ok())
      ++cut.failed_directions;
  if (cut.failed_directions * 100 > static_cast<int>(count))
    throw Error(ErrorCode::contour_failure, "contours",
                std::to_string(cut.failed_directions) + " of " + std::to_string(count) + " direction fits failed");

  if (cut.failed_directions > 0)
    cut.warnings.push_back("skipped " + std::to_string(cut.failed_directions) + " of " + std::to_string(count) +
                           " directions whose fit failed");

  if (data.m() == 2) {
    cut.polygon = assemble(cut.per_direction, options.bound);
    cut.unbounded_suspect = cut.polygon && geometry::touches_bound(*cut.polygon, options.bound);
  }
  return cut;
}

bool nested_in(const ConvexPolygon& inner, const ConvexPolygon& outer, double tol)
{
  return std::all_of(inner.vertices().begin(), inner.vertices().end(),
                     [&](const Eigen::Vector2d& v) { return outer.contains(v, tol); });
}

ContourFamily repair_nesting(ContourFamily family)
{
  for (std::size_t k = 1; k < family.contours.size(); ++k) {
    auto& cur = family.contours[k].polygon;
    const auto& prev = family.contours[k - 1].polygon;
    if (!cur)
      continue;
    cur = prev ? geometry::intersect(*cur, *prev) : std::nullopt;
  }
  family.nested_repaired = true;
  return family;
}

ContourFamily build_family(const Dataset& data,
                           const std::vector<double>& taus,
                           const Eigen::VectorXd& w0,
                           const geometry::DirectionGrid& grid,
                           const kernels::KernelSpec& kernel,
                           const kernels::BandwidthPlan& plan,
                           Method method,
                           bool repair,
                           const CutOptions& options)
{
  if (taus.empty())
    throw Error(ErrorCode::invalid_input, "contours", "need at least one tau");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0.0 && taus[k] < 1.0))
      throw Error(ErrorCode::invalid_input, "contours", "tau values must lie in (0, 1)");
    if (k > 0 && !(taus[k] > taus[k - 1]))
      throw Error(ErrorCode::invalid_input, "contours", "tau values must be strictly ascending");
  }
  ContourFamily family;
  family.w0 = w0;
  family.taus = taus;
  for (double tau : taus)
    family.contours.push_back(build_cut(data, tau, w0, grid, kernel, plan.at(tau), method, options));
  return repair ? repair_nesting(std::move(family)) : family;
}

double empirical_coverage(const CutContour& contour, const Eigen::MatrixXd& points, const Eigen::VectorXd& weights)
{
  if (!contour.polygon || contour.polygon->size() < 3)
    throw Error(ErrorCode::invalid_input, "contours", "coverage needs a non-empty polygon");
  if (points.cols() != 2 || points.rows() != weights.size())
    throw Error(ErrorCode::invalid_input, "contours", "points must be n x 2 with matching weights");
  const double total = weights.sum();
  if (!(total > 0.0))
    throw Error(ErrorCode::invalid_input, "contours", "weights must have a positive sum");
  double inside = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (contour.polygon->contains(points.row(i).transpose(), 1e-9))
      inside += weights(i);
  return inside / total;
}

} // namespace depthreg::contours
