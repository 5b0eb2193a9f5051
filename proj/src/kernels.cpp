#include "depthreg/kernels.hpp"

#include "depthreg/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace depthreg::kernels {

namespace {

double unit_ball_volume(int d)
{
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

} // namespace

KernelFamily parse_family(const std::string& name)
{
  if (name == "gaussian")
    return KernelFamily::gaussian;
  if (name == "epanechnikov")
    return KernelFamily::epanechnikov;
  if (name == "uniform")
    return KernelFamily::uniform;
  throw Error(ErrorCode::config_error, "kernels", "unknown kernel family", name);
}

const char* to_string(KernelFamily family)
{
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::uniform: return "uniform";
  }
  return "unknown";
}

KernelSpec make_kernel(KernelFamily family, int dimension)
{
  if (dimension < 1)
    throw Error(ErrorCode::unsupported_dimension, "kernels", "kernel dimension must be at least 1");
  return KernelSpec{ family, dimension };
}

double KernelSpec::value_at_squared_norm(double r2) const
{
  const int d = dimension;
  switch (family) {
    case KernelFamily::gaussian:
      return std::pow(2.0 * std::numbers::pi, -0.5 * d) * std::exp(-0.5 * r2);
    case KernelFamily::epanechnikov:
      return r2 <= 1.0 ? (d + 2.0) / (2.0 * unit_ball_volume(d)) * (1.0 - r2) : 0.0;
    case KernelFamily::uniform:
      return r2 <= 1.0 ? 1.0 / unit_ball_volume(d) : 0.0;
  }
  return 0.0;
}

double KernelSpec::operator()(const Eigen::VectorXd& w) const
{
  return value_at_squared_norm(w.squaredNorm());
}

double KernelSpec::c0() const
{
  const double d = dimension;
  switch (family) {
    case KernelFamily::gaussian: return std::pow(4.0 * std::numbers::pi, -0.5 * d);
    case KernelFamily::epanechnikov: return 2.0 * (d + 2.0) / (unit_ball_volume(dimension) * (d + 4.0));
    case KernelFamily::uniform: return 1.0 / unit_ball_volume(dimension);
  }
  return 0.0;
}

double KernelSpec::mu2() const
{
  const double d = dimension;
  switch (family) {
    case KernelFamily::gaussian: return 1.0;
    case KernelFamily::epanechnikov: return 1.0 / (d + 4.0);
    case KernelFamily::uniform: return 1.0 / (d + 2.0);
  }
  return 0.0;
}

double KernelSpec::support_radius() const
{
  return family == KernelFamily::gaussian ? std::numeric_limits<double>::infinity() : 1.0;
}

Eigen::VectorXd local_weights(const Eigen::MatrixXd& covariates,
                              const Eigen::VectorXd& w0,
                              const KernelSpec& kernel,
                              double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_bandwidth, "kernels", "bandwidth must be positive and finite");
  if (covariates.cols() != w0.size() || covariates.cols() != kernel.dimension)
    throw Error(ErrorCode::invalid_input, "kernels", "covariate, w0 and kernel dimensions differ");
  const double scale = std::pow(h, -kernel.dimension);
  Eigen::VectorXd weights(covariates.rows());
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    const double r2 = ((covariates.row(i).transpose() - w0) / h).squaredNorm();
    weights(i) = scale * kernel.value_at_squared_norm(r2);
  }
  if (!(weights.array() > 0.0).any())
    throw Error(ErrorCode::empty_neighborhood, "kernels", "no observation has positive kernel weight");
  return weights;
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights)
{
  const double total = weights.sum();
  if (!(total > 0.0))
    throw Error(ErrorCode::invalid_input, "kernels", "weights must have a positive sum");
  return weights * (static_cast<double>(weights.size()) / total);
}

double normal_pdf(double x)
{
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::invalid_input, "kernels", "normal quantile needs p in (0, 1)");
  static constexpr std::array<double, 6> a{ -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                            1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00 };
  static constexpr std::array<double, 5> b{ -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                            6.680131188771972e+01, -1.328068155288572e+01 };
  static constexpr std::array<double, 6> c{ -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                            -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00 };
  static constexpr std::array<double, 4> d{ 7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                            3.754408661907416e+00 };
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step; upper-tail values are refined through the lower tail so
  // that erfc never has to resolve 1 - p.
  auto refine = [](double x0, double target) {
    const double err = normal_cdf(x0) - target;
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x0 * x0);
    return x0 - u / (1.0 + 0.5 * x0 * u);
  };
  if (p <= 0.5)
    return refine(x, p);
  return -refine(-x, 1.0 - p);
}

double rule_of_thumb_bandwidth(const Eigen::VectorXd& covariate)
{
  const auto n = covariate.size();
  if (n < 2)
    throw Error(ErrorCode::invalid_input, "kernels", "rule-of-thumb bandwidth needs n >= 2");
  const double mean = covariate.mean();
  const double var = (covariate.array() - mean).square().sum() / static_cast<double>(n - 1);
  if (!(var > 0.0))
    throw Error(ErrorCode::invalid_input, "kernels", "rule-of-thumb bandwidth needs a nonconstant covariate");
  return 3.0 * std::sqrt(var) * std::pow(static_cast<double>(n), -0.2);
}

double tau_adjusted_bandwidth(double h_fz, double tau)
{
  if (!(h_fz > 0.0))
    throw Error(ErrorCode::invalid_bandwidth, "kernels", "reference bandwidth must be positive");
  if (!(tau > 0.0 && tau < 1.0))
    throw Error(ErrorCode::invalid_input, "kernels", "tau must lie in (0, 1)");
  // Evaluated through |tau - 1/2| snapped to a 1e-12 grid: fl(1 - fl(1 - tau))
  // need not equal tau, and the snap makes tau and 1 - tau bit-identical for
  // any tau written with at most 12 decimals.
  const double s = std::round(std::abs(tau - 0.5) * 1e12) / 1e12;
  const double t = 0.5 - s;
  const double dens = normal_pdf(normal_quantile(t));
  return std::pow(t * (1.0 - t), 0.2) * std::pow(dens, -0.4) * h_fz;
}

double BandwidthPlan::at(double tau) const
{
  return tau_adjust ? tau_adjusted_bandwidth(base_h, tau) : base_h;
}

BandwidthPlan manual_plan(double h, bool tau_adjust)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_bandwidth, "kernels", "bandwidth must be positive and finite");
  return BandwidthPlan{ h, BandwidthRule::manual, std::nullopt, tau_adjust };
}

BandwidthPlan thumb_plan(const Eigen::MatrixXd& covariates, bool tau_adjust)
{
  if (covariates.cols() != 1)
    throw Error(ErrorCode::unsupported_dimension, "kernels", "rule-of-thumb bandwidth needs a single covariate");
  const Eigen::VectorXd w = covariates.col(0);
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(w.size() - 1, 1)));
  return BandwidthPlan{ rule_of_thumb_bandwidth(w), BandwidthRule::rule_of_thumb, sd, tau_adjust };
}

BandwidthPlan fan_zhang_plan(double h_fz, bool tau_adjust)
{
  if (!(h_fz > 0.0) || !std::isfinite(h_fz))
    throw Error(ErrorCode::invalid_bandwidth, "kernels", "reference bandwidth must be positive and finite");
  return BandwidthPlan{ h_fz, BandwidthRule::fan_zhang_supplied, std::nullopt, tau_adjust };
}

} // namespace depthreg::kernels
