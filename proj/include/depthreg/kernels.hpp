#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace depthreg::kernels {

enum class KernelFamily
{
  gaussian,
  epanechnikov,
  uniform
};

KernelFamily parse_family(const std::string& name);
const char* to_string(KernelFamily family);

/// Spherical kernel on R^d with its moment constants.
///
/// gaussian:     (2 pi)^(-d/2) exp(-|w|^2 / 2), infinite support
/// epanechnikov: (d + 2) / (2 V_d) (1 - |w|^2) on the unit ball
/// uniform:      1 / V_d on the unit ball
///
/// V_d is the volume of the unit ball. mu2 is reported as the scalar
/// per-coordinate second moment; the moment matrix is mu2 * I_d.
struct KernelSpec
{
  KernelFamily family = KernelFamily::gaussian;
  int dimension = 1;

  double operator()(const Eigen::VectorXd& w) const;
  double value_at_squared_norm(double r2) const;

  /// C0 = integral of K^2
  double c0() const;
  double mu2() const;
  Eigen::MatrixXd mu2_matrix() const { return mu2() * Eigen::MatrixXd::Identity(dimension, dimension); }
  /// Infinity for the Gaussian kernel.
  double support_radius() const;
};

KernelSpec make_kernel(KernelFamily family, int dimension);

/// omega_i = h^-d K((W_i - w0) / h), not renormalized.
/// Throws invalid_bandwidth for h <= 0 and empty_neighborhood when every
/// weight is zero.
Eigen::VectorXd local_weights(const Eigen::MatrixXd& covariates,
                              const Eigen::VectorXd& w0,
                              const KernelSpec& kernel,
                              double h);

/// Rescales weights to sum to their count (the sum-to-n reporting convention).
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& weights);

double normal_pdf(double x);
double normal_cdf(double x);
/// Inverse standard normal CDF (Acklam's rational approximation followed by
/// one Halley step against erfc; about 1e-15 relative accuracy).
double normal_quantile(double p);

/// 3 sd(W) n^(-1/5), sd with denominator n - 1.
double rule_of_thumb_bandwidth(const Eigen::VectorXd& covariate);

/// h_tau = (tau (1 - tau))^(1/5) phi(Phi^-1(tau))^(-2/5) h_fz
double tau_adjusted_bandwidth(double h_fz, double tau);

enum class BandwidthRule
{
  rule_of_thumb,
  manual,
  fan_zhang_supplied
};

struct BandwidthPlan
{
  double base_h = 0.0;
  BandwidthRule rule = BandwidthRule::manual;
  std::optional<double> sigma_w;
  bool tau_adjust = false;

  /// Bandwidth used for quantile level tau.
  double at(double tau) const;
};

BandwidthPlan manual_plan(double h, bool tau_adjust = false);
BandwidthPlan thumb_plan(const Eigen::MatrixXd& covariates, bool tau_adjust = false);
BandwidthPlan fan_zhang_plan(double h_fz, bool tau_adjust = true);

} // namespace depthreg::kernels
