#pragma once

#include "depthreg/geometry.hpp"
#include "depthreg/kernels.hpp"
#include "depthreg/qr_solver.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace depthreg::estimators {

using geometry::DirectionFrame;

/// Covariates W (n x (p-1), possibly zero columns) and responses Y (n x m).
struct Dataset
{
  Eigen::MatrixXd covariates;
  Eigen::MatrixXd responses;

  Eigen::Index size() const { return responses.rows(); }
  int m() const { return static_cast<int>(responses.cols()); }
  int p() const { return static_cast<int>(covariates.cols()) + 1; }
};

/// Throws invalid_input unless n >= m + p, m >= 2 and all entries are finite.
void validate(const Dataset& data);

struct SubgradientReport
{
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

/// Weighted fractions (weights normalized to sum one) of residuals strictly
/// below -tol and at most tol, with tol = 1e-8 * scale.
SubgradientReport subgradient_check(const Eigen::VectorXd& residuals,
                                    const Eigen::VectorXd& weights,
                                    double tau,
                                    double scale);

struct FitOptions
{
  std::vector<Eigen::Index> warm_basis;
  std::string dump_path;
};

/// Hyperplane b'y - a'(1, w')' = 0 with b = u - gamma c, so b'u = 1.
struct QuantileHyperplane
{
  double tau = 0.5;
  DirectionFrame frame;
  Eigen::VectorXd a; // length p
  Eigen::VectorXd c; // length m - 1
  Eigen::VectorXd b;
  /// Weighted mean check loss, weights normalized to sum n.
  double objective = 0.0;
  double subgrad_lo = 0.0;
  double subgrad_hi = 0.0;
  qr::SolveStatus status = qr::SolveStatus::failed;
  std::vector<Eigen::Index> basis;
};

/// Conditional hyperplane u'y - c' gamma' y - a = 0 at a fixed w.
struct ConditionalHyperplane
{
  double a = 0.0;
  Eigen::VectorXd c;

  Eigen::VectorXd normal(const DirectionFrame& frame) const { return frame.u - frame.gamma * c; }
};

struct LocalConstantFit
{
  Eigen::VectorXd w0;
  double tau = 0.5;
  DirectionFrame frame;
  double a = 0.0;
  Eigen::VectorXd c;
  double objective = 0.0;
  double subgrad_lo = 0.0;
  double subgrad_hi = 0.0;
  qr::SolveStatus status = qr::SolveStatus::failed;
  std::vector<Eigen::Index> basis;

  ConditionalHyperplane conditional() const { return { a, c }; }
};

/// Coefficients of the augmented-regressor fit, regressors centered at w0:
/// u'y = a + a_dot'(w - w0) + sum_j (c_j + c_dot.col(j)'(w - w0)) (gamma'y)_j
struct LocalBilinearFit
{
  Eigen::VectorXd w0;
  double tau = 0.5;
  DirectionFrame frame;
  double a = 0.0;
  Eigen::VectorXd c;      // m - 1
  Eigen::VectorXd a_dot;  // p - 1
  Eigen::MatrixXd c_dot;  // (p - 1) x (m - 1), c_dot(k, j) = d c_j / d w_k
  double objective = 0.0;
  double subgrad_lo = 0.0;
  double subgrad_hi = 0.0;
  qr::SolveStatus status = qr::SolveStatus::failed;
  std::vector<Eigen::Index> basis;
};

/// Local-constant regressors (1, gamma'Y_i).
Eigen::MatrixXd constant_design(const Dataset& data, const DirectionFrame& frame);
/// (1, gamma'Y_i) kron (1, W_i - w0); column j * p + l pairs factor j of the
/// first term with factor l of the second.
Eigen::MatrixXd bilinear_design(const Dataset& data, const DirectionFrame& frame, const Eigen::VectorXd& w0);

QuantileHyperplane fit_global(const Dataset& data,
                              double tau,
                              const DirectionFrame& frame,
                              const Eigen::VectorXd& weights,
                              const FitOptions& options = {});

LocalConstantFit fit_local_constant(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const Eigen::VectorXd& weights,
                                    const FitOptions& options = {});

LocalConstantFit fit_local_constant(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const kernels::KernelSpec& kernel,
                                    double h,
                                    const FitOptions& options = {});

/// Throws degenerate_design (naming the unidentified coefficient blocks)
/// when the weighted augmented design is rank deficient.
LocalBilinearFit fit_local_bilinear(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const Eigen::VectorXd& weights,
                                    const FitOptions& options = {});

LocalBilinearFit fit_local_bilinear(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const kernels::KernelSpec& kernel,
                                    double h,
                                    const FitOptions& options = {});

/// The w0-conditional hyperplane (a, c): the augmented equation at w = w0.
ConditionalHyperplane extract_conditional(const LocalBilinearFit& fit);

/// a_w = a + (w - w0)'a_dot, c_w = c + c_dot'(w - w0).
ConditionalHyperplane bilinear_correction(const LocalBilinearFit& fit, const Eigen::VectorXd& w);

Eigen::VectorXd residuals(const QuantileHyperplane& fit, const Dataset& data);
Eigen::VectorXd residuals(const LocalConstantFit& fit, const Dataset& data);
Eigen::VectorXd residuals(const LocalBilinearFit& fit, const Dataset& data);

/// max |u'Y_i|, the scale used for residual tolerances.
double response_scale(const Dataset& data, const DirectionFrame& frame);

template<typename Fit>
SubgradientReport subgradient_check(const Fit& fit, const Dataset& data, const Eigen::VectorXd& weights)
{
  return subgradient_check(residuals(fit, data), weights, fit.tau, response_scale(data, fit.frame));
}

} // namespace depthreg::estimators
