#include "depthreg/estimators.hpp"

#include "depthreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace depthreg::estimators {

namespace {

void check_weights(const Dataset& data, const Eigen::VectorXd& weights, Eigen::Index q)
{
  if (weights.size() != data.size())
    throw Error(ErrorCode::invalid_input, "estimators", "weight vector length differs from sample size");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw Error(ErrorCode::invalid_input, "estimators", "weights must be finite and nonnegative");
  if (!(weights.array() > 0.0).any())
    throw Error(ErrorCode::empty_neighborhood, "estimators", "no observation has positive weight");
  if ((weights.array() > 0.0).count() < q) {
    std::ostringstream msg;
    msg << "fewer than " << q << " observations with positive weight";
    throw Error(ErrorCode::empty_neighborhood, "estimators", msg.str());
  }
}

void check_frame(const Dataset& data, const DirectionFrame& frame)
{
  if (frame.u.size() != data.m())
    throw Error(ErrorCode::invalid_input, "estimators", "direction dimension differs from response dimension");
}

void check_w0(const Dataset& data, const Eigen::VectorXd& w0)
{
  if (w0.size() != data.p() - 1)
    throw Error(ErrorCode::invalid_input, "estimators", "w0 dimension differs from covariate dimension");
}

qr::QrSolution run_solver(const Eigen::VectorXd& response,
                          Eigen::MatrixXd design,
                          const Eigen::VectorXd& weights,
                          double tau,
                          const FitOptions& options,
                          qr::RankPolicy policy)
{
  qr::QrProblem problem{ response, std::move(design), weights, tau };
  qr::SolveOptions solve_options;
  solve_options.warm_basis = options.warm_basis;
  solve_options.rank_policy = policy;
  solve_options.dump_path = options.dump_path;
  auto solution = qr::solve(problem, solve_options);
  if (solution.status == qr::SolveStatus::failed)
    throw Error(ErrorCode::solver_failure, "estimators", "quantile regression failed", solution.diagnostic);
  return solution;
}

double mean_loss(const qr::QrSolution& s, const Eigen::VectorXd& weights)
{
  return s.objective / weights.sum();
}

const char* block_name(int j, int l)
{
  if (j == 0)
    return l == 0 ? "a" : "a_dot";
  return l == 0 ? "c" : "c_dot";
}

} // namespace

void validate(const Dataset& data)
{
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_input, "estimators", msg); };
  if (data.covariates.rows() != data.responses.rows())
    fail("covariates and responses must have the same number of rows");
  if (data.m() < 2)
    fail("responses must have at least two columns");
  if (data.size() < data.m() + data.p())
    fail("need n >= m + p observations");
  if (!data.covariates.allFinite() || !data.responses.allFinite())
    fail("dataset contains non-finite entries");
}

SubgradientReport subgradient_check(const Eigen::VectorXd& residuals,
                                    const Eigen::VectorXd& weights,
                                    double tau,
                                    double scale)
{
  const double total = weights.sum();
  const double tol = 1e-8 * scale;
  double below = 0.0;
  double at_or_below = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    if (residuals(i) < -tol)
      below += weights(i);
    if (residuals(i) <= tol)
      at_or_below += weights(i);
  }
  SubgradientReport report;
  report.lo = below / total;
  report.hi = at_or_below / total;
  report.pass = report.lo <= tau && tau <= report.hi;
  return report;
}

double response_scale(const Dataset& data, const DirectionFrame& frame)
{
  return (data.responses * frame.u).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd constant_design(const Dataset& data, const DirectionFrame& frame)
{
  Eigen::MatrixXd x(data.size(), data.m());
  x.col(0).setOnes();
  x.rightCols(data.m() - 1) = data.responses * frame.gamma;
  return x;
}

Eigen::MatrixXd bilinear_design(const Dataset& data, const DirectionFrame& frame, const Eigen::VectorXd& w0)
{
  const int m = data.m();
  const int p = data.p();
  const Eigen::MatrixXd lc = constant_design(data, frame);
  Eigen::MatrixXd local(data.size(), p);
  local.col(0).setOnes();
  if (p > 1)
    local.rightCols(p - 1) = data.covariates.rowwise() - w0.transpose();
  Eigen::MatrixXd x(data.size(), m * p);
  for (int j = 0; j < m; ++j)
    for (int l = 0; l < p; ++l)
      x.col(j * p + l) = lc.col(j).cwiseProduct(local.col(l));
  return x;
}

QuantileHyperplane fit_global(const Dataset& data,
                              double tau,
                              const DirectionFrame& frame,
                              const Eigen::VectorXd& weights,
                              const FitOptions& options)
{
  validate(data);
  check_frame(data, frame);
  const int m = data.m();
  const int p = data.p();
  check_weights(data, weights, m + p - 1);

  Eigen::MatrixXd x(data.size(), p + m - 1);
  x.col(0).setOnes();
  if (p > 1)
    x.middleCols(1, p - 1) = data.covariates;
  x.rightCols(m - 1) = data.responses * frame.gamma;
  const Eigen::VectorXd y = data.responses * frame.u;

  const auto s = run_solver(y, std::move(x), weights, tau, options, qr::RankPolicy::fix_unidentified_at_zero);
  QuantileHyperplane fit;
  fit.tau = tau;
  fit.frame = frame;
  fit.a = s.coefficients.head(p);
  fit.c = s.coefficients.tail(m - 1);
  fit.b = frame.u - frame.gamma * fit.c;
  fit.objective = mean_loss(s, weights);
  fit.status = s.status;
  fit.basis = s.basis;
  const auto report = subgradient_check(fit, data, weights);
  fit.subgrad_lo = report.lo;
  fit.subgrad_hi = report.hi;
  return fit;
}

LocalConstantFit fit_local_constant(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const Eigen::VectorXd& weights,
                                    const FitOptions& options)
{
  validate(data);
  check_frame(data, frame);
  check_w0(data, w0);
  check_weights(data, weights, data.m());

  const auto s = run_solver(data.responses * frame.u, constant_design(data, frame), weights, tau, options,
                            qr::RankPolicy::fix_unidentified_at_zero);
  LocalConstantFit fit;
  fit.w0 = w0;
  fit.tau = tau;
  fit.frame = frame;
  fit.a = s.coefficients(0);
  fit.c = s.coefficients.tail(data.m() - 1);
  fit.objective = mean_loss(s, weights);
  fit.status = s.status;
  fit.basis = s.basis;
  const auto report = subgradient_check(fit, data, weights);
  fit.subgrad_lo = report.lo;
  fit.subgrad_hi = report.hi;
  return fit;
}

LocalConstantFit fit_local_constant(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const kernels::KernelSpec& kernel,
                                    double h,
                                    const FitOptions& options)
{
  validate(data);
  check_w0(data, w0);
  return fit_local_constant(data, tau, frame, w0, kernels::local_weights(data.covariates, w0, kernel, h), options);
}

LocalBilinearFit fit_local_bilinear(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const Eigen::VectorXd& weights,
                                    const FitOptions& options)
{
  validate(data);
  check_frame(data, frame);
  check_w0(data, w0);
  const int m = data.m();
  const int p = data.p();
  check_weights(data, weights, m * p);

  Eigen::MatrixXd x = bilinear_design(data, frame, w0);
  std::vector<Eigen::Index> dependent;
  if (qr::weighted_rank(x, weights, &dependent) < m * p) {
    std::set<std::string> blocks;
    for (auto k : dependent)
      blocks.insert(block_name(static_cast<int>(k) / p, static_cast<int>(k) % p));
    std::string names;
    for (const auto& b : blocks)
      names += (names.empty() ? "" : ",") + b;
    throw Error(ErrorCode::degenerate_design, "estimators",
                "local bilinear design is rank deficient; unidentified block(s): " + names, names);
  }

  const auto s = run_solver(data.responses * frame.u, std::move(x), weights, tau, options, qr::RankPolicy::fail);
  LocalBilinearFit fit;
  fit.w0 = w0;
  fit.tau = tau;
  fit.frame = frame;
  fit.a = s.coefficients(0);
  fit.c.resize(m - 1);
  fit.a_dot.resize(p - 1);
  fit.c_dot.resize(p - 1, m - 1);
  for (int l = 1; l < p; ++l)
    fit.a_dot(l - 1) = s.coefficients(l);
  for (int j = 1; j < m; ++j) {
    fit.c(j - 1) = s.coefficients(j * p);
    for (int l = 1; l < p; ++l)
      fit.c_dot(l - 1, j - 1) = s.coefficients(j * p + l);
  }
  fit.objective = mean_loss(s, weights);
  fit.status = s.status;
  fit.basis = s.basis;
  const auto report = subgradient_check(fit, data, weights);
  fit.subgrad_lo = report.lo;
  fit.subgrad_hi = report.hi;
  return fit;
}

LocalBilinearFit fit_local_bilinear(const Dataset& data,
                                    double tau,
                                    const DirectionFrame& frame,
                                    const Eigen::VectorXd& w0,
                                    const kernels::KernelSpec& kernel,
                                    double h,
                                    const FitOptions& options)
{
  validate(data);
  check_w0(data, w0);
  return fit_local_bilinear(data, tau, frame, w0, kernels::local_weights(data.covariates, w0, kernel, h), options);
}

ConditionalHyperplane extract_conditional(const LocalBilinearFit& fit)
{
  const ConditionalHyperplane at_w0 = bilinear_correction(fit, fit.w0);
  // Regressors are centered at w0, so the correction term vanishes there.
  if (at_w0.a != fit.a || at_w0.c != fit.c)
    throw Error(ErrorCode::solver_failure, "estimators", "conditional extraction is inconsistent at w0");
  return { fit.a, fit.c };
}

ConditionalHyperplane bilinear_correction(const LocalBilinearFit& fit, const Eigen::VectorXd& w)
{
  if (w.size() != fit.w0.size())
    throw Error(ErrorCode::invalid_input, "estimators", "w dimension differs from w0");
  const Eigen::VectorXd dw = w - fit.w0;
  ConditionalHyperplane out;
  out.a = fit.a + dw.dot(fit.a_dot);
  out.c = fit.c + fit.c_dot.transpose() * dw;
  return out;
}

Eigen::VectorXd residuals(const QuantileHyperplane& fit, const Dataset& data)
{
  Eigen::VectorXd r = data.responses * fit.b;
  r.array() -= fit.a(0);
  if (data.p() > 1)
    r -= data.covariates * fit.a.tail(data.p() - 1);
  return r;
}

Eigen::VectorXd residuals(const LocalConstantFit& fit, const Dataset& data)
{
  Eigen::VectorXd r = data.responses * (fit.frame.u - fit.frame.gamma * fit.c);
  r.array() -= fit.a;
  return r;
}

Eigen::VectorXd residuals(const LocalBilinearFit& fit, const Dataset& data)
{
  const int m = data.m();
  const int p = data.p();
  Eigen::VectorXd theta(m * p);
  theta(0) = fit.a;
  for (int l = 1; l < p; ++l)
    theta(l) = fit.a_dot(l - 1);
  for (int j = 1; j < m; ++j) {
    theta(j * p) = fit.c(j - 1);
    for (int l = 1; l < p; ++l)
      theta(j * p + l) = fit.c_dot(l - 1, j - 1);
  }
  return data.responses * fit.frame.u - bilinear_design(data, fit.frame, fit.w0) * theta;
}

} // namespace depthreg::estimators
