#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace depthreg::qr {

/// rho_tau(zeta) = max{(tau - 1) zeta, tau zeta}
inline double check_loss(double zeta, double tau)
{
  return zeta >= 0.0 ? tau * zeta : (tau - 1.0) * zeta;
}

/// Weighted single-output quantile regression:
/// minimize sum_i w_i rho_tau(y_i - x_i' theta).
struct QrProblem
{
  Eigen::VectorXd responses;
  Eigen::MatrixXd regressors; // n x q, any intercept column included explicitly
  Eigen::VectorXd weights;
  double tau = 0.5;

  Eigen::Index size() const { return responses.size(); }
  Eigen::Index dimension() const { return regressors.cols(); }
};

enum class SolveStatus
{
  optimal,
  degenerate_optimal,
  failed
};

const char* to_string(SolveStatus status);

struct QrSolution
{
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  int active_count = 0;
  int iterations = 0;
  SolveStatus status = SolveStatus::failed;
  std::string diagnostic;
  /// Observations interpolated by the final basic solution.
  std::vector<Eigen::Index> basis;
};

enum class RankPolicy
{
  /// Rank-deficient designs return status `failed`.
  fail,
  /// Unidentified coefficients are fixed at zero and the identified block is
  /// solved; status is `degenerate_optimal`.
  fix_unidentified_at_zero
};

struct SolveOptions
{
  /// Starting basis (observation indices); ignored when not usable.
  std::vector<Eigen::Index> warm_basis;
  RankPolicy rank_policy = RankPolicy::fail;
  /// When non-empty, the problem and the simplex trace are appended here.
  std::string dump_path;
  int max_iterations = 0; // 0 = automatic
};

/// Exact minimizer by a simplex on basic observation sets with a
/// weighted-median line search along each edge. Observations whose weight is
/// below 1e-12 of the largest weight are dropped. Throws Error(invalid_input)
/// on non-finite data, tau outside (0, 1) or too few positive weights.
QrSolution solve(const QrProblem& problem, const SolveOptions& options = {});

/// Sum of w_i rho_tau(y_i - x_i' theta).
double objective(const QrProblem& problem, const Eigen::VectorXd& coefficients);

/// Unit-weight problem with rows (w_i x_i, w_i y_i); same minimizers since
/// rho_tau is positively homogeneous.
QrProblem reduce_weighted_to_scaled(const QrProblem& problem);

/// Throws Error(invalid_input) unless the problem satisfies its invariants.
void validate(const QrProblem& problem);

/// Numerical rank of the rows with positive weight, scaled by sqrt(w_i);
/// `dependent` receives the column indices left unidentified.
int weighted_rank(const Eigen::MatrixXd& regressors,
                  const Eigen::VectorXd& weights,
                  std::vector<Eigen::Index>* dependent = nullptr,
                  double threshold = 1e-10);

} // namespace depthreg::qr
