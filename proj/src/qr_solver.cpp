#include "depthreg/qr_solver.hpp"

#include "depthreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace depthreg::qr {

namespace {

constexpr double drop_ratio = 1e-12;
constexpr double residual_tol = 1e-8;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fixed pseudo-random response perturbation used only to order ties
// (lexicographic anti-cycling); never enters the reported fit.
double perturbation(Eigen::Index i)
{
  const auto bits = splitmix64(static_cast<std::uint64_t>(i)) >> 11;
  return 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
}

struct Breakpoint
{
  double t;
  double tp;
  Eigen::Index row;
  double increment;
};

class Simplex
{
public:
  Simplex(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double tau, std::ofstream* dump)
    : x_(x)
    , y_(y)
    , w_(w)
    , tau_(tau)
    , dump_(dump)
    , n_(x.rows())
    , q_(x.cols())
  {
    xi_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      xi_(i) = perturbation(i);
    const double yscale = y_.size() ? y_.cwiseAbs().maxCoeff() : 0.0;
    tol_r_ = residual_tol * yscale;
    in_basis_.assign(static_cast<std::size_t>(n_), false);
  }

  bool set_basis(const std::vector<Eigen::Index>& basis)
  {
    if (static_cast<Eigen::Index>(basis.size()) != q_)
      return false;
    Eigen::MatrixXd xb(q_, q_);
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    for (Eigen::Index k = 0; k < q_; ++k) {
      const auto row = basis[static_cast<std::size_t>(k)];
      if (row < 0 || row >= n_ || seen[static_cast<std::size_t>(row)])
        return false;
      seen[static_cast<std::size_t>(row)] = true;
      xb.row(k) = x_.row(row);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
      return false;
    basis_ = basis;
    return true;
  }

  void cold_basis()
  {
    // Start near a sensible fit: weighted least squares, intercept shifted to
    // the weighted tau-quantile of the residuals, then the independent rows
    // with the smallest absolute residuals.
    const Eigen::VectorXd sw = w_.cwiseSqrt();
    const Eigen::MatrixXd xw = sw.asDiagonal() * x_;
    Eigen::VectorXd theta = xw.colPivHouseholderQr().solve(sw.cwiseProduct(y_));
    Eigen::VectorXd r = y_ - x_ * theta;
    for (Eigen::Index k = 0; k < q_; ++k) {
      if ((x_.col(k).array() == 1.0).all()) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return r(a) < r(b); });
        const double total = w_.sum();
        double acc = 0.0;
        double shift = r(order.back());
        for (auto i : order) {
          acc += w_(i);
          if (acc >= tau_ * total) {
            shift = r(i);
            break;
          }
        }
        theta(k) += shift;
        r.array() -= shift;
        break;
      }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(r(a)) < std::abs(r(b)); });

    std::vector<Eigen::VectorXd> ortho;
    std::vector<Eigen::Index> basis;
    for (auto i : order) {
      Eigen::VectorXd v = x_.row(i).transpose();
      const double norm0 = v.norm();
      if (norm0 == 0.0)
        continue;
      for (const auto& e : ortho)
        v -= e.dot(v) * e;
      if (v.norm() > 1e-8 * norm0) {
        ortho.push_back(v.normalized());
        basis.push_back(i);
        if (static_cast<Eigen::Index>(basis.size()) == q_)
          break;
      }
    }
    if (!set_basis(basis))
      throw Error(ErrorCode::solver_failure, "qr_solver", "could not find a nonsingular starting basis");
  }

  int run(int max_iterations)
  {
    int iterations = 0;
    Eigen::VectorXd r(n_), p(n_), v(n_), z(n_);
    while (true) {
      factorize();
      residuals(r, p);

      v.setZero();
      for (Eigen::Index i = 0; i < n_; ++i)
        if (!in_basis_[static_cast<std::size_t>(i)])
          v(i) = w_(i) * (sign(r(i), p(i)) > 0 ? tau_ : tau_ - 1.0);
      const Eigen::VectorXd g = x_.transpose() * v;
      const Eigen::VectorXd pi = -lu_t_.solve(g);
      const double tol_opt = 1e-12 + 1e-11 * std::max(1.0, g.cwiseAbs().maxCoeff());

      double best = -tol_opt;
      Eigen::Index entering = -1;
      double direction = 0.0;
      for (Eigen::Index k = 0; k < q_; ++k) {
        const double wk = w_(basis_[static_cast<std::size_t>(k)]);
        const double up = wk * tau_ - pi(k);
        const double down = wk * (1.0 - tau_) + pi(k);
        if (up < best) {
          best = up;
          entering = k;
          direction = 1.0;
        }
        if (down < best) {
          best = down;
          entering = k;
          direction = -1.0;
        }
      }
      min_reduced_cost_ = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < q_; ++k) {
        const double wk = w_(basis_[static_cast<std::size_t>(k)]);
        min_reduced_cost_ = std::min({ min_reduced_cost_, wk * tau_ - pi(k), wk * (1.0 - tau_) + pi(k) });
      }
      reduced_cost_tol_ = tol_opt;
      if (entering < 0)
        return iterations;
      if (iterations >= max_iterations)
        throw Error(ErrorCode::solver_failure, "qr_solver", "iteration limit reached");

      // Leaving basis row j moves residual j by `direction` per unit step and
      // every other residual by direction * z_i.
      Eigen::VectorXd e = Eigen::VectorXd::Zero(q_);
      e(entering) = 1.0;
      const Eigen::VectorXd column = lu_.solve(e);
      z.noalias() = x_ * column;
      const double zmax = z.cwiseAbs().maxCoeff();

      breaks_.clear();
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (in_basis_[static_cast<std::size_t>(i)])
          continue;
        const double rate = direction * z(i);
        if (std::abs(rate) <= 1e-13 * zmax)
          continue;
        const int s = sign(r(i), p(i));
        if (s * rate >= 0.0)
          continue;
        const double t = std::abs(r(i)) > tol_r_ ? -r(i) / rate : 0.0;
        breaks_.push_back({ t, -p(i) / rate, i, w_(i) * std::abs(z(i)) });
      }
      std::sort(breaks_.begin(), breaks_.end(), [](const Breakpoint& a, const Breakpoint& b) {
        return a.t < b.t || (a.t == b.t && a.tp < b.tp);
      });
      double slope = best;
      Eigen::Index leaving_row = -1;
      double step = 0.0;
      for (const auto& bp : breaks_) {
        slope += bp.increment;
        if (slope >= 0.0) {
          leaving_row = bp.row;
          step = bp.t;
          break;
        }
      }
      if (leaving_row < 0)
        throw Error(ErrorCode::solver_failure, "qr_solver", "objective unbounded along an edge");

      if (dump_) {
        *dump_ << "iter " << iterations << " objective " << current_objective(r) << " basis";
        for (auto b : basis_)
          *dump_ << ' ' << b;
        *dump_ << " exit_row " << basis_[static_cast<std::size_t>(entering)] << " sign " << direction
               << " reduced_cost " << best << " enter_row " << leaving_row << " step " << step << '\n';
      }
      basis_[static_cast<std::size_t>(entering)] = leaving_row;
      ++iterations;
    }
  }

  Eigen::VectorXd coefficients()
  {
    factorize();
    Eigen::VectorXd yb(q_);
    for (Eigen::Index k = 0; k < q_; ++k)
      yb(k) = y_(basis_[static_cast<std::size_t>(k)]);
    return lu_.solve(yb);
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }
  bool dual_degenerate() const { return min_reduced_cost_ <= reduced_cost_tol_; }

private:
  int sign(double r, double p) const
  {
    if (r > tol_r_)
      return 1;
    if (r < -tol_r_)
      return -1;
    return p > 0.0 ? 1 : -1;
  }

  void factorize()
  {
    Eigen::MatrixXd xb(q_, q_);
    std::fill(in_basis_.begin(), in_basis_.end(), false);
    for (Eigen::Index k = 0; k < q_; ++k) {
      xb.row(k) = x_.row(basis_[static_cast<std::size_t>(k)]);
      in_basis_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(k)])] = true;
    }
    lu_.compute(xb);
    lu_t_.compute(xb.transpose());
  }

  void residuals(Eigen::VectorXd& r, Eigen::VectorXd& p) const
  {
    Eigen::VectorXd yb(q_), pb(q_);
    for (Eigen::Index k = 0; k < q_; ++k) {
      yb(k) = y_(basis_[static_cast<std::size_t>(k)]);
      pb(k) = xi_(basis_[static_cast<std::size_t>(k)]);
    }
    r.noalias() = y_ - x_ * lu_.solve(yb);
    p.noalias() = xi_ - x_ * lu_.solve(pb);
    for (auto b : basis_) {
      r(b) = 0.0;
      p(b) = 0.0;
    }
  }

  double current_objective(const Eigen::VectorXd& r) const
  {
    double f = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i)
      f += w_(i) * check_loss(r(i), tau_);
    return f;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& w_;
  double tau_;
  std::ofstream* dump_;
  Eigen::Index n_;
  Eigen::Index q_;
  Eigen::VectorXd xi_;
  double tol_r_ = 0.0;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> in_basis_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_t_;
  std::vector<Breakpoint> breaks_;
  double min_reduced_cost_ = 0.0;
  double reduced_cost_tol_ = 0.0;
};

} // namespace

const char* to_string(SolveStatus status)
{
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::degenerate_optimal: return "degenerate-optimal";
    case SolveStatus::failed: return "failed";
  }
  return "unknown";
}

void validate(const QrProblem& problem)
{
  const auto n = problem.responses.size();
  const auto q = problem.regressors.cols();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_input, "qr_solver", msg); };
  if (problem.regressors.rows() != n || problem.weights.size() != n)
    fail("responses, regressors and weights must have matching row counts");
  if (q < 1 || n < q)
    fail("need n >= q >= 1");
  if (!(problem.tau > 0.0 && problem.tau < 1.0))
    fail("tau must lie strictly inside (0, 1)");
  if (!problem.responses.allFinite() || !problem.regressors.allFinite() || !problem.weights.allFinite())
    fail("non-finite input");
  if ((problem.weights.array() < 0.0).any())
    fail("weights must be nonnegative");
  if ((problem.weights.array() > 0.0).count() < q)
    fail("need at least q observations with positive weight");
}

double objective(const QrProblem& problem, const Eigen::VectorXd& coefficients)
{
  const Eigen::VectorXd r = problem.responses - problem.regressors * coefficients;
  double f = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    f += problem.weights(i) * check_loss(r(i), problem.tau);
  return f;
}

QrProblem reduce_weighted_to_scaled(const QrProblem& problem)
{
  QrProblem out;
  out.tau = problem.tau;
  out.responses = problem.weights.cwiseProduct(problem.responses);
  out.regressors = problem.weights.asDiagonal() * problem.regressors;
  out.weights = Eigen::VectorXd::Ones(problem.size());
  return out;
}

int weighted_rank(const Eigen::MatrixXd& regressors,
                  const Eigen::VectorXd& weights,
                  std::vector<Eigen::Index>* dependent,
                  double threshold)
{
  const double wmax = weights.size() ? weights.maxCoeff() : 0.0;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) > drop_ratio * wmax)
      rows.push_back(i);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), regressors.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    m.row(static_cast<Eigen::Index>(k)) = std::sqrt(weights(rows[k]) / wmax) * regressors.row(rows[k]);
  if (m.rows() == 0) {
    if (dependent) {
      dependent->resize(static_cast<std::size_t>(regressors.cols()));
      std::iota(dependent->begin(), dependent->end(), 0);
    }
    return 0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(threshold);
  const auto rank = qr.rank();
  if (dependent) {
    dependent->clear();
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = rank; k < m.cols(); ++k)
      dependent->push_back(perm(k));
    std::sort(dependent->begin(), dependent->end());
  }
  return static_cast<int>(rank);
}

QrSolution solve(const QrProblem& problem, const SolveOptions& options)
{
  validate(problem);
  const auto n = problem.size();
  const auto q = problem.dimension();
  const double wmax = problem.weights.maxCoeff();

  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (problem.weights(i) > drop_ratio * wmax)
      rows.push_back(i);
  if (static_cast<Eigen::Index>(rows.size()) < q)
    throw Error(ErrorCode::invalid_input, "qr_solver", "fewer than q observations with non-negligible weight");

  QrSolution solution;
  solution.coefficients = Eigen::VectorXd::Zero(q);

  std::vector<Eigen::Index> dependent;
  const int rank = weighted_rank(problem.regressors, problem.weights, &dependent);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < q; ++k)
    if (!std::binary_search(dependent.begin(), dependent.end(), k))
      cols.push_back(k);
  if (rank < q) {
    std::ostringstream msg;
    msg << "rank-deficient design (rank " << rank << " of " << q << "); unidentified columns:";
    for (auto k : dependent)
      msg << ' ' << k;
    solution.diagnostic = msg.str();
    if (options.rank_policy == RankPolicy::fail || rank == 0) {
      solution.status = SolveStatus::failed;
      solution.objective = objective(problem, solution.coefficients);
      return solution;
    }
  }

  const auto na = static_cast<Eigen::Index>(rows.size());
  const auto qa = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd x(na, qa);
  Eigen::VectorXd y(na), w(na);
  std::vector<Eigen::Index> local_of(static_cast<std::size_t>(n), -1);
  for (Eigen::Index k = 0; k < na; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    local_of[static_cast<std::size_t>(i)] = k;
    y(k) = problem.responses(i);
    w(k) = problem.weights(i) / wmax;
    for (Eigen::Index c = 0; c < qa; ++c)
      x(k, c) = problem.regressors(i, cols[static_cast<std::size_t>(c)]);
  }

  std::ofstream dump;
  if (!options.dump_path.empty()) {
    dump.open(options.dump_path, std::ios::app);
    if (!dump)
      throw Error(ErrorCode::io_error, "qr_solver", "cannot open LP dump file", options.dump_path);
    dump.precision(17);
    dump << "problem n " << na << " q " << qa << " tau " << problem.tau << '\n';
    for (Eigen::Index k = 0; k < na; ++k)
      dump << "row " << rows[static_cast<std::size_t>(k)] << " w " << w(k) << " y " << y(k) << " x "
           << x.row(k) << '\n';
  }

  Simplex simplex(x, y, w, problem.tau, dump.is_open() ? &dump : nullptr);
  bool warm = false;
  if (!options.warm_basis.empty()) {
    std::vector<Eigen::Index> local;
    for (auto i : options.warm_basis)
      if (i >= 0 && i < n && local_of[static_cast<std::size_t>(i)] >= 0)
        local.push_back(local_of[static_cast<std::size_t>(i)]);
    warm = simplex.set_basis(local);
  }
  if (!warm)
    simplex.cold_basis();

  const int max_iterations = options.max_iterations > 0 ? options.max_iterations : 1000 + 50 * static_cast<int>(na);
  solution.iterations = simplex.run(max_iterations);
  const Eigen::VectorXd theta = simplex.coefficients();
  for (Eigen::Index c = 0; c < qa; ++c)
    solution.coefficients(cols[static_cast<std::size_t>(c)]) = theta(c);
  for (auto b : simplex.basis())
    solution.basis.push_back(rows[static_cast<std::size_t>(b)]);

  const Eigen::VectorXd r = problem.responses - problem.regressors * solution.coefficients;
  const double tol = residual_tol * y.cwiseAbs().maxCoeff();
  solution.objective = 0.0;
  solution.active_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    solution.objective += problem.weights(i) * check_loss(r(i), problem.tau);
    if (std::abs(r(i)) <= tol)
      ++solution.active_count;
  }
  solution.status =
    (rank < q || simplex.dual_degenerate()) ? SolveStatus::degenerate_optimal : SolveStatus::optimal;
  if (dump.is_open())
    dump << "final objective " << solution.objective << " status " << to_string(solution.status) << '\n';
  return solution;
}

} // namespace depthreg::qr
