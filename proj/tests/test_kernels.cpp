#include "depthreg/error.hpp"
#include "depthreg/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace depthreg;
using namespace depthreg::kernels;

namespace {

// Composite Simpson on [a, b] with an even number of panels.
double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000)
{
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k)
    s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Integral over R^d (d = 1, 2) of g(K(w)) * weight(w), over |w| <= reach.
double integrate(const KernelSpec& k, double reach, const std::function<double(double, double)>& g)
{
  if (k.dimension == 1)
    return simpson([&](double x) { return g(x, k.value_at_squared_norm(x * x)); }, -reach, reach);
  // Polar coordinates; g receives the radius and the integrand is averaged
  // over the angle by the caller through its own factor.
  return simpson([&](double r) { return 2.0 * std::numbers::pi * r * g(r, k.value_at_squared_norm(r * r)); }, 0.0,
                 reach);
}

double reach(const KernelSpec& k)
{
  return std::isfinite(k.support_radius()) ? 1.0 : 14.0;
}

} // namespace

TEST_SUITE("kernels")
{
  TEST_CASE("every family integrates to one with the stated moments, d = 1 and 2")
  {
    for (auto family : { KernelFamily::gaussian, KernelFamily::epanechnikov, KernelFamily::uniform }) {
      for (int d : { 1, 2 }) {
        CAPTURE(to_string(family));
        CAPTURE(d);
        const auto k = make_kernel(family, d);
        const double r = reach(k);
        CHECK(integrate(k, r, [](double, double v) { return v; }) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(integrate(k, r, [](double, double v) { return v * v; }) == doctest::Approx(k.c0()).epsilon(1e-6));
        // Per-coordinate second moment: in the plane, the angular average of
        // w_1^2 is r^2 / 2.
        const double m2 = d == 1 ? integrate(k, r, [](double x, double v) { return x * x * v; })
                                 : integrate(k, r, [](double x, double v) { return 0.5 * x * x * v; });
        CHECK(m2 == doctest::Approx(k.mu2()).epsilon(1e-6));
        if (d == 1)
          CHECK(std::abs(integrate(k, r, [](double x, double v) { return x * v; })) < 1e-12);
        CHECK(k.mu2_matrix().llt().info() == Eigen::Success);
      }
    }
    CHECK(std::isinf(make_kernel(KernelFamily::gaussian, 1).support_radius()));
    CHECK(make_kernel(KernelFamily::uniform, 2).support_radius() == 1.0);
  }

  TEST_CASE("local weight examples")
  {
    Eigen::MatrixXd w(3, 1);
    w << -2.0, 0.0, 0.5;
    const auto uni = local_weights(w, Eigen::VectorXd::Zero(1), make_kernel(KernelFamily::uniform, 1), 1.0);
    CHECK(uni(0) == 0.0);
    CHECK(uni(1) == doctest::Approx(0.5));
    CHECK(uni(2) == doctest::Approx(0.5));

    Eigen::MatrixXd at(1, 1);
    at << 0.3;
    const auto g = local_weights(at, Eigen::VectorXd::Constant(1, 0.3), make_kernel(KernelFamily::gaussian, 1), 0.7);
    CHECK(g(0) == doctest::Approx(1.0 / (0.7 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-14));

    Eigen::MatrixXd one(1, 1);
    one << 1.0;
    const auto e = local_weights(one, Eigen::VectorXd::Zero(1), make_kernel(KernelFamily::epanechnikov, 1), 2.0);
    CHECK(e(0) == doctest::Approx(0.28125).epsilon(1e-14));
  }

  TEST_CASE("compact kernels vanish exactly outside the scaled support")
  {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Eigen::MatrixXd w(500, 2);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      w.row(i) << u(rng), u(rng);
    const Eigen::Vector2d w0(0.2, -0.4);
    const double h = 1.3;
    for (auto family : { KernelFamily::epanechnikov, KernelFamily::uniform }) {
      const auto weights = local_weights(w, w0, make_kernel(family, 2), h);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double dist = (w.row(i).transpose() - w0).norm();
        CHECK(weights(i) >= 0.0);
        if (dist > h)
          CHECK(weights(i) == 0.0);
        else if (dist < h * (1 - 1e-12))
          CHECK(weights(i) > 0.0);
      }
    }
  }

  TEST_CASE("bad bandwidth and empty neighbourhood")
  {
    Eigen::MatrixXd w(2, 1);
    w << 5.0, 6.0;
    const auto k = make_kernel(KernelFamily::epanechnikov, 1);
    for (double h : { 0.0, -1.0 }) {
      try {
        local_weights(w, Eigen::VectorXd::Zero(1), k, h);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_bandwidth);
      }
    }
    try {
      local_weights(w, Eigen::VectorXd::Zero(1), k, 1.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::empty_neighborhood);
    }
  }

  TEST_CASE("normalize to sum n")
  {
    const auto w = normalize_weights(Eigen::Vector3d(1.0, 3.0, 0.0));
    CHECK(w.sum() == doctest::Approx(3.0));
    CHECK(w(1) == doctest::Approx(2.25));
  }

  TEST_CASE("normal quantile against reference values and the erfc-based CDF")
  {
    CHECK(normal_quantile(0.8) == doctest::Approx(0.8416212335729143).epsilon(1e-14));
    CHECK(normal_quantile(0.6) == doctest::Approx(0.2533471031357997).epsilon(1e-13));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(0.5) == 0.0);
    for (double p : { 1e-12, 1e-6, 0.01, 0.02425, 0.1, 0.3, 0.7, 0.9, 0.99, 1 - 1e-6 }) {
      const double x = normal_quantile(p);
      CHECK(std::abs(normal_cdf(x) - p) <= 1e-9 * std::min(p, 1 - p) + 1e-16);
      // 1 - p is rounded; its complement 1 - (1 - p) is exact.
      const double upper = 1 - p;
      CHECK(normal_quantile(upper) == doctest::Approx(-normal_quantile(1 - upper)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);
  }

  TEST_CASE("rule of thumb")
  {
    // sd of {0, 1} with denominator n - 1 is sqrt(0.5).
    const double expected = 3.0 * std::sqrt(0.5) * std::pow(2.0, -0.2);
    CHECK(rule_of_thumb_bandwidth(Eigen::Vector2d(0.0, 1.0)) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(1.8467).epsilon(1e-4));

    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    Eigen::VectorXd w(100);
    for (auto& v : w)
      v = z(rng);
    CHECK(rule_of_thumb_bandwidth(2.5 * w) == doctest::Approx(2.5 * rule_of_thumb_bandwidth(w)).epsilon(1e-13));
    CHECK_THROWS_AS(rule_of_thumb_bandwidth(Eigen::Vector3d(1, 1, 1)), Error);
    CHECK_THROWS_AS(rule_of_thumb_bandwidth(Eigen::VectorXd::Ones(1)), Error);
  }

  TEST_CASE("tau-adjusted bandwidth identities")
  {
    CHECK(std::abs(tau_adjusted_bandwidth(1.0, 0.5) - std::pow(std::numbers::pi / 2, 0.2)) <= 1e-12);
    CHECK(std::abs(std::pow(tau_adjusted_bandwidth(0.8, 0.5), 5) - std::numbers::pi / 2 * std::pow(0.8, 5)) <= 1e-12);
    for (int k = 1; k < 100; ++k) {
      const double tau = k / 100.0;
      CHECK(tau_adjusted_bandwidth(0.37, tau) == tau_adjusted_bandwidth(0.37, 1.0 - tau));
    }
    CHECK(tau_adjusted_bandwidth(1.0, 0.123456) == tau_adjusted_bandwidth(1.0, 1.0 - 0.123456));

    // Ratio identity, both sides computed independently.
    const double t1 = 0.2, t2 = 0.4;
    const double lhs = tau_adjusted_bandwidth(1.0, t1) / tau_adjusted_bandwidth(1.0, t2);
    const double rhs = std::pow(t1 * (1 - t1) / (t2 * (1 - t2)), 0.2) *
                       std::pow(normal_pdf(normal_quantile(t2)) / normal_pdf(normal_quantile(t1)), 0.4);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
    CHECK_THROWS_AS(tau_adjusted_bandwidth(0.0, 0.3), Error);
    CHECK_THROWS_AS(tau_adjusted_bandwidth(1.0, 1.0), Error);
  }

  TEST_CASE("bandwidth plans")
  {
    const auto manual = manual_plan(0.37);
    CHECK(manual.at(0.1) == 0.37);
    const auto fz = fan_zhang_plan(0.5, true);
    CHECK(fz.at(0.5) == doctest::Approx(0.5 * std::pow(std::numbers::pi / 2, 0.2)).epsilon(1e-14));
    Eigen::MatrixXd w(2, 1);
    w << 0.0, 1.0;
    const auto thumb = thumb_plan(w);
    CHECK(thumb.rule == BandwidthRule::rule_of_thumb);
    CHECK(*thumb.sigma_w == doctest::Approx(std::sqrt(0.5)));
    CHECK(thumb.base_h == doctest::Approx(rule_of_thumb_bandwidth(w.col(0))));
    try {
      thumb_plan(Eigen::MatrixXd::Zero(5, 2));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unsupported_dimension);
    }
    CHECK_THROWS_AS(manual_plan(-1.0), Error);
  }
}
