#include "deformk/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deformk;

namespace {

// L cos(kx) for K = (2-s) a / (y^2/2)^{(1+s)/2} on R:
// int (1 - cos y) / |y|^{1+s} dy = pi / (Gamma(1+s) sin(pi s / 2))
double cosine_exact(double x, double k, double a, double s) {
  const double c = (2 - s) * a * std::pow(2.0, (1 + s) / 2);
  return -2 * c * std::cos(k * x) * std::pow(k, s) * M_PI / (std::tgamma(1 + s) * std::sin(M_PI * s / 2));
}

}  // namespace

TEST(Kernels, LinearOperatorOnCosineMatchesClosedForm) {
  const Potential phi = Potential::isotropic(1);
  const double k = 2;
  FunctionField u(1, [k](const Vec& x) { return std::cos(k * x[0]); }, 1, 1e-3);
  QuadraturePlan plan = QuadraturePlan::for_grid(Box{Vec(-1, 0), Vec(1, 0), 1}, 1.0 / 256);
  plan.max_ring_nodes = 1 << 14;  // oscillating data needs more than the default ring cap
  for (double s : {0.5, 1.0, 1.6}) {
    const KernelSpec spec{1.5, 1.5, s, Selection::fixed_midpoint};
    for (double x : {0.0, 0.3, -0.55}) {
      const double exact = cosine_exact(x, k, 1.5, s);
      const double got = linear_apply(u, Vec(x, 0), phi, constant_rule(1.5), spec, plan);
      EXPECT_NEAR(got, exact, 1e-3 * std::abs(cosine_exact(0, k, 1.5, s))) << "sigma " << s << " x " << x;
    }
  }
}

TEST(Kernels, ExtremalsPickTheRightBoundWhenDeltaHasOneSign) {
  // at x = 0, delta(cos) = 2 (cos y - 1) <= 0: M+ uses lambda, M- uses Lambda
  const Potential phi = Potential::isotropic(1);
  FunctionField u(1, [](const Vec& x) { return std::cos(x[0]); }, 1, 1e-3);
  const QuadraturePlan plan = QuadraturePlan::for_grid(Box{Vec(-1, 0), Vec(1, 0), 1}, 1.0 / 128);
  KernelSpec spec{1, 2, 1.2, Selection::extremal_plus};
  const double lin = linear_apply(u, Vec::Zero(), phi, constant_rule(1), spec, plan);
  const double mp = extremal(u, Vec::Zero(), phi, spec, plan);
  spec.selection = Selection::extremal_minus;
  const double mm = extremal(u, Vec::Zero(), phi, spec, plan);
  EXPECT_NEAR(mp, lin, 1e-12 * std::abs(lin));
  EXPECT_NEAR(mm, 2 * lin, 1e-12 * std::abs(lin));
}

TEST(Kernels, SecondDifferenceOfQuadratic) {
  FunctionField u(2, [](const Vec& x) { return x.squaredNorm(); }, 1);
  EXPECT_NEAR(second_difference(u, Vec(0.4, 0.1), Vec(0.2, -0.3)), 2 * 0.13, 1e-15);
}

TEST(Kernels, RuleMultipliersStayInBounds) {
  const KernelRule cb = checkerboard_rule(1, 2, 0.05), sm = smooth_rule(1, 2);
  for (int i = 0; i < 200; ++i) {
    const Vec y(std::cos(0.37 * i) * (0.01 + i * 0.01), std::sin(1.3 * i));
    for (const KernelRule* r : {&cb, &sm}) {
      const double a = r->multiplier(Vec(0.1, 0.2), y);
      EXPECT_GE(a, 1);
      EXPECT_LE(a, 2);
    }
  }
}

TEST(Kernels, SpecValidation) {
  EXPECT_THROW((KernelSpec{1, 2, 2.5}.validate()), Error);
  EXPECT_THROW((KernelSpec{2, 1, 1}.validate()), Error);
  EXPECT_NO_THROW((KernelSpec{1, 2, 1.9}.validate()));
}

TEST(Kernels, RingRadiiDecreaseByHalves) {
  const auto r = QuadraturePlan::ring_radii(1.5, 1e-3, 1);
  ASSERT_GE(r.size(), 3u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i - 1] / r[i], 2, 1e-12);
  EXPECT_LT(r.front(), 1);
  EXPECT_GT(r.back(), 1e-3);
}
