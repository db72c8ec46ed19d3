#include "deformk/envelope.hpp"
#include "deformk/regularity.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deformk;

namespace {

Box box1(double lo, double hi) { return Box{Vec(lo, 0), Vec(hi, 0), 1}; }

}  // namespace

TEST(Regularity, LogLogFitRecoversPower) {
  std::vector<double> x, y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(std::pow(0.5, i));
    y.push_back(3 * std::pow(x.back(), 0.7));
  }
  const LogFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, 0.7, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3, 1e-12);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  EXPECT_EQ(f.points, 6);
}

TEST(Regularity, HolderExponentOfPowerFunction) {
  const Potential phi = Potential::isotropic(1);
  for (double a : {0.4, 0.75}) {
    const GridFunction u = GridFunction::sample(
        Lattice::over(box1(-1, 1), 1.0 / 512), [a](const Vec& x) { return std::pow(std::abs(x[0]), a); },
        ExteriorRule::constant(1));
    const HolderReport r = holder_estimate(u, Vec::Zero(), phi);
    EXPECT_NEAR(r.alpha_hat, a, 0.03) << a;
    EXPECT_GT(r.fit.r2, 0.99);
  }
}

TEST(Regularity, GradientHolderOfSmoothFunctionIsLipschitz) {
  const GridFunction u = GridFunction::sample(Lattice::over(box1(-1, 1), 1.0 / 256),
                                              [](const Vec& x) { return std::sin(x[0]) + x[0] * x[0]; },
                                              ExteriorRule::constant(0));
  const HolderReport r = gradient_holder(u, Vec(0.1, 0), Potential::isotropic(1));
  EXPECT_NEAR(r.alpha_hat, 1, 0.05);
}

TEST(Regularity, HarnackRatioOfKnownProfile) {
  // u = 2 - x^2: u(0) = 2, sup over S_{1/4}(0) = 2
  const GridFunction u = GridFunction::sample(Lattice::over(box1(-1, 1), 1.0 / 64),
                                              [](const Vec& x) { return 2 - x[0] * x[0]; }, ExteriorRule::constant(0));
  double u0 = 0, sup = 0;
  EXPECT_NEAR(harnack_ratio(u, Potential::isotropic(1), 0.5, 0, &u0, &sup), 1, 1e-12);
  EXPECT_NEAR(u0, 2, 1e-12);
  // with C0 the ratio is sup / (u0 + C0)
  EXPECT_NEAR(harnack_ratio(u, Potential::isotropic(1), 0.5, 2), 0.5, 1e-12);
}

TEST(Regularity, ShiftIntegralForConstantKernel) {
  // K = A |y|^{-1-s} outside |y| >= R = sqrt2 varrho:
  // int |K(y) - K(y-h)| / h = A ((R-h)^{-s} - (R+h)^{-s}) / (s h)
  const Potential phi = Potential::isotropic(1);
  const double s = 1.3, varrho = 0.5, h = 0.1, a = 1.5;
  const KernelSpec spec{1, 2, s, Selection::table};
  const double A = (2 - s) * a * std::pow(2.0, (1 + s) / 2), R = std::sqrt(2.0) * varrho;
  const double exact = A * (std::pow(R - h, -s) - std::pow(R + h, -s)) / (s * h);
  const ShiftReport r = kernel_shift_check(constant_rule(a), phi, Vec::Zero(), spec, varrho, {Vec(h, 0)});
  EXPECT_NEAR(r.upsilon_refined / exact, 1, 1e-6);
  EXPECT_TRUE(r.stable);
}

TEST(Regularity, ShiftRejectsLargeShift) {
  const KernelSpec spec{1, 2, 1.3, Selection::table};
  EXPECT_THROW(kernel_shift_check(constant_rule(1), Potential::isotropic(1), Vec::Zero(), spec, 0.5, {Vec(0.3, 0)}),
               Error);
}

TEST(Envelope, TauForQuadraticIsThree) {
  const TauReport t = compute_tau(Potential::isotropic(2), 64);
  EXPECT_NEAR(t.tau, 3, 1e-3);
}

TEST(Envelope, EnvelopeDominatesAndIsConcave) {
  const Potential phi = Potential::isotropic(1);
  const GridFunction u = GridFunction::sample(
      Lattice::over(box1(-1, 1), 1.0 / 64), [](const Vec& x) { return std::max(0.0, 0.5 - x[0] * x[0]) + 0.1 * std::sin(9 * x[0]) * (1 - x[0] * x[0]); },
      ExteriorRule::constant(0));
  const EnvelopeResult e = concave_envelope(u, phi, 3);
  const Lattice& lat = u.lattice();
  EXPECT_GT(e.contact_count(), 0u);
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (e.in_tau[k]) EXPECT_GE(e.gamma.values()[k], u.values()[k] - 1e-12);
  for (int i = 1; i + 1 < lat.nodes_x(); ++i)
    EXPECT_LE(e.gamma.at(i + 1) + e.gamma.at(i - 1) - 2 * e.gamma.at(i), 1e-12);
}
