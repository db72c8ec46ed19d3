#include "deformk/potential.hpp"
#include "deformk/quadrature.hpp"
#include "deformk/sections.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deformk;

TEST(Potential, GradientAndHessianMatchDifferences) {
  for (const Potential& phi : {Potential::perturbed(0.4, 2), Potential::anisotropic((Mat() << 3, 1, 1, 2).finished(), 2)}) {
    const Vec x(0.3, -0.7);
    const double e = 1e-5;
    for (int a = 0; a < 2; ++a) {
      const Vec d = Vec::Unit(a) * e;
      EXPECT_NEAR(phi.gradient(x)[a], (phi.value(x + d) - phi.value(x - d)) / (2 * e), 1e-8);
      const Vec g = (phi.gradient(x + d) - phi.gradient(x - d)) / (2 * e);
      EXPECT_NEAR(phi.hessian(x)(0, a), g[0], 1e-7);
      EXPECT_NEAR(phi.hessian(x)(1, a), g[1], 1e-7);
    }
  }
}

TEST(Potential, HeightIsBregmanDistance) {
  const Potential phi = Potential::isotropic(2);
  const Vec x(0.2, 0.1), y(-0.4, 0.9);
  EXPECT_NEAR(phi.height(x, y), 0.5 * (y - x).squaredNorm(), 1e-15);
  EXPECT_NEAR(phi.symmetric_height(x, y - x), 0.5 * (y - x).squaredNorm(), 1e-15);
  const Potential p = Potential::perturbed(0.5, 2);
  EXPECT_GE(p.height(x, y), 0);
  EXPECT_EQ(p.height(x, x), 0);
}

TEST(Potential, CatalogRejectsBadParameters) {
  EXPECT_THROW(Potential::from_id("perturbed", {0.9}, 2), Error);
  EXPECT_THROW(Potential::from_id("anisotropic", {1, 2, 1}, 2), Error);  // not SPD
  EXPECT_THROW(Potential::from_id("cubic", {}, 1), Error);
  EXPECT_NO_THROW(Potential::from_id("anisotropic", {5, 2, 1.5}, 2));
}

TEST(Potential, MongeAmpereBoundsForQuadratic) {
  const MABounds b = verify_ma_bounds(Potential::anisotropic((Mat() << 5, 2, 2, 1.5).finished(), 2),
                                      Box{Vec(-1, -1), Vec(1, 1), 2}, 50);
  EXPECT_NEAR(b.g_lo, 3.5, 1e-12);
  EXPECT_NEAR(b.g_hi, 3.5, 1e-12);
}

TEST(Quadrature, GaussLegendreExactToDegree2nMinus1) {
  for (int n : {2, 5, 12}) {
    const GaussRule& g = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Sections, IsotropicSectionsAreBalls) {
  const Potential phi = Potential::isotropic(2);
  const Vec x(0.3, -0.2);
  const double r = 0.4;
  EXPECT_NEAR(boundary_radius(phi, x, r, Vec(0.6, 0.8)), std::sqrt(2.0) * r, 1e-10);
  EXPECT_NEAR(quasi_distance(phi, x, x + Vec(0.3, 0.4)), 0.5 / std::sqrt(2.0), 1e-14);
  EXPECT_TRUE(contains(phi, {x, r}, x + Vec(0.5, 0)));
  EXPECT_FALSE(contains(phi, {x, r}, x + Vec(0.6, 0)));
  EXPECT_NEAR(section_volume(phi, {x, r}, 400), 2 * M_PI * r * r, 2e-3);
  const EllipsoidFit e = fit_ellipsoid(phi, x, r, 64);
  EXPECT_NEAR(e.inner, 1, 1e-3);
  EXPECT_LE(e.outer, 1 + 1e-3);
  EXPECT_NEAR(e.volume, 2 * M_PI * r * r, 1e-3);
}

TEST(Sections, AnisotropicVolumeMatchesEllipse) {
  const Mat a = (Mat() << 5, 2, 2, 1.5).finished();
  const Potential phi = Potential::anisotropic(a, 2);
  // {y : y^T A y / 2 < r^2} has area 2 pi r^2 / sqrt(det A)
  const double r = 0.5, exact = 2 * M_PI * r * r / std::sqrt(a.determinant());
  EXPECT_NEAR(section_volume(phi, {Vec::Zero(), r}, 400) / exact, 1, 5e-3);
  EXPECT_NEAR(fit_ellipsoid(phi, Vec(0.1, 0.2), r, 64).volume / exact, 1, 1e-3);
}

TEST(Sections, EngulfingConstantForQuadraticIsBounded) {
  // y in S_r(x) implies S_r(x) in S_{2r}(y) for quadratics: gamma = 2 up to sampling
  const double g = engulfing_probe(Potential::isotropic(2), Vec::Zero(), 0.5, 32);
  EXPECT_GE(g, 1.0);
  EXPECT_LE(g, 2.0 + 1e-6);
}
