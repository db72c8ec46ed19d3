#include "deformk/barrier.hpp"
#include "deformk/mc_oracle.hpp"
#include "deformk/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace deformk;

namespace {

Box unit1() { return Box{Vec(-1, 0), Vec(1, 0), 1}; }

// torsion function of (-Delta)^s on (-1,1), s = sigma/2, rescaled through
// L = A int delta / |y|^{1+sigma} = -(2A / c_{1,s}) (-Delta)^s
double torsion_center(double sigma, double a) {
  const double s = sigma / 2;
  const double A = (2 - sigma) * a * std::pow(2.0, (1 + sigma) / 2);
  const double c = s * std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(M_PI) * std::tgamma(1 - s));
  const double u0 = std::sqrt(M_PI) / (std::pow(2.0, sigma) * std::tgamma(1 + s) * std::tgamma(0.5 + s));
  return c / (2 * A) * u0;
}

}  // namespace

TEST(Solver, TorsionProblemMatchesClosedForm) {
  const Potential phi = Potential::isotropic(1);
  for (double sigma : {0.8, 1.5}) {
    const KernelSpec spec{1, 1, sigma, Selection::fixed_midpoint};
    const SolveResult r = solve(Lattice::over(unit1(), 1.0 / 128), phi, spec, Equation::linear(constant_rule(1)),
                                ExteriorRule::constant(-1), ExteriorRule::constant(0));
    ASSERT_TRUE(r.report.converged);
    EXPECT_NEAR(r.u.value(Vec::Zero()) / torsion_center(sigma, 1), 1, 0.02) << "sigma " << sigma;
  }
}

TEST(Solver, ConstantExteriorGivesConstantSolution) {
  const KernelSpec spec{1, 2, 1.3, Selection::extremal_plus};
  const SolveResult r = solve(Lattice::over(unit1(), 1.0 / 32), Potential::isotropic(1), spec, Equation::plus(),
                              ExteriorRule::constant(0), ExteriorRule::constant(0.7));
  for (double v : r.u.values()) EXPECT_NEAR(v, 0.7, 1e-9);
}

TEST(Solver, ExtremalSolutionsAreOrdered) {
  // M- <= M+ makes the M+ solution a supersolution of the M- problem
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.5, Selection::extremal_plus};
  const Lattice lat = Lattice::over(unit1(), 1.0 / 32);
  const auto up = solve(lat, phi, spec, Equation::plus(), ExteriorRule::constant(-1), ExteriorRule::constant(0));
  const auto um = solve(lat, phi, spec, Equation::minus(), ExteriorRule::constant(-1), ExteriorRule::constant(0));
  for (std::size_t k = 0; k < lat.size(); ++k) EXPECT_GE(up.u.values()[k], um.u.values()[k] - 1e-9);
  EXPECT_GT(up.u.value(Vec::Zero()), 0);
}

TEST(Solver, DiscontinuousSourceRejected) {
  const SourceRule f{"step", [](const Vec& x) { return x[0] > 0 ? 1.0 : 0.0; }, 1, false};
  EXPECT_THROW(solve(Lattice::over(unit1(), 1.0 / 16), Potential::isotropic(1), KernelSpec{1, 2, 1, Selection::extremal_plus},
                     Equation::plus(), f, ExteriorRule::constant(0)),
               Error);
}

TEST(Solver, ComparisonHoldsForOrderedData) {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.2, Selection::extremal_plus};
  const Lattice lat = Lattice::over(unit1(), 1.0 / 32);
  auto st = build_stencil(lat, phi, spec.sigma);
  const auto u = solve(st, spec, Equation::plus(), ExteriorRule::constant(0.1), ExteriorRule::constant(0));
  const auto v = solve(st, spec, Equation::plus(), ExteriorRule::constant(0), ExteriorRule::constant(0.2));
  const ComparisonReport rep = comparison_check(st, u.u, v.u, ExteriorRule::constant(0.1), Equation::plus(), spec);
  EXPECT_TRUE(rep.ok);
  EXPECT_LE(rep.max_gap, 1e-9);
}

TEST(MonteCarlo, ConstantPayoffIsExact) {
  JumpProcessConfig cfg;
  cfg.sigma = 1.2;
  cfg.payoff = ExteriorRule::constant(0.4);
  const ExitEstimate e = estimate_exit_payoff(cfg, Vec::Zero(), unit1(), 500);
  EXPECT_DOUBLE_EQ(e.mean, 0.4);
  EXPECT_EQ(e.std_error, 0);
  EXPECT_EQ(e.paths, 500);
}

TEST(MonteCarlo, SeededRunsRepeat) {
  JumpProcessConfig cfg;
  cfg.sigma = 1.5;
  cfg.seed = 42;
  cfg.payoff = {"step", [](const Vec& x) { return x[0] > 1 ? 1.0 : 0.0; }, 1, false};
  const ExitEstimate a = estimate_exit_payoff(cfg, Vec::Zero(), unit1(), 2000);
  const ExitEstimate b = estimate_exit_payoff(cfg, Vec::Zero(), unit1(), 2000);
  EXPECT_EQ(a.mean, b.mean);
  // symmetric start: exit to the right half the time
  EXPECT_NEAR(a.mean, 0.5, 4 * a.std_error + 1e-12);
}

TEST(Barrier, Delta0ClosedFormIn1D) {
  // dS_1 = {+-sqrt 2}: delta0 = 4 lambda (m+2) - 2 Lambda
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.5, Selection::extremal_minus};
  for (double m : {0.5, 1.0, 3.0}) EXPECT_NEAR(barrier_delta0(phi, spec, m), 4 * (m + 2) - 4, 1e-10);
  EXPECT_NEAR(minimal_barrier_m(phi, spec), -1, 1e-8);
}
