// Acceptance run: one PASS/FAIL line per criterion.
#include "deformk/barrier.hpp"
#include "deformk/envelope.hpp"
#include "deformk/kernels.hpp"
#include "deformk/mc_oracle.hpp"
#include "deformk/regularity.hpp"
#include "deformk/scheme.hpp"
#include "deformk/sections.hpp"
#include "deformk/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace deformk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Box box1(double a, double b) {
  Box bx;
  bx.lo = Vec(a, 0);
  bx.hi = Vec(b, 0);
  bx.dim = 1;
  return bx;
}

Box box2(double a, double b) {
  Box bx;
  bx.lo = Vec(a, a);
  bx.hi = Vec(b, b);
  bx.dim = 2;
  return bx;
}

ExteriorRule step_right() {
  return {"step_right", [](const Vec& x) { return x[0] > 1 ? 1.0 : 0.0; }, 1.0, false};
}

ExteriorRule indicator(std::string name, double a, double b) {
  return {std::move(name), [a, b](const Vec& x) { return x[0] >= a && x[0] <= b ? 1.0 : 0.0; }, 1.0, false};
}

// ---- 1: brute-force operator oracle ----

// second difference of the fixture without cancellation, divided by y^2
double fixture(double x) { return 1 / (1 + x * x) + 0.3 * std::exp(-4 * (x - 0.2) * (x - 0.2)); }

double fixture_delta_over_y2(double x, double y) {
  const double a = 1 + x * x, y2 = y * y;
  const double d = (a + y2) * (a + y2) - 4 * x * x * y2;
  const double rational = 2 * (4 * x * x - a - y2) / (a * d);
  const double g = 0.3 * std::exp(-4 * (x - 0.2) * (x - 0.2));
  const double b = 8 * (x - 0.2);
  // log cosh(b y), stable at both ends
  const double z = std::abs(b * y);
  const double sh = std::sinh(0.5 * z);
  const double lc = z < 1 ? std::log1p(2 * sh * sh) : z + std::log1p(std::exp(-2 * z)) - std::log(2.0);
  const double e = -4 * y2 + lc;
  return rational + 2 * g * std::expm1(e) / y2;
}

// 2 int_0^inf delta(y) c y^{-1-sigma} dy on 10^6 midpoint nodes: y = s^m on (0,1], y = 1/t beyond
double brute_force(double x, double sigma) {
  const double c = (2 - sigma) * std::pow(2.0, 0.5 * (1 + sigma));
  const double m = 2 / (2 - sigma);
  const int half = 500000;
  long double s1 = 0, s2 = 0;
  for (int i = 0; i < half; ++i) {
    const double s = (i + 0.5) / half;
    const double y = std::pow(s, m);
    s1 += fixture_delta_over_y2(x, y) * c * m * std::pow(s, m * (2 - sigma) - 1);
  }
  for (int i = 0; i < half; ++i) {
    const double t = (i + 0.5) / half;
    const double y = 1 / t;
    s2 += fixture_delta_over_y2(x, y) * y * y * c * std::pow(t, sigma - 1);
  }
  return 2 * static_cast<double>((s1 + s2) / half);
}

Outcome c1_operator_oracle() {
  FunctionField u(1, [](const Vec& x) { return fixture(x[0]); }, 1.3, 1e-3);
  const Potential phi = Potential::isotropic(1);
  QuadraturePlan plan = QuadraturePlan::for_grid(box1(-1, 1), 1.0 / 256);
  double worst = 0;
  for (double sigma : {0.5, 1.5, 1.9}) {
    KernelSpec spec{1, 1, sigma, Selection::extremal_plus};
    for (int k = 0; k < 100; ++k) {
      const double x = -0.99 + 1.98 * k / 99.0;
      const double ref = brute_force(x, sigma);
      const Vec p(x, 0);
      const double mp = extremal(u, p, phi, spec, plan);
      spec.selection = Selection::extremal_minus;
      const double mm = extremal(u, p, phi, spec, plan);
      spec.selection = Selection::extremal_plus;
      const double lin = linear_apply(u, p, phi, constant_rule(1), spec, plan);
      for (double v : {mp, mm, lin}) {
        const double err = std::abs(v - ref) / std::abs(ref);
        worst = err <= worst ? worst : err;  // NaN propagates
      }
    }
  }
  return {worst <= 0.01, fmt("max relative error %.3e (tol 1e-2), 300 points", worst)};
}

// ---- 2: algebraic invariants ----

Outcome c2_invariants() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1, 1);
  const KernelSpec spec{1, 2, 1.5, Selection::extremal_plus};
  const std::vector<std::vector<KernelRule>> fam{{constant_rule(1), smooth_rule(1, 2)},
                                                  {constant_rule(2), checkerboard_rule(1, 2, 0.3)}};
  double sym = 0, aff = 0, hom = 0, order = 0, flip = 0;
  int points = 0;
  for (int dim : {1, 2}) {
    const Potential phi = dim == 1 ? Potential::isotropic(1) : Potential::perturbed(0.3, 2);
    QuadraturePlan plan = QuadraturePlan::for_grid(dim == 1 ? box1(-1, 1) : box2(-1, 1), 1.0 / 64);
    plan.ring_nodes = 16;
    plan.max_ring_nodes = dim == 1 ? 64 : 32;
    plan.inner_angular = 32;
    for (int k = 0; k < 500; ++k) {
      const Vec c1(U(rng), dim == 2 ? U(rng) : 0), c2(U(rng), dim == 2 ? U(rng) : 0);
      const double a1 = U(rng), a2 = U(rng);
      auto base = [=](const Vec& x) {
        return a1 * std::exp(-(x - c1).squaredNorm()) + a2 / (1 + 2 * (x - c2).squaredNorm());
      };
      const Vec slope(U(rng), dim == 2 ? U(rng) : 0);
      const double shift = U(rng), c = 0.5 + 3 * (U(rng) + 1);
      const double st = 2e-2;
      FunctionField u(dim, base, 2.0, st);
      FunctionField ua(dim, [=](const Vec& x) { return base(x) + slope.dot(x) + shift; }, 1e9, st);
      FunctionField uc(dim, [=](const Vec& x) { return c * base(x); }, 2 * c, st);
      FunctionField un(dim, [=](const Vec& x) { return -base(x); }, 2.0, st);
      const Vec x(U(rng) * 0.8, dim == 2 ? U(rng) * 0.8 : 0);
      const Vec y(U(rng), dim == 2 ? U(rng) : 0);
      sym = std::max(sym, std::abs(second_difference(u, x, y) - second_difference(u, x, -y)));

      const IncrementNodes nodes = build_nodes({&u, &ua, &uc, &un}, x, phi, spec.sigma, plan);
      double scale = 0;
      for (std::size_t i = 0; i < nodes.size(); ++i) scale += nodes.weight[i] * spec.Lambda * std::abs(nodes.delta[0][i]);
      scale = std::max(scale, 1e-300);
      for (bool plus : {true, false}) {
        const double m = extremal_on(nodes, 0, spec, plus);
        aff = std::max(aff, std::abs(extremal_on(nodes, 1, spec, plus) - m) / scale);
        hom = std::max(hom, std::abs(extremal_on(nodes, 2, spec, plus) - c * m) / (c * scale));
      }
      const double mp = extremal_on(nodes, 0, spec, true), mm = extremal_on(nodes, 0, spec, false);
      const double is = isaacs_on(nodes, 0, x, fam, spec);
      order = std::max({order, (mm - is) / scale, (is - mp) / scale});
      flip = std::max(flip, std::abs(extremal_on(nodes, 3, spec, true) + mm) / scale);
      ++points;
    }
  }
  const double tol = 1e-10;
  const bool ok = sym == 0 && aff <= tol && hom <= tol && order <= tol && flip <= tol;
  return {ok, fmt("%d points; symmetry %.1e, affine %.1e, homogeneity %.1e, order %.1e, flip %.1e (tol 1e-10)",
                  points, sym, aff, hom, order, flip)};
}

// ---- 3: barriers ----

Outcome c3_barrier() {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.9, Selection::extremal_minus};
  const double m = std::max(0.0, minimal_barrier_m(phi, spec)) + 1;
  BarrierParams bp;
  bp.m = m;
  bp.s = 0.5;
  const Barrier F = build_barrier(BarrierKind::F_power, phi, spec, bp);
  const SubsolutionReport rf = verify_subsolution(F, phi, spec, annulus_points(1, 1, 4, 200), 1e-8);

  const double tau = compute_tau(phi, 64).tau;
  BarrierParams pp;
  pp.m = m;
  pp.s = 0.25;
  pp.tau = tau;
  const Barrier psi = build_barrier(BarrierKind::psi_bump, phi, spec, pp);
  double in_min = 1e300;
  for (const Vec& p : shell_points(phi, Vec::Zero(), 1e-3, 0.999 * tau, 50)) in_min = std::min(in_min, psi.value(p));
  const SubsolutionReport rp = verify_subsolution(psi, phi, spec, shell_points(phi, Vec::Zero(), 0.25, 2.5 * tau, 200),
                                                  1e-8);
  const bool ok = rf.ok && rf.min_scaled >= -1e-8 && in_min > 2 && rp.min_value >= -1e-8 * rp.scale;
  return {ok, fmt("m=%.3g; min M-F/scale %.3e; min psi on S_tau %.4f; min M-psi %.3e (scale %.3e)", m,
                  rf.min_scaled, in_min, rp.min_value, rp.scale)};
}

// ---- 4: solver vs Monte Carlo ----

Outcome c4_mc() {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 1, 1.5, Selection::fixed_midpoint};
  const Box bx = box1(-1, 1);
  SolveResult res = solve(Lattice::over(bx, 1.0 / 256), phi, spec, Equation::linear(constant_rule(1)),
                          ExteriorRule::constant(0), step_right());
  JumpProcessConfig cfg;
  cfg.phi = phi;
  cfg.a = 1;
  cfg.sigma = 1.5;
  cfg.eta = 0.003;
  cfg.payoff = step_right();
  cfg.seed = 7;
  const ExitEstimate mc = estimate_exit_payoff(cfg, Vec::Zero(), bx, 100000);
  const double grid = res.u.value(Vec::Zero());
  const double gap = std::abs(grid - mc.mean);
  const double allowed = 3 * mc.std_error + mc.bias_bound;
  return {res.report.converged && gap <= allowed,
          fmt("grid u(0)=%.5f, MC %.5f +- %.5f, bias bound %.4f; gap %.5f <= %.5f", grid, mc.mean, mc.std_error,
              mc.bias_bound, gap, allowed)};
}

// ---- 5: comparison ----

Outcome c5_comparison() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  int passed = 0, total = 0;
  double worst = -1e300;
  const std::vector<std::vector<KernelRule>> fam{{constant_rule(1), smooth_rule(1, 2)}, {constant_rule(2)}};
  for (int k = 0; k < 20; ++k) {
    const bool two = k % 4 == 3;
    const Potential phi = two ? Potential::perturbed(0.2, 2) : (k % 2 ? Potential::isotropic(1)
                                                                     : Potential::anisotropic(Mat::Identity() * 2, 1));
    const Box bx = two ? box2(-1, 1) : box1(-1, 1);
    const double h = two ? 0.25 : 1.0 / 32;
    const KernelSpec spec{1, 2, 0.6 + 1.3 * U(rng), Selection::extremal_plus};
    Equation eq;
    switch (k % 5) {
      case 0: eq = Equation::plus(); break;
      case 1: eq = Equation::minus(); break;
      case 2: eq = Equation::linear(smooth_rule(1, 2)); break;
      default: eq = Equation::isaacs(fam);
    }
    const double a = U(rng), b = U(rng), df = 0.2 * U(rng), dg = k % 3 == 0 ? 0.0 : 0.3 * U(rng);
    const std::string tag = std::to_string(k);
    const ExteriorRule gv{"gv" + tag, [a, b](const Vec& x) { return a * std::sin(3 * x[0]) + b * std::tanh(x[1] * x[1]) + 1; },
                          a + b + 1, true};
    const ExteriorRule gu{"gu" + tag,
                          [a, b, dg](const Vec& x) { return a * std::sin(3 * x[0]) + b * std::tanh(x[1] * x[1]) + 1 - dg; },
                          a + b + 1, true};
    const SourceRule fv{"fv", [b](const Vec& x) { return b * std::cos(x[0]); }, b, true};
    const SourceRule fu{"fu", [b, df](const Vec& x) { return b * std::cos(x[0]) + df; }, b + df, true};
    const Lattice lat = Lattice::over(bx, h);
    auto st = build_stencil(lat, phi, spec.sigma);
    SolveResult v = solve(st, spec, eq, fv, gv);
    SolveResult u = solve(st, spec, eq, fu, gu);
    ++total;
    try {
      const ComparisonReport r = comparison_check(st, u.u, v.u, fv, eq, spec, 1e-9);
      worst = std::max(worst, r.max_gap);
      if (r.ok && v.report.converged && u.report.converged) ++passed;
      else
        std::fprintf(stderr, "pair %d: ok=%d gap %.3e, residuals %.2e / %.2e\n", k, r.ok ? 1 : 0, r.max_gap,
                     u.report.final_residual, v.report.final_residual);
    } catch (const Error& e) {
      std::fprintf(stderr, "pair %d: %s\n", k, e.what());
    }
  }
  return {passed == total, fmt("%d/%d pairs; max(u - v) = %.3e (tol 1e-9)", passed, total, worst)};
}

// ---- 6: section geometry ----

Outcome c6_sections() {
  Mat a;
  a << 5, 2, 2, 1.5;
  const std::vector<Potential> cat{Potential::isotropic(2), Potential::anisotropic(a, 2), Potential::perturbed(0.5, 2)};
  double gmax = 0, dlo = 1e300, dhi = 0, cmin = 1e300, omax = 0;
  for (const Potential& phi : cat)
    for (double x0 : {-0.5, 0.0, 0.5})
      for (double x1 : {-0.5, 0.5})
        for (double r : {0.25, 0.5, 1.0}) {
          const Vec x(x0, x1);
          gmax = std::max(gmax, engulfing_probe(phi, x, r, 48));
          const double big = section_volume(phi, {x, r}, 200), small = section_volume(phi, {x, r / 2}, 200);
          dlo = std::min(dlo, big / small);
          dhi = std::max(dhi, big / small);
          const EllipsoidFit e = fit_ellipsoid(phi, x, r, 64);
          cmin = std::min(cmin, e.inner);
          omax = std::max(omax, e.outer);
        }
  const bool ok = gmax <= 8 && dlo >= 1 && dhi <= 4 * 1.05 && cmin >= 0.2 && omax <= 1 + 1e-3;
  return {ok, fmt("gamma_hat max %.3f; doubling in [%.4f, %.4f]; inner radius min %.3f; outer max %.5f", gmax, dlo,
                  dhi, cmin, omax)};
}

// ---- 7: coverings ----

Outcome c7_covers() {
  double mhat = 0;
  bool covers = true;
  std::vector<std::pair<int, double>> runs;  // overlap, log(1/eps)
  for (int f = 0; f < 3; ++f) {
    const Potential phi = f == 0 ? Potential::isotropic(2) : f == 1 ? Potential::perturbed(0.4, 2)
                                                                    : Potential::isotropic(1);
    std::mt19937_64 rng(100 + f);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<Vec> pts;
    for (int k = 0; k < 150; ++k) pts.emplace_back(U(rng), phi.dim() == 2 ? U(rng) : 0.0);
    const double eps = 0.1;
    const Box bx = phi.dim() == 2 ? box2(-1.6, 1.6) : box1(-1.6, 1.6);
    const CoverReport r = besicovitch_cover(
        phi, pts, [](const Vec& x) { return 0.15 + 0.1 * std::abs(x[0]); }, eps, MeasureGrid::with_spacing(bx, 0.01));
    covers = covers && r.covers;
    mhat = std::max(mhat, r.overlap_constant);
    runs.emplace_back(r.overlap_max, std::log(1 / eps));
  }
  bool bounded = true;
  for (auto [ov, l] : runs) bounded = bounded && ov <= std::ceil(mhat * l);

  // CZ on a disk-with-notch mask
  const Potential phi = Potential::isotropic(2);
  LatticeMask mask;
  mask.grid = MeasureGrid::over(box2(-1, 1), 40);
  for (std::size_t c = 0; c < mask.grid.size(); ++c) {
    const Vec p = mask.grid.center(c);
    mask.inside.push_back(p.norm() < 0.6 && !(p[0] > 0.2 && std::abs(p[1]) < 0.15));
  }
  const double theta = 0.5;
  const CoverReport cz = cz_decompose(phi, mask, theta);
  double worst_cells = 0;
  const double cell = mask.grid.cell_measure();
  for (const Section& s : cz.selected) {
    const MeasureGrid g = MeasureGrid::with_spacing(section_bounds(phi, s), 0.0125);
    double in_a = 0, tot = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec p = g.center(k);
      if (!contains(phi, s, p)) continue;
      tot += g.cell_measure();
      if (mask.at(p)) in_a += g.cell_measure();
    }
    worst_cells = std::max(worst_cells, std::abs(in_a - theta * tot) / cell);
  }
  const bool ok = covers && mhat <= 8 && bounded && cz.covers && worst_cells <= 2 && cz.measure_ratio < 1;
  return {ok, fmt("besicovitch covers=%d M_hat=%.3f; CZ %zu sections, density off by <= %.2f cells, |A|/|union|=%.3f",
                  covers ? 1 : 0, mhat, cz.selected.size(), worst_cells, cz.measure_ratio)};
}

// ---- 8: ABP ----

AbpReport abp_at(double h) {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.5, Selection::extremal_plus};
  const Lattice lat = Lattice::over(box1(-1, 1), h);
  auto st = build_stencil(lat, phi, spec.sigma);
  const SourceRule f = ExteriorRule::constant(1);
  SolveResult res = solve(st, spec, Equation::plus(), ExteriorRule::constant(-1), ExteriorRule::constant(0));
  const auto mplus = lattice_operator_values(st, res.u, Equation::plus(), spec);
  AbpOptions opt;
  opt.tau = 3;
  return abp_experiment(res.u, mplus, f, phi, spec, opt);
}

Outcome c8_abp() {
  const AbpReport a = abp_at(1.0 / 32), b = abp_at(1.0 / 64);
  const double ratio = std::max(a.c_hat / b.c_hat, b.c_hat / a.c_hat);
  return {std::isfinite(ratio) && ratio <= 2 && a.cover_ok && b.cover_ok,
          fmt("C_hat %.4f (h=1/32), %.4f (h=1/64), ratio %.3f (tol 2); contacts %zu/%zu", a.c_hat, b.c_hat, ratio,
              a.contacts, b.contacts)};
}

// ---- 9: Harnack ----

std::vector<ExteriorRule> harnack_data() {
  return {indicator("ind_right", 2, 2.5),
          {"ind_both", [](const Vec& x) { return std::abs(x[0]) >= 2 && std::abs(x[0]) <= 2.5 ? 1.0 : 0.0; }, 1.0, false},
          {"tent", [](const Vec& x) { return std::max(0.0, 1 - 2 * std::abs(x[0] - 2.5)); }, 1.0, true},
          indicator("far", 3, 4),
          step_right()};
}

Outcome c9_harnack() {
  HarnackOptions opt;
  const HarnackReport r = harnack_experiment(Potential::isotropic(1), {1, 2, 1.5, Selection::extremal_plus},
                                             harnack_data(), {1.5, 1.7, 1.9}, box1(-1, 1), {1.0 / 64, 1.0 / 128}, opt);
  std::string trend;
  for (auto [s, v] : r.sigma_trend) trend += fmt(" %.1f:%.3f", s, v);
  return {r.ok, fmt("constant %.3f (cap 50), drift %.3f (tol 0.25), trend%s", r.constant, r.drift_max, trend.c_str())};
}

// ---- 10: Holder ----

Outcome c10_holder() {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.5, Selection::extremal_plus};
  std::vector<HolderReport> fits;
  for (double h : {1.0 / 128, 1.0 / 256}) {
    SolveResult res = solve(Lattice::over(box1(-1, 1), h), phi, spec, Equation::plus(), ExteriorRule::constant(0),
                            step_right());
    fits.push_back(holder_estimate(res.u, Vec::Zero(), phi));
  }
  const HolderReport& a = fits[0];
  const HolderReport& b = fits[1];
  const double drift = std::abs(b.alpha_hat - a.alpha_hat) / b.alpha_hat;
  const bool bound = b.seminorm_hat <= b.bound_c * (b.sup_u + 0) * (1 + 1e-12);
  const bool ok = a.alpha_hat > 0 && b.alpha_hat > 0 && a.fit.r2 >= 0.9 && b.fit.r2 >= 0.9 && drift <= 0.2 && bound;
  return {ok, fmt("alpha_hat %.4f / %.4f, R2 %.4f / %.4f, drift %.4f (tol 0.2), C %.4f", a.alpha_hat, b.alpha_hat,
                  a.fit.r2, b.fit.r2, drift, b.bound_c)};
}

// ---- 11: L^eps ----

Outcome c11_leps() {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 0.25, Selection::extremal_minus};
  const double w = 1.0 / 256;
  const SourceRule src{"spike", [w](const Vec& x) { return -std::max(0.0, 1 - x[0] * x[0] / (w * w)); }, 1.0, true};
  const Lattice lat = Lattice::over(box1(-2, 2), 1.0 / 512);
  auto st = build_stencil(lat, phi, spec.sigma);
  SolveResult res = solve(st, spec, Equation::minus(), src, ExteriorRule::constant(0));
  // normalize: inf over S_1(0) equal to 1
  double inf = 1e300;
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (phi.height(Vec::Zero(), lat.node(k)) < 1) inf = std::min(inf, res.u.values()[k]);
  const GridFunction u = res.u.transformed(1 / inf, Vec::Zero(), 0);
  auto mm = lattice_operator_values(st, u, Equation::minus(), spec);
  const LepsReport r = l_eps_tail(u, mm, Vec::Zero(), phi);
  const bool ok = res.report.converged && !r.trivial && r.eps_hat > 0 && r.fit.r2 >= 0.9 && std::isfinite(r.lemma_m) &&
                  r.lemma_m > 0 && r.lemma_eta > 0;
  return {ok, fmt("eps_hat %.4f, R2 %.4f over %d levels; M_hat %.0f, eta %.4f", r.eps_hat, r.fit.r2, r.fit.points,
                  r.lemma_m, r.lemma_eta)};
}

// ---- 12: C^{1,gamma} ----

Outcome c12_c1alpha() {
  const Potential phi = Potential::isotropic(1);
  const KernelSpec spec{1, 2, 1.5, Selection::table};
  const SourceRule f{"smooth", [](const Vec& x) { return std::cos(x[0]) + 0.5 * x[0]; }, 1.5, true};
  const ExteriorRule g = ExteriorRule::constant(0);
  const C1Report good = c1alpha_experiment(phi, spec, smooth_rule(1, 2), box1(-1, 1), {1.0 / 128, 1.0 / 256}, f, g,
                                           Vec::Zero());
  const C1Report rough = c1alpha_experiment(phi, spec, checkerboard_rule(1, 2, 0.02), box1(-1, 1),
                                            {1.0 / 128, 1.0 / 256}, f, g, Vec::Zero());
  const bool ok = !good.refused && good.ok && good.gamma_hat > 0 && good.drift <= 0.25 && rough.refused;
  return {ok, fmt("smooth: upsilon %.3f (baseline %.3f), gamma_hat %.4f, drift %.4f; rough: %s", good.shift.upsilon_refined,
                  good.baseline.upsilon_refined, good.gamma_hat, good.drift,
                  rough.refused ? rough.reason.c_str() : "not refused")};
}

// ---- 13: determinism ----

Outcome c13_determinism() {
  const char* cli = std::getenv("DEFORMK_CLI");
  const char* cfgdir = std::getenv("DEFORMK_ACCEPT_CONFIGS");
  if (!cli || !cfgdir) return {false, "DEFORMK_CLI / DEFORMK_ACCEPT_CONFIGS not set"};
  const std::string tmp = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/deformk_det";
  std::string cmd = std::string("sh ") + cfgdir + "/determinism.sh " + cli + " " + cfgdir + " " + tmp;
  const int rc = std::system(cmd.c_str());
  return {rc == 0, rc == 0 ? "all 9 subcommands byte-identical on rerun" : fmt("rerun check exited %d", rc)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Item {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Item> items{
      {1, "operator oracle equivalence", c1_operator_oracle},
      {2, "algebraic invariants", c2_invariants},
      {3, "barrier verification", c3_barrier},
      {4, "solver / Monte Carlo cross-validation", c4_mc},
      {5, "discrete comparison", c5_comparison},
      {6, "section geometry", c6_sections},
      {7, "covering algorithms", c7_covers},
      {8, "ABP constant stability", c8_abp},
      {9, "Harnack ratio", c9_harnack},
      {10, "Holder exponent", c10_holder},
      {11, "L^eps tail", c11_leps},
      {12, "C^{1,gamma} with shift check", c12_c1alpha},
      {13, "determinism", c13_determinism},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (const Item& it : items) {
    if (only && it.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it.run();
    } catch (const Error& e) {
      o = {false, std::string(to_string(e.kind())) + ": " + e.what()};
    } catch (const std::exception& e) {
      o = {false, e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%2d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", it.id, it.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
