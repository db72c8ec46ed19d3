#pragma once

#include "deformk/field.hpp"
#include "deformk/kernels.hpp"
#include "deformk/potential.hpp"
#include "deformk/sections.hpp"
#include "deformk/solver.hpp"

#include <string>
#include <vector>

namespace deformk {

struct LogFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  int points = 0;
};

// least squares of log y on log x (all entries positive)
LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// ---- L^eps tail ----

struct LepsOptions {
  double rho = 0.5;        // superlevel sets measured in S_rho(z)
  double r = 1;            // inf over S_r(z) must be <= 1
  double tau = 3;          // M-u <= eps0 asserted on S_{2 tau}(z) (box part)
  double eps0 = 1e-6;
  int min_cells = 8;       // levels with fewer cells are left out of the fit
  int max_level = 8;       // t = 2^0 .. 2^max_level
};

struct LepsReport {
  bool trivial = false;
  double eps_hat = 0;
  double c_hat = 0;
  LogFit fit;
  std::vector<double> levels;
  std::vector<double> volumes;
  double mminus_max = 0;      // max M-u over checked nodes
  double lemma_m = 0;         // M_hat: smallest 2^j with |{u <= M} cap S_1(z)| > 0
  double lemma_eta = 0;       // that measure / |S_1(z)|
};

// mminus: discrete M-u per lattice node (NaN where undefined)
LepsReport l_eps_tail(const GridFunction& u, const std::vector<double>& mminus, const Vec& z, const Potential& phi,
                      const LepsOptions& opt = {});

// ---- Holder ----

struct HolderOptions {
  double rho = 0.5;          // radii rho/2, rho/4, ...
  double C0 = 0;
  int min_cells = 8;         // radii whose section spans fewer cells are dropped
  int max_pairs_nodes = 1500;
  double monotone_tolerance = 1e-9;
};

struct HolderReport {
  double alpha_hat = 0;      // section-intrinsic fit
  LogFit fit;
  double alpha_euclid = 0;
  LogFit fit_euclid;
  std::vector<double> radii;
  std::vector<double> osc;
  double seminorm_hat = 0;   // sup |u(x)-u(y)| / d(x,y)^alpha over S_{rho/2}(x0)
  double bound_c = 0;        // seminorm_hat / (sup|u| + C0)
  double sup_u = 0;
};

HolderReport holder_estimate(const GridFunction& u, const Vec& x0, const Potential& phi,
                             const HolderOptions& opt = {});
// same fit on finite-difference gradients (C^{1,gamma} modulus)
HolderReport gradient_holder(const GridFunction& u, const Vec& x0, const Potential& phi,
                             const HolderOptions& opt = {});

// ---- Harnack ----

struct HarnackOptions {
  double rho = 0.5;
  double C0 = 0;
  double source = 0;         // constant right-hand side, |source| <= C0
  double tau = 3;
  double cap = 50;           // harness cap on the ratio
  double drift = 0.25;
  EquationKind equation = EquationKind::extremal_plus;
  SolveOptions solve;
};

struct HarnackRow {
  std::string datum;
  double sigma = 0;
  double h = 0;
  double u0 = 0;
  double sup_inner = 0;
  double ratio = 0;
  double mminus_max = 0;     // over S_{2 tau} cap box
  double mplus_min = 0;
  bool converged = false;
};

struct HarnackReport {
  std::vector<HarnackRow> rows;
  double constant = 0;                     // max ratio
  double drift_max = 0;                    // max relative change h -> h/2
  std::vector<std::pair<double, double>> sigma_trend;  // (sigma, max ratio)
  bool bounded = false;
  bool stable = false;
  bool no_blowup = false;
  bool ok = false;
};

HarnackReport harnack_experiment(const Potential& phi, const KernelSpec& bounds,
                                 const std::vector<ExteriorRule>& data, const std::vector<double>& sigmas,
                                 const Box& box, const std::vector<double>& resolutions,
                                 const HarnackOptions& opt = {});

// ratio sup_{S_{rho/2}(0)} u / (u(0) + C0)
double harnack_ratio(const GridFunction& u, const Potential& phi, double rho, double C0, double* u0 = nullptr,
                     double* sup_inner = nullptr);

// ---- kernel shift condition ----

struct ShiftOptions {
  int panels = 64;           // radial panels (t-substitution), doubled for the refinement check
  int angular = 64;
  double stability = 0.05;
};

struct ShiftReport {
  double upsilon_hat = 0;
  double upsilon_refined = 0;
  double rel_change = 0;
  std::vector<double> per_shift;
  bool stable = false;
};

// max over shifts h of int_{outside S_varrho} |K(y) - K(y-h)| / |h| dy at base point x
ShiftReport kernel_shift_check(const KernelRule& rule, const Potential& phi, const Vec& x, const KernelSpec& spec,
                               double varrho, const std::vector<Vec>& shifts, const ShiftOptions& opt = {});

// ---- C^{1,gamma} ----

struct C1Options {
  double varrho = 0.5;
  std::vector<Vec> shifts;          // empty: a default set with |h| < varrho/2
  double threshold_factor = 4;      // refuse when upsilon > factor * smooth baseline
  double drift = 0.25;
  HolderOptions holder;
  SolveOptions solve;
};

struct C1Report {
  bool refused = false;
  std::string reason;
  ShiftReport shift;
  ShiftReport baseline;
  std::vector<double> h;
  std::vector<HolderReport> fits;
  double gamma_hat = 0;             // finest resolution
  double drift = 0;
  bool ok = false;
};

C1Report c1alpha_experiment(const Potential& phi, const KernelSpec& spec, const KernelRule& rule, const Box& box,
                            const std::vector<double>& resolutions, const SourceRule& f, const ExteriorRule& exterior,
                            const Vec& x0, const C1Options& opt = {});

}  // namespace deformk
