#pragma once

#include "deformk/scheme.hpp"

#include <memory>
#include <string>
#include <vector>

namespace deformk {

// right-hand sides share the rule shape of exterior data
using SourceRule = ExteriorRule;

enum class EquationKind { extremal_plus, extremal_minus, linear, isaacs };

struct Equation {
  EquationKind kind = EquationKind::extremal_plus;
  // isaacs: inf over outer index, sup over inner index; linear: families[0][0]
  std::vector<std::vector<KernelRule>> families;

  static Equation plus() { return {EquationKind::extremal_plus, {}}; }
  static Equation minus() { return {EquationKind::extremal_minus, {}}; }
  static Equation linear(KernelRule rule) { return {EquationKind::linear, {{std::move(rule)}}}; }
  static Equation isaacs(std::vector<std::vector<KernelRule>> fam) {
    return {EquationKind::isaacs, std::move(fam)};
  }
  std::string name() const;
};

// Equation bound to an operator: rule tables precomputed.
struct PreparedEquation {
  Equation eq;
  KernelSpec bounds;
  std::vector<std::vector<RuleTable>> tables;
};

PreparedEquation prepare(const DiscreteOperator& op, const Equation& eq, const KernelSpec& bounds);

// I(u) at every unknown (sets op values to u)
std::vector<double> apply_equation(DiscreteOperator& op, const PreparedEquation& pe, const std::vector<double>& u);

// uniform step 1 / max_i (Lambda * mass_i): keeps every update a positive-weight average
double cfl_dt(const DiscreteOperator& op, const KernelSpec& bounds);

// u + dt (I(u) - f)
std::vector<double> apply_iteration(DiscreteOperator& op, const PreparedEquation& pe, const std::vector<double>& f,
                                    const std::vector<double>& u, double dt);

struct SolveOptions {
  double tolerance = 1e-9;
  int max_iter = 200000;
  bool warm_start = true;      // policy iteration before the explicit sweeps
  int max_policy_iter = 60;
  int history_stride = 1;      // keep every k-th explicit residual
  SchemeOptions scheme;
};

struct SolveReport {
  int iterations = 0;          // explicit sweeps
  int policy_iterations = 0;
  double final_residual = 0;
  double cfl_dt = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

struct SolveResult {
  GridFunction u;
  SolveReport report;
  std::vector<double> unknowns;
};

std::vector<double> sample_source(const DiscreteOperator& op, const SourceRule& f);

SolveResult solve(std::shared_ptr<const Stencil> stencil, const KernelSpec& bounds, const Equation& eq,
                  const SourceRule& f, const ExteriorRule& exterior, const SolveOptions& opt = {});
SolveResult solve(const Lattice& lattice, const Potential& phi, const KernelSpec& bounds, const Equation& eq,
                  const SourceRule& f, const ExteriorRule& exterior, const SolveOptions& opt = {});

// discrete operator values on every lattice node (NaN on the box boundary)
std::vector<double> lattice_operator_values(std::shared_ptr<const Stencil> stencil, const GridFunction& u,
                                            const Equation& eq, const KernelSpec& bounds);

struct ComparisonReport {
  double max_gap = 0;          // max over grid of u - v
  Vec worst = Vec::Zero();
  double sub_defect = 0;       // max (f - Iu)^+
  double super_defect = 0;     // max (Iv - f)^+
  double lemma_gap = 0;        // min of M+(u-v) - (Iu - Iv)
  bool ok = false;
};

// u, v on the same lattice as the stencil. Throws precondition on bad inputs,
// comparison_failure when u > v + tolerance somewhere.
ComparisonReport comparison_check(std::shared_ptr<const Stencil> stencil, const GridFunction& u,
                                  const GridFunction& v, const SourceRule& f, const Equation& eq,
                                  const KernelSpec& bounds, double tolerance = 1e-9,
                                  double pre_tolerance = 1e-7);

}  // namespace deformk
