#pragma once

#include "deformk/field.hpp"
#include "deformk/potential.hpp"

#include <cstdint>

namespace deformk {

// Pure jump process with kernel (2-sigma) a / wbar_x(y)^{(n+sigma)/2}
// restricted to {wbar >= eta^2}.
struct JumpProcessConfig {
  Potential phi = Potential::isotropic(1);
  double a = 1;           // lambda = Lambda multiplier
  double sigma = 1;
  double eta = 1e-2;      // small-jump cutoff
  ExteriorRule payoff = ExteriorRule::constant(0);
  std::uint64_t seed = 1;
  long max_jumps = 1000000;
  double d2_scale = 1;    // sup |D^2 u| used by the bias bound
};

struct ExitEstimate {
  double mean = 0;
  double std_error = 0;
  double bias_bound = 0;
  long paths = 0;
  double mean_jumps = 0;
  double truncated_mass = 0;   // lower bound on the jump intensity
  double small_moment = 0;     // upper bound on int_{wbar<eta^2} |y|^2 K
};

ExitEstimate estimate_exit_payoff(const JumpProcessConfig& cfg, const Vec& x0, const Box& domain, long paths);

}  // namespace deformk
