#pragma once

#include "deformk/field.hpp"
#include "deformk/kernels.hpp"
#include "deformk/potential.hpp"
#include "deformk/sections.hpp"
#include "deformk/solver.hpp"

#include <vector>

namespace deformk {

struct TauReport {
  double tau = 0;
  double gamma_hat = 0;     // bracket base
  double sampled_sup = 0;   // sup sqrt(v_0(2x - w)) over sampled x, w in S_1(0)
  double cell = 0;          // final bisection cell width
  int samples = 0;
};

// Smallest tau (to one bisection cell) such that x in S_1, x + y outside S_tau
// forces x - y outside S_1, over sampled boundary points of S_1(0).
TauReport compute_tau(const Potential& phi, int samples, double gamma_hat = 0);

struct EnvelopeResult {
  GridFunction gamma;                 // exterior 0
  std::vector<char> in_tau;           // lattice node in S_tau(0)
  std::vector<char> contact;          // {|u - Gamma| <= tol} cap S_1(0)
  std::vector<Vec> supergradient;     // per lattice node (valid where in_tau)
  double tolerance = 0;
  double tau = 0;
  std::size_t contact_count() const;
};

struct EnvelopeOptions {
  double contact_tolerance = -1;      // < 0: 2 x interpolation error estimate
};

EnvelopeResult concave_envelope(const GridFunction& u, const Potential& phi, double tau,
                                const EnvelopeOptions& opt = {});

struct RingPoint {
  Vec x = Vec::Zero();
  double f = 0;
  int k_star = -1;           // smallest k with |W_k| <= C0 f/M |R_k|
  int k_max = -1;            // last admissible ring (r_k >= 4h)
  double min_ratio = 0;      // min_k |W_k| / |R_k|
  double c0_hat = 0;         // (M / f) min_ratio
};

struct RingReport {
  double M = 0;
  double C0 = 1;
  std::vector<RingPoint> points;
  double c0_hat = 0;
  bool all_pass = false;
};

RingReport ring_estimate_check(const GridFunction& u, const std::vector<double>& mplus, const SourceRule& f,
                               const Potential& phi, const KernelSpec& spec, const EnvelopeResult& env, double M,
                               double C0 = 1, double pre_tolerance = 1e-7);

struct AbpOptions {
  double tau = 0;            // <= 0: compute_tau
  double M = 1;
  double C0 = 1;
  double cover_eps = 0.1;
  double eps0 = 0.05;        // detachment shell threshold
  EnvelopeOptions envelope;
};

struct AbpReport {
  bool trivial = false;
  double sup_u = 0;
  double f_sup = 0;
  double tau = 0;
  std::size_t contacts = 0;
  double union_measure = 0;
  double c_hat = 0;                 // (sup u)^n / |union S_r|
  double gradient_ratio_max = 0;    // max |grad Gamma(S_{r/4})| / (f^n |S_{r/4}|)
  int cover_size = 0;
  int cover_overlap = 0;
  bool cover_ok = false;
  int detachment_applicable = 0;
  int detachment_holds = 0;
  RingReport rings;
  EnvelopeResult envelope;
};

AbpReport abp_experiment(const GridFunction& u, const std::vector<double>& mplus, const SourceRule& f,
                         const Potential& phi, const KernelSpec& spec, const AbpOptions& opt = {});

}  // namespace deformk
