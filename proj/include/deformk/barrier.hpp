#pragma once

#include "deformk/field.hpp"
#include "deformk/kernels.hpp"
#include "deformk/potential.hpp"
#include "deformk/sections.hpp"

#include <vector>

namespace deformk {

enum class BarrierKind { F_power, g_normalized, psi_bump };

struct BarrierParams {
  double m = 1;
  double s = 0.5;        // cap radius (F, g) or paste height (psi)
  double r = 0.25;       // section height normalized by g
  double tau = 3;        // psi: support S_{2 tau}
  int boundary_nodes = 4096;
};

struct Barrier {
  BarrierKind kind = BarrierKind::F_power;
  int dim = 1;
  double m = 1;
  double s = 0.5;
  double tau = 0;
  double c = 1;            // psi scale
  double delta0 = 0;
  AffineMap anchor;        // g: x -> T x normalizes S_r
  Potential phi = Potential::isotropic(1);

  double value(const Vec& x) const;
  double sup() const;
};

class BarrierField final : public Field {
 public:
  explicit BarrierField(Barrier b, double step = 1e-4) : b_(std::move(b)), step_(step) {}
  int dim() const override { return b_.dim; }
  double value(const Vec& x) const override { return b_.value(x); }
  double sup_bound() const override { return b_.sup(); }
  double hessian_step() const override { return step_; }

 private:
  Barrier b_;
  double step_;
};

// delta0(m) = (m+2) lambda int_{dS_1} y_1^2 dsigma - Lambda |dS_1|  (Euclidean surface measure)
double barrier_delta0(const Potential& phi, const KernelSpec& spec, double m, int boundary_nodes = 4096);
// root of delta0 in m (may be negative: then every m > 0 is admissible)
double minimal_barrier_m(const Potential& phi, const KernelSpec& spec, int boundary_nodes = 4096);

Barrier build_barrier(BarrierKind kind, const Potential& phi, const KernelSpec& spec,
                      const BarrierParams& params);

struct SubsolutionReport {
  double sigma = 0;
  double min_value = 0;       // min M-(barrier) at spec.sigma (psi: min + max rhs allowance)
  double min_scaled = 0;      // min_value / scale
  double scale = 0;
  Vec worst = Vec::Zero();
  double sigma0 = 0;          // smallest grid sigma passing
  std::vector<std::pair<double, double>> scan;  // (sigma, min scaled)
  bool ok = false;
};

// Sample points helpers.
std::vector<Vec> annulus_points(int dim, double r_in, double r_out, int count);
std::vector<Vec> shell_points(const Potential& phi, const Vec& center, double r_in, double r_out, int count);

SubsolutionReport verify_subsolution(const Barrier& barrier, const Potential& phi, const KernelSpec& spec,
                                     const std::vector<Vec>& points, double tolerance = 1e-8);

}  // namespace deformk
