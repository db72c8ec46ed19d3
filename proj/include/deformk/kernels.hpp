#pragma once

#include "deformk/core.hpp"
#include "deformk/field.hpp"
#include "deformk/potential.hpp"

#include <functional>
#include <string>
#include <vector>

namespace deformk {

enum class Selection { extremal_plus, extremal_minus, fixed_midpoint, table };

struct KernelSpec {
  double lambda = 1;
  double Lambda = 1;
  double sigma = 1;
  Selection selection = Selection::extremal_plus;

  void validate() const;
  double midpoint() const { return 0.5 * (lambda + Lambda); }
};

// K_x(y) = (2 - sigma) a(x, y) / wbar_x(y)^{(n+sigma)/2}, a in [lambda, Lambda]
struct KernelRule {
  std::string name;
  std::function<double(const Vec& x, const Vec& y)> multiplier;
};

KernelRule constant_rule(double a);
// a = lambda or Lambda on alternating cells of size `cell` in increment space
KernelRule checkerboard_rule(double lambda, double Lambda, double cell);
// smooth angular modulation between lambda and Lambda
KernelRule smooth_rule(double lambda, double Lambda);

struct QuadraturePlan {
  double inner_radius = 0.0;   // rho0: inner region {wbar < rho0^2}
  double tail_radius = 0.0;    // Euclidean |y| beyond which the tail substitution takes over
  int ring_nodes = 64;
  int max_ring_nodes = 1024;
  double ring_tolerance = 1e-4;
  int inner_angular = 256;

  static QuadraturePlan for_grid(const Box& box, double h);
  // r_k = 2^{-1/(2-sigma)-k} for k in Z, restricted to (lo, hi), decreasing
  static std::vector<double> ring_radii(double sigma, double lo, double hi);
};

// Node set for the increment integral at one point, shared by every operator
// evaluated from it (so orderings between operators hold node by node).
struct IncrementNodes {
  std::vector<Vec> y;                        // representative increment
  std::vector<double> weight;                // kernel-bound weight, (2-sigma) folded in
  std::vector<std::vector<double>> delta;    // per field: second difference
  double tail_bound = 0;                     // 4 sup|u| * tail kernel mass
  int rings = 0;
  int finest_nodes = 0;
  bool capped = false;

  std::size_t size() const { return y.size(); }
};

IncrementNodes build_nodes(const std::vector<const Field*>& fields, const Vec& x,
                           const Potential& phi, double sigma, const QuadraturePlan& plan);

double second_difference(const Field& u, const Vec& x, const Vec& y);

// Evaluations on a prepared node set (field index f).
double extremal_on(const IncrementNodes& nodes, std::size_t f, const KernelSpec& spec, bool plus);
double linear_on(const IncrementNodes& nodes, std::size_t f, const Vec& x, const KernelRule& rule,
                 const KernelSpec& bounds);
double isaacs_on(const IncrementNodes& nodes, std::size_t f, const Vec& x,
                 const std::vector<std::vector<KernelRule>>& families, const KernelSpec& bounds);

// Pointwise operators. spec.selection picks M+ or M- for extremal().
double extremal(const Field& u, const Vec& x, const Potential& phi, const KernelSpec& spec,
                const QuadraturePlan& plan);
double linear_apply(const Field& u, const Vec& x, const Potential& phi, const KernelRule& rule,
                    const KernelSpec& bounds, const QuadraturePlan& plan);
double isaacs_apply(const Field& u, const Vec& x, const Potential& phi,
                    const std::vector<std::vector<KernelRule>>& families, const KernelSpec& bounds,
                    const QuadraturePlan& plan);

struct OperatorTriple {
  double m_minus = 0, isaacs = 0, m_plus = 0;
};
OperatorTriple operator_triple(const Field& u, const Vec& x, const Potential& phi,
                               const std::vector<std::vector<KernelRule>>& families,
                               const KernelSpec& bounds, const QuadraturePlan& plan);

struct EllipticityReport {
  double m_minus = 0;     // M-(u - v)
  double difference = 0;  // Iu - Iv
  double m_plus = 0;      // M+(u - v)
  double scale = 0;
  bool ok = false;
};

EllipticityReport ellipticity_check(const Field& u, const Field& v, const Vec& x, const Potential& phi,
                                    const std::vector<std::vector<KernelRule>>& families,
                                    const KernelSpec& bounds, const QuadraturePlan& plan);

}  // namespace deformk
