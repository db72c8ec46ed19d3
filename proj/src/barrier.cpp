#include "deformk/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace deformk {

double Barrier::value(const Vec& x) const {
  switch (kind) {
    case BarrierKind::F_power: {
      const double r = dim == 1 ? std::abs(x[0]) : x.norm();
      return r <= s ? std::pow(s, -m) : std::pow(r, -m);
    }
    case BarrierKind::g_normalized: {
      const double r = anchor.apply(x).norm();
      return r <= s ? std::pow(s, -m) : std::pow(r, -m);
    }
    case BarrierKind::psi_bump: {
      const double rho2 = phi.height(Vec::Zero(), x);
      const double rho = std::sqrt(rho2);
      const double base = std::pow(2 * tau, -m);
      if (rho >= 2 * tau) return 0.0;
      if (rho >= s) return c * (std::pow(rho, -m) - base);
      return c * (std::pow(s, -m) * (1 + 0.5 * m) - 0.5 * m * std::pow(s, -m - 2) * rho2 - base);
    }
  }
  return 0;
}

double Barrier::sup() const {
  if (kind == BarrierKind::psi_bump) return c * (std::pow(s, -m) * (1 + 0.5 * m) - std::pow(2 * tau, -m));
  return std::pow(s, -m);
}

namespace {

struct BoundaryMoments {
  double y1sq = 0;  // int y_1^2 dsigma
  double length = 0;
};

BoundaryMoments boundary_moments(const Potential& phi, int nodes) {
  BoundaryMoments b;
  const Vec o = Vec::Zero();
  if (phi.dim() == 1) {
    for (double sgn : {1.0, -1.0}) {
      const double t = boundary_radius(phi, o, 1.0, Vec(sgn, 0));
      b.y1sq += t * t;
      b.length += 1;
    }
    return b;
  }
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    const double a = 2 * std::numbers::pi * k / nodes;
    const Vec d(std::cos(a), std::sin(a));
    pts.push_back(boundary_radius(phi, o, 1.0, d) * d);
  }
  for (int k = 0; k < nodes; ++k) {
    const Vec& p = pts[static_cast<std::size_t>(k)];
    const Vec& q = pts[static_cast<std::size_t>((k + 1) % nodes)];
    const double len = (q - p).norm();
    const Vec mid = 0.5 * (p + q);
    b.y1sq += mid[0] * mid[0] * len;
    b.length += len;
  }
  return b;
}

}  // namespace

double barrier_delta0(const Potential& phi, const KernelSpec& spec, double m, int boundary_nodes) {
  const BoundaryMoments b = boundary_moments(phi, boundary_nodes);
  return (m + 2) * spec.lambda * b.y1sq - spec.Lambda * b.length;
}

double minimal_barrier_m(const Potential& phi, const KernelSpec& spec, int boundary_nodes) {
  const BoundaryMoments b = boundary_moments(phi, boundary_nodes);
  return spec.Lambda * b.length / (spec.lambda * b.y1sq) - 2;
}

Barrier build_barrier(BarrierKind kind, const Potential& phi, const KernelSpec& spec,
                      const BarrierParams& params) {
  spec.validate();
  if (!(params.m > 0)) fail(ErrorKind::precondition, "barrier exponent m must be positive");
  if (!(params.s > 0)) fail(ErrorKind::precondition, "barrier parameter s must be positive");
  Barrier b;
  b.kind = kind;
  b.dim = phi.dim();
  b.m = params.m;
  b.s = params.s;
  b.phi = phi;
  b.delta0 = barrier_delta0(phi, spec, params.m, params.boundary_nodes);
  if (!(b.delta0 > 0)) {
    std::ostringstream os;
    os << "delta0 = " << b.delta0 << " <= 0 for m = " << params.m << "; minimal admissible m is "
       << std::max(0.0, minimal_barrier_m(phi, spec, params.boundary_nodes));
    fail(ErrorKind::m_too_small, os.str());
  }
  if (kind == BarrierKind::g_normalized) {
    b.anchor = fit_ellipsoid(phi, Vec::Zero(), params.r, 64).map;
  } else if (kind == BarrierKind::psi_bump) {
    if (!(params.tau > 0)) fail(ErrorKind::precondition, "psi_bump needs tau > 0");
    if (!(params.s < params.tau)) fail(ErrorKind::precondition, "psi_bump needs s < tau");
    b.tau = params.tau;
    const double gap = std::pow(params.tau, -params.m) - std::pow(2 * params.tau, -params.m);
    b.c = 2.2 / gap;
  }
  return b;
}

std::vector<Vec> annulus_points(int dim, double r_in, double r_out, int count) {
  std::vector<Vec> out;
  const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    const double r = r_in + (r_out - r_in) * t;
    if (dim == 1) out.emplace_back(k % 2 == 0 ? r : -r, 0.0);
    else out.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k));
  }
  return out;
}

std::vector<Vec> shell_points(const Potential& phi, const Vec& center, double r_in, double r_out, int count) {
  std::vector<Vec> out;
  const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    const double level = r_in + (r_out - r_in) * t;
    Vec d = phi.dim() == 1 ? Vec(k % 2 == 0 ? 1.0 : -1.0, 0) : Vec(std::cos(golden * k), std::sin(golden * k));
    out.push_back(center + boundary_radius(phi, center, level, d) * d);
  }
  return out;
}

SubsolutionReport verify_subsolution(const Barrier& barrier, const Potential& phi, const KernelSpec& spec,
                                     const std::vector<Vec>& points, double tolerance) {
  spec.validate();
  if (points.empty()) fail(ErrorKind::precondition, "verify_subsolution needs sample points");
  const BarrierField field(barrier);
  double extent = 0;
  for (const Vec& p : points) extent = std::max(extent, p.norm());
  QuadraturePlan plan;
  plan.inner_radius = 1e-2;
  plan.tail_radius = 4 * std::max(1.0, extent) + (barrier.kind == BarrierKind::psi_bump ? 8 * barrier.tau : 0.0);

  auto min_at = [&](double sigma, Vec* worst, double* raw, double* scale) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& p : points) {
      const IncrementNodes nodes = build_nodes({&field}, p, phi, sigma, plan);
      KernelSpec k = spec;
      k.sigma = sigma;
      const double v = extremal_on(nodes, 0, k, false);
      double sc = 0;
      for (std::size_t i = 0; i < nodes.size(); ++i) sc += nodes.weight[i] * spec.Lambda * std::abs(nodes.delta[0][i]);
      const double scaled = v / std::max(sc, 1e-300);
      if (scaled < best) {
        best = scaled;
        if (worst) *worst = p;
        if (raw) *raw = v;
        if (scale) *scale = sc;
      }
    }
    return best;
  };

  SubsolutionReport rep;
  rep.sigma = spec.sigma;
  rep.min_scaled = min_at(spec.sigma, &rep.worst, &rep.min_value, &rep.scale);
  rep.ok = rep.min_scaled >= -tolerance;

  rep.sigma0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid;
  for (int k = 11; k <= 19; ++k) grid.push_back(k / 10.0);
  grid.push_back(1.95);
  bool any = false;
  for (double s : grid) {
    const double v = min_at(s, nullptr, nullptr, nullptr);
    rep.scan.emplace_back(s, v);
    if (v >= -tolerance && !any) {
      rep.sigma0 = s;
      any = true;
    }
  }
  if (!any && !rep.ok) {
    std::ostringstream os;
    os << "no sigma passes; worst point (" << rep.worst[0] << ", " << rep.worst[1] << ")";
    fail(ErrorKind::barrier_failure, os.str());
  }
  return rep;
}

}  // namespace deformk
