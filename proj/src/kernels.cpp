#include "deformk/kernels.hpp"

#include "deformk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace deformk {

void KernelSpec::validate() const {
  if (!(sigma > 0 && sigma < 2)) fail(ErrorKind::spec, "sigma must lie in (0, 2)");
  if (!(lambda > 0)) fail(ErrorKind::spec, "lambda must be positive");
  if (!(Lambda >= lambda)) fail(ErrorKind::spec, "Lambda must be >= lambda");
}

KernelRule constant_rule(double a) {
  std::ostringstream os;
  os << "constant(" << a << ")";
  return {os.str(), [a](const Vec&, const Vec&) { return a; }};
}

KernelRule checkerboard_rule(double lambda, double Lambda, double cell) {
  return {"checkerboard", [=](const Vec&, const Vec& y) {
            const long s = static_cast<long>(std::floor(y[0] / cell)) +
                           static_cast<long>(std::floor(y[1] / cell));
            return (s % 2 == 0) ? Lambda : lambda;
          }};
}

KernelRule smooth_rule(double lambda, double Lambda) {
  return {"smooth", [=](const Vec&, const Vec& y) {
            const double q = y.squaredNorm();
            return lambda + (Lambda - lambda) * q / (1 + q);
          }};
}

QuadraturePlan QuadraturePlan::for_grid(const Box& box, double h) {
  QuadraturePlan p;
  p.inner_radius = 2 * h;
  p.tail_radius = box.diameter();
  return p;
}

std::vector<double> QuadraturePlan::ring_radii(double sigma, double lo, double hi) {
  std::vector<double> out;
  if (!(hi > lo) || !(lo > 0)) return out;
  const double r0 = std::pow(2.0, -1.0 / (2 - sigma));
  // smallest k with r_k < hi
  const double kmin = std::ceil(std::log2(r0 / hi) + 1e-12);
  for (double k = kmin;; k += 1) {
    const double r = r0 * std::pow(2.0, -k);
    if (r <= lo) break;
    if (r < hi) out.push_back(r);
  }
  return out;
}

double second_difference(const Field& u, const Vec& x, const Vec& y) {
  return u.value(x + y) + u.value(x - y) - 2 * u.value(x);
}

namespace {

struct Frame {
  int n = 1;
  Mat to_y = Mat::Identity();  // y = to_y z
  Mat bmh = Mat::Identity();   // B^{-1/2}
  double jac = 1;
  double bmax = 1;
};

Frame make_frame(const Potential& phi, const Vec& x) {
  Frame f;
  f.n = phi.dim();
  const Mat b = phi.hessian(x);
  if (f.n == 1) {
    f.bmh = Mat::Zero();
    f.bmh(0, 0) = 1 / std::sqrt(b(0, 0));
    f.jac = std::sqrt(2.0 / b(0, 0));
    f.bmax = b(0, 0);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(b);
    f.bmh = es.operatorInverseSqrt();
    f.jac = 2.0 / std::sqrt(b.determinant());
    f.bmax = es.eigenvalues()[1];
  }
  f.to_y = std::sqrt(2.0) * f.bmh;
  return f;
}

struct Block {
  std::vector<Vec> y;
  std::vector<double> w;
  std::vector<std::vector<double>> d;
  std::vector<double> pos, neg;
};

class Builder {
 public:
  Builder(const std::vector<const Field*>& fields, const Vec& x, const Potential& phi, double sigma)
      : fields_(fields), x_(x), phi_(phi), sigma_(sigma), frame_(make_frame(phi, x)) {
    for (const Field* f : fields_) {
      const double v = f->value(x);
      if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite field value at x");
      center_.push_back(v);
    }
  }

  const Frame& frame() const { return frame_; }

  void add_node(Block& blk, const Vec& y, double w) const {
    blk.y.push_back(y);
    blk.w.push_back(w);
    for (std::size_t f = 0; f < fields_.size(); ++f) {
      const double dv = fields_[f]->value(x_ + y) + fields_[f]->value(x_ - y) - 2 * center_[f];
      if (!std::isfinite(dv)) fail(ErrorKind::data, "non-finite field value in quadrature");
      blk.d[f].push_back(dv);
      if (dv > 0) blk.pos[f] += w * dv;
      else blk.neg[f] -= w * dv;
    }
  }

  Block empty() const {
    Block b;
    b.d.resize(fields_.size());
    b.pos.assign(fields_.size(), 0.0);
    b.neg.assign(fields_.size(), 0.0);
    return b;
  }

  // ring a < |z| < b
  Block ring(double a, double b, int nn) const {
    Block blk = empty();
    const int n = frame_.n;
    const GaussRule& gl = gauss_legendre(nn);
    const std::vector<Vec> dirs = half_directions(n, nn);
    const double ang = n == 1 ? 1.0 : std::numbers::pi / nn;
    const double p = 0.5 * (n + sigma_);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double rho = a + (b - a) * gl.nodes[i];
      const double radial = (b - a) * gl.weights[i] * std::pow(rho, n - 1);
      for (const Vec& th : dirs) {
        const Vec y = frame_.to_y * (rho * th);
        const double wb = phi_.symmetric_height(x_, y);
        const double w = 2 * (2 - sigma_) * frame_.jac * ang * radial * std::pow(wb, -p);
        add_node(blk, y, w);
      }
    }
    return blk;
  }

  // |z| > r via rho = r t^{-1/sigma}
  Block tail(double r, int nn) const {
    Block blk = empty();
    const int n = frame_.n;
    const GaussRule& gl = gauss_legendre(nn);
    const std::vector<Vec> dirs = half_directions(n, nn);
    const double ang = n == 1 ? 1.0 : std::numbers::pi / nn;
    const double p = 0.5 * (n + sigma_);
    const double pref = 2 * (2 - sigma_) * frame_.jac * ang / (sigma_ * std::pow(r, sigma_));
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = gl.nodes[i];
      const double rho = r * std::pow(t, -1 / sigma_);
      for (const Vec& th : dirs) {
        const Vec y = frame_.to_y * (rho * th);
        const double wb = phi_.symmetric_height(x_, y);
        const double w = pref * gl.weights[i] * std::pow(rho * rho / wb, p);
        add_node(blk, y, w);
      }
    }
    return blk;
  }

  Block inner(double rho0, int angular) const {
    Block blk = empty();
    const int n = frame_.n;
    std::vector<Mat> ht;
    for (const Field* f : fields_) {
      const Mat h = f->hessian(x_);
      if (!h.allFinite()) fail(ErrorKind::data, "non-finite Hessian of u at x");
      ht.push_back(frame_.bmh * h * frame_.bmh);
    }
    const std::vector<Vec> dirs = half_directions(n, angular);
    const double ang = n == 1 ? 1.0 : std::numbers::pi / angular;
    const double w = 2 * ang * frame_.jac * std::pow(rho0, 2 - sigma_);
    for (const Vec& th : dirs) {
      blk.y.push_back(frame_.to_y * (0.5 * rho0 * th));
      blk.w.push_back(w);
      for (std::size_t f = 0; f < fields_.size(); ++f) {
        const double dv = 2 * th.dot(ht[f] * th);
        blk.d[f].push_back(dv);
        if (dv > 0) blk.pos[f] += w * dv;
        else blk.neg[f] -= w * dv;
      }
    }
    return blk;
  }

 private:
  const std::vector<const Field*>& fields_;
  Vec x_;
  const Potential& phi_;
  double sigma_;
  Frame frame_;
  std::vector<double> center_;
};

bool agree(const Block& a, const Block& b, double tol) {
  for (std::size_t f = 0; f < a.pos.size(); ++f) {
    const double diff = std::abs(a.pos[f] - b.pos[f]) + std::abs(a.neg[f] - b.neg[f]);
    const double mag = b.pos[f] + b.neg[f];
    if (diff > tol * mag) return false;
  }
  return true;
}

void append(IncrementNodes& out, Block&& b) {
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  out.weight.insert(out.weight.end(), b.w.begin(), b.w.end());
  for (std::size_t f = 0; f < b.d.size(); ++f)
    out.delta[f].insert(out.delta[f].end(), b.d[f].begin(), b.d[f].end());
}

void check_multiplier(double a, const KernelSpec& bounds, const KernelRule& rule) {
  const double slack = 1e-12 * bounds.Lambda;
  if (!(a >= bounds.lambda - slack && a <= bounds.Lambda + slack)) {
    std::ostringstream os;
    os << "kernel rule '" << rule.name << "' multiplier " << a << " outside [" << bounds.lambda
       << ", " << bounds.Lambda << "]";
    fail(ErrorKind::kernel_class_violation, os.str());
  }
}

}  // namespace

IncrementNodes build_nodes(const std::vector<const Field*>& fields, const Vec& x,
                           const Potential& phi, double sigma, const QuadraturePlan& plan) {
  if (!(sigma > 0 && sigma < 2)) fail(ErrorKind::spec, "sigma must lie in (0, 2)");
  if (fields.empty()) fail(ErrorKind::precondition, "build_nodes needs at least one field");
  if (!(plan.inner_radius > 0)) fail(ErrorKind::spec, "quadrature plan needs inner_radius > 0");
  Builder bld(fields, x, phi, sigma);
  const Frame& fr = bld.frame();
  const int n = phi.dim();
  const int cap = n == 1 ? plan.max_ring_nodes : std::min(plan.max_ring_nodes, 256);

  IncrementNodes out;
  out.delta.resize(fields.size());
  append(out, bld.inner(plan.inner_radius, n == 1 ? 1 : plan.inner_angular));

  const double rho0 = plan.inner_radius;
  double rt = plan.tail_radius * std::sqrt(0.5 * fr.bmax);
  if (!(rt > 2 * rho0)) rt = 2 * rho0;
  std::vector<double> edges{rho0};
  std::vector<double> mid = QuadraturePlan::ring_radii(sigma, rho0, rt);
  std::reverse(mid.begin(), mid.end());
  edges.insert(edges.end(), mid.begin(), mid.end());
  edges.push_back(rt);

  auto refine = [&](auto&& make) {
    int nn = plan.ring_nodes;
    Block prev = make(nn);
    for (;;) {
      if (2 * nn > cap) {
        out.capped = true;
        out.finest_nodes = std::max(out.finest_nodes, nn);
        return prev;
      }
      Block next = make(2 * nn);
      if (agree(prev, next, plan.ring_tolerance)) {
        out.finest_nodes = std::max(out.finest_nodes, 2 * nn);
        return next;
      }
      prev = std::move(next);
      nn *= 2;
    }
  };

  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    append(out, refine([&](int nn) { return bld.ring(edges[k], edges[k + 1], nn); }));
    ++out.rings;
  }
  Block t = refine([&](int nn) { return bld.tail(rt, nn); });
  double tail_mass = 0;
  for (double w : t.w) tail_mass += w;
  double sup = 0;
  for (const Field* f : fields) sup = std::max(sup, f->sup_bound());
  out.tail_bound = 4 * sup * tail_mass;
  append(out, std::move(t));
  return out;
}

double extremal_on(const IncrementNodes& nodes, std::size_t f, const KernelSpec& spec, bool plus) {
  const double up = plus ? spec.Lambda : spec.lambda;
  const double dn = plus ? spec.lambda : spec.Lambda;
  const auto& d = nodes.delta[f];
  double s = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s += nodes.weight[i] * (d[i] > 0 ? up * d[i] : dn * d[i]);
  return s;
}

double linear_on(const IncrementNodes& nodes, std::size_t f, const Vec& x, const KernelRule& rule,
                 const KernelSpec& bounds) {
  const auto& d = nodes.delta[f];
  double s = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a1 = rule.multiplier(x, nodes.y[i]);
    const double a2 = rule.multiplier(x, -nodes.y[i]);
    check_multiplier(a1, bounds, rule);
    check_multiplier(a2, bounds, rule);
    // clamp away round-off so the order M- <= L <= M+ is exact per node
    const double a = std::clamp(0.5 * (a1 + a2), bounds.lambda, bounds.Lambda);
    s += nodes.weight[i] * (a * d[i]);
  }
  return s;
}

double isaacs_on(const IncrementNodes& nodes, std::size_t f, const Vec& x,
                 const std::vector<std::vector<KernelRule>>& families, const KernelSpec& bounds) {
  if (families.empty()) fail(ErrorKind::config, "isaacs: empty family");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : families) {
    if (row.empty()) fail(ErrorKind::config, "isaacs: empty family row");
    double inner = -std::numeric_limits<double>::infinity();
    for (const KernelRule& rule : row) inner = std::max(inner, linear_on(nodes, f, x, rule, bounds));
    best = std::min(best, inner);
  }
  return best;
}

double extremal(const Field& u, const Vec& x, const Potential& phi, const KernelSpec& spec,
                const QuadraturePlan& plan) {
  spec.validate();
  if (spec.selection != Selection::extremal_plus && spec.selection != Selection::extremal_minus)
    fail(ErrorKind::spec, "extremal needs selection extremal_plus or extremal_minus");
  const IncrementNodes nodes = build_nodes({&u}, x, phi, spec.sigma, plan);
  return extremal_on(nodes, 0, spec, spec.selection == Selection::extremal_plus);
}

double linear_apply(const Field& u, const Vec& x, const Potential& phi, const KernelRule& rule,
                    const KernelSpec& bounds, const QuadraturePlan& plan) {
  bounds.validate();
  const IncrementNodes nodes = build_nodes({&u}, x, phi, bounds.sigma, plan);
  return linear_on(nodes, 0, x, rule, bounds);
}

double isaacs_apply(const Field& u, const Vec& x, const Potential& phi,
                    const std::vector<std::vector<KernelRule>>& families, const KernelSpec& bounds,
                    const QuadraturePlan& plan) {
  bounds.validate();
  if (families.empty()) fail(ErrorKind::config, "isaacs: empty family");
  const IncrementNodes nodes = build_nodes({&u}, x, phi, bounds.sigma, plan);
  return isaacs_on(nodes, 0, x, families, bounds);
}

OperatorTriple operator_triple(const Field& u, const Vec& x, const Potential& phi,
                               const std::vector<std::vector<KernelRule>>& families,
                               const KernelSpec& bounds, const QuadraturePlan& plan) {
  bounds.validate();
  const IncrementNodes nodes = build_nodes({&u}, x, phi, bounds.sigma, plan);
  OperatorTriple t;
  t.m_minus = extremal_on(nodes, 0, bounds, false);
  t.m_plus = extremal_on(nodes, 0, bounds, true);
  t.isaacs = families.empty() ? 0.0 : isaacs_on(nodes, 0, x, families, bounds);
  return t;
}

EllipticityReport ellipticity_check(const Field& u, const Field& v, const Vec& x, const Potential& phi,
                                    const std::vector<std::vector<KernelRule>>& families,
                                    const KernelSpec& bounds, const QuadraturePlan& plan) {
  bounds.validate();
  const IncrementNodes nodes = build_nodes({&u, &v}, x, phi, bounds.sigma, plan);
  // u - v on the same nodes, exactly linear in the stored deltas
  IncrementNodes dn;
  dn.y = nodes.y;
  dn.weight = nodes.weight;
  dn.delta.resize(1);
  dn.delta[0].resize(nodes.size());
  double scale = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    dn.delta[0][i] = nodes.delta[0][i] - nodes.delta[1][i];
    scale += nodes.weight[i] * bounds.Lambda * (std::abs(nodes.delta[0][i]) + std::abs(nodes.delta[1][i]));
  }
  EllipticityReport r;
  r.m_minus = extremal_on(dn, 0, bounds, false);
  r.m_plus = extremal_on(dn, 0, bounds, true);
  r.difference = isaacs_on(nodes, 0, x, families, bounds) - isaacs_on(nodes, 1, x, families, bounds);
  r.scale = scale;
  const double tol = 1e-6 * std::max(scale, 1e-300);
  r.ok = r.m_minus <= r.difference + tol && r.difference <= r.m_plus + tol;
  if (!r.ok) {
    std::ostringstream os;
    os << "sandwich violated: M-=" << r.m_minus << " Iu-Iv=" << r.difference << " M+=" << r.m_plus;
    fail(ErrorKind::ellipticity_failure, os.str());
  }
  return r;
}

}  // namespace deformk
