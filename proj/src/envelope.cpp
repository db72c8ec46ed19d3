#include "deformk/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace deformk {

namespace {

using V3 = Eigen::Vector3d;

// Upper hull facets of a 3D point cloud (incremental, all-face visibility scan).
struct Plane {
  double a = 0, b = 0, c = 0;  // z = a x + b y + c
  double at(const Vec& p) const { return a * p[0] + b * p[1] + c; }
};

std::vector<Plane> upper_hull_planes(const std::vector<V3>& pts) {
  const int n = static_cast<int>(pts.size());
  double scale = 0;
  for (const V3& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-11 * std::max(1.0, scale);

  // initial simplex
  int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  double best = 0;
  for (int k = 0; k < n; ++k)
    if ((pts[k] - pts[i0]).norm() > best) { best = (pts[k] - pts[i0]).norm(); i1 = k; }
  if (i1 < 0 || best <= eps) return {};
  best = 0;
  for (int k = 0; k < n; ++k) {
    const double d = (pts[i1] - pts[i0]).cross(pts[k] - pts[i0]).norm();
    if (d > best) { best = d; i2 = k; }
  }
  if (i2 < 0 || best <= eps * scale) return {};
  const V3 nrm0 = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  best = 0;
  for (int k = 0; k < n; ++k) {
    const double d = std::abs(nrm0.dot(pts[k] - pts[i0]));
    if (d > best) { best = d; i3 = k; }
  }
  if (i3 < 0 || best <= eps) return {};  // flat cloud

  struct Face {
    int v[3];
    V3 n;
    double off;
    bool alive;
  };
  std::vector<Face> faces;
  std::unordered_map<long long, int> edge;
  auto key = [n](int a, int b) { return static_cast<long long>(a) * n + b; };
  const V3 centroid = 0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);
  auto add = [&](int a, int b, int c) {
    V3 nn = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    if (nn.dot(pts[a] - centroid) < 0) {
      std::swap(b, c);
      nn = -nn;
    }
    nn.normalize();
    faces.push_back({{a, b, c}, nn, nn.dot(pts[a]), true});
    const int id = static_cast<int>(faces.size()) - 1;
    edge[key(a, b)] = id;
    edge[key(b, c)] = id;
    edge[key(c, a)] = id;
  };
  add(i0, i1, i2);
  add(i0, i1, i3);
  add(i0, i2, i3);
  add(i1, i2, i3);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(12345);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> visible;
  for (int p : order) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (faces[f].alive && faces[f].n.dot(pts[p]) - faces[f].off > eps) visible.push_back(static_cast<int>(f));
    if (visible.empty()) continue;
    std::vector<std::pair<int, int>> horizon;
    for (int f : visible) faces[static_cast<std::size_t>(f)].alive = false;
    for (int f : visible) {
      const Face& F = faces[static_cast<std::size_t>(f)];
      for (int e = 0; e < 3; ++e) {
        const int a = F.v[e], b = F.v[(e + 1) % 3];
        auto it = edge.find(key(b, a));
        if (it != edge.end() && faces[static_cast<std::size_t>(it->second)].alive) horizon.emplace_back(a, b);
      }
    }
    for (int f : visible) {
      const Face& F = faces[static_cast<std::size_t>(f)];
      for (int e = 0; e < 3; ++e) {
        auto it = edge.find(key(F.v[e], F.v[(e + 1) % 3]));
        if (it != edge.end() && it->second == f) edge.erase(it);
      }
    }
    for (const auto& [a, b] : horizon) {
      V3 nn = (pts[b] - pts[a]).cross(pts[p] - pts[a]);
      const double len = nn.norm();
      if (len == 0) continue;
      nn /= len;
      faces.push_back({{a, b, p}, nn, nn.dot(pts[a]), true});
      const int id = static_cast<int>(faces.size()) - 1;
      edge[key(a, b)] = id;
      edge[key(b, p)] = id;
      edge[key(p, a)] = id;
    }
    if (faces.size() > 8 * static_cast<std::size_t>(n) + 64) {
      // compact dead faces
      std::vector<Face> keep;
      for (const Face& f : faces)
        if (f.alive) keep.push_back(f);
      faces = std::move(keep);
      edge.clear();
      for (std::size_t f = 0; f < faces.size(); ++f)
        for (int e = 0; e < 3; ++e) edge[key(faces[f].v[e], faces[f].v[(e + 1) % 3])] = static_cast<int>(f);
    }
  }
  std::vector<Plane> out;
  for (const Face& f : faces) {
    if (!f.alive || f.n[2] <= 1e-12) continue;
    out.push_back({-f.n[0] / f.n[2], -f.n[1] / f.n[2], f.off / f.n[2]});
  }
  return out;
}

double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// 2D convex hull (monotone chain), collinear points dropped
std::vector<Vec> hull2(std::vector<Vec> p) {
  std::sort(p.begin(), p.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  std::vector<Vec> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(const std::vector<Vec>& h) {
  double a = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec& p = h[i];
    const Vec& q = h[(i + 1) % h.size()];
    a += p[0] * q[1] - p[1] * q[0];
  }
  return 0.5 * std::abs(a);
}

// extended lattice nodes (spacing h, aligned with lat.box.lo) inside a bounding box
template <class F>
void for_nodes_in(const Lattice& lat, const Box& b, F&& fn) {
  const double h = lat.h;
  const int i0 = static_cast<int>(std::ceil((b.lo[0] - lat.box.lo[0]) / h - 1e-9));
  const int i1 = static_cast<int>(std::floor((b.hi[0] - lat.box.lo[0]) / h + 1e-9));
  int j0 = 0, j1 = 0;
  if (lat.dim() == 2) {
    j0 = static_cast<int>(std::ceil((b.lo[1] - lat.box.lo[1]) / h - 1e-9));
    j1 = static_cast<int>(std::floor((b.hi[1] - lat.box.lo[1]) / h + 1e-9));
  }
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) fn(i, j, lat.box.lo + Vec(i * h, lat.dim() == 2 ? j * h : 0.0));
}

bool in_box_lattice(const Lattice& lat, int i, int j) {
  return i >= 0 && i <= lat.count[0] && (lat.dim() == 1 || (j >= 0 && j <= lat.count[1]));
}

}  // namespace

std::size_t EnvelopeResult::contact_count() const {
  return static_cast<std::size_t>(std::count(contact.begin(), contact.end(), 1));
}

TauReport compute_tau(const Potential& phi, int samples, double gamma_hat) {
  if (samples < 4) fail(ErrorKind::precondition, "compute_tau needs at least 4 samples");
  TauReport rep;
  rep.samples = samples;
  rep.gamma_hat = gamma_hat > 0 ? gamma_hat : engulfing_probe(phi, Vec::Zero(), 1.0, 64);
  const Vec o = Vec::Zero();
  std::vector<Vec> bd;
  for (const Vec& d : full_directions(phi.dim(), samples)) bd.push_back(boundary_radius(phi, o, 1.0, d) * d);
  // interior samples do not raise the sup (v_0 convex), boundary pairs suffice
  double sup2 = 0;
  for (const Vec& x : bd)
    for (const Vec& w : bd) sup2 = std::max(sup2, phi.height(o, 2 * x - w));
  rep.sampled_sup = std::sqrt(sup2);

  auto pass = [&](double tau) { return tau * tau >= sup2; };
  double lo = rep.gamma_hat, hi = 64 * rep.gamma_hat;
  if (!pass(hi)) {
    std::ostringstream os;
    os << "no tau <= 64 gamma_hat = " << hi << " passes (sampled sup " << rep.sampled_sup << ")";
    fail(ErrorKind::geometry_pathology, os.str());
  }
  if (pass(lo)) {
    rep.tau = std::max(1.0, lo);
    rep.cell = 0;
    return rep;
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pass(mid)) hi = mid;
    else lo = mid;
  }
  rep.cell = hi - lo;
  // the sampled predicate switches exactly at sampled_sup; bisection brackets it to one cell
  rep.tau = std::max(1.0, rep.sampled_sup);
  return rep;
}

EnvelopeResult concave_envelope(const GridFunction& u, const Potential& phi, double tau, const EnvelopeOptions& opt) {
  if (!(tau >= 1)) fail(ErrorKind::precondition, "tau must be >= 1");
  const Lattice& lat = u.lattice();
  const int dim = lat.dim();
  const Vec o = Vec::Zero();
  const double tau2 = tau * tau;
  EnvelopeResult env;
  env.tau = tau;
  env.in_tau.assign(lat.size(), 0);
  env.contact.assign(lat.size(), 0);
  env.supergradient.assign(lat.size(), Vec::Zero());

  double sup_pos = 0;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const Vec x = lat.node(k);
    const double v = phi.height(o, x);
    if (v >= 1 && u.values()[k] > 1e-12) {
      std::ostringstream os;
      os << "u > 0 outside S_1 at (" << x[0] << ", " << x[1] << ")";
      fail(ErrorKind::precondition, os.str());
    }
    env.in_tau[k] = v < tau2;
    sup_pos = std::max(sup_pos, u.values()[k]);
  }

  // point cloud: positive nodes plus the extreme lattice points of S_tau (value 0)
  std::map<std::pair<int, int>, double> cloud;
  const Box tb = section_bounds(phi, Section{o, tau}, dim == 1 ? 2 : 256, 0.02);
  std::map<int, std::pair<int, int>> rows;  // j -> (imin, imax) in S_tau
  for_nodes_in(lat, tb, [&](int i, int j, const Vec& p) {
    if (phi.height(o, p) >= tau2) return;
    auto it = rows.find(j);
    if (it == rows.end()) rows[j] = {i, i};
    else {
      it->second.first = std::min(it->second.first, i);
      it->second.second = std::max(it->second.second, i);
    }
  });
  {
    std::vector<Vec> base;
    for (const auto& [j, ii] : rows) {
      base.emplace_back(ii.first, j);
      base.emplace_back(ii.second, j);
    }
    for (const Vec& b : (dim == 2 ? hull2(base) : base)) cloud[{static_cast<int>(b[0]), static_cast<int>(b[1])}] = 0.0;
  }
  for (std::size_t k = 0; k < lat.size(); ++k) {
    if (!env.in_tau[k] || !(u.values()[k] > 0)) continue;
    const auto ij = lat.ij(k);
    double& z = cloud[{ij[0], ij[1]}];
    z = std::max(z, u.values()[k]);
  }

  std::vector<double> gam(lat.size(), 0.0);
  if (sup_pos > 0) {
    if (dim == 1) {
      std::vector<Vec> pts;  // (x, z)
      for (const auto& [ij, z] : cloud) pts.emplace_back(lat.box.lo[0] + ij.first * lat.h, z);
      std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0]; });
      std::vector<Vec> hu;
      for (const Vec& p : pts) {
        while (hu.size() >= 2 && cross2(hu[hu.size() - 2], hu.back(), p) >= 0) hu.pop_back();
        hu.push_back(p);
      }
      for (std::size_t k = 0; k < lat.size(); ++k) {
        if (!env.in_tau[k]) continue;
        const double x = lat.node(k)[0];
        std::size_t s = 0;
        while (s + 2 < hu.size() && hu[s + 1][0] <= x) ++s;
        const double slope = (hu[s + 1][1] - hu[s][1]) / (hu[s + 1][0] - hu[s][0]);
        gam[k] = hu[s][1] + slope * (x - hu[s][0]);
        double g = slope;
        if (std::abs(x - hu[s][0]) < 1e-12 * lat.h && s > 0)
          g = 0.5 * (slope + (hu[s][1] - hu[s - 1][1]) / (hu[s][0] - hu[s - 1][0]));
        else if (std::abs(x - hu[s + 1][0]) < 1e-12 * lat.h && s + 2 < hu.size())
          g = 0.5 * (slope + (hu[s + 2][1] - hu[s + 1][1]) / (hu[s + 2][0] - hu[s + 1][0]));
        env.supergradient[k] = Vec(g, 0);
      }
    } else {
      std::vector<V3> pts;
      for (const auto& [ij, z] : cloud)
        pts.emplace_back(lat.box.lo[0] + ij.first * lat.h, lat.box.lo[1] + ij.second * lat.h, z);
      const std::vector<Plane> planes = upper_hull_planes(pts);
      if (planes.empty()) fail(ErrorKind::geometry, "degenerate envelope point cloud");
      for (std::size_t k = 0; k < lat.size(); ++k) {
        if (!env.in_tau[k]) continue;
        const Vec x = lat.node(k);
        double m = std::numeric_limits<double>::infinity();
        for (const Plane& p : planes) m = std::min(m, p.at(x));
        Vec g = Vec::Zero();
        int ties = 0;
        const double slack = 1e-12 * std::max(1.0, sup_pos);
        for (const Plane& p : planes)
          if (p.at(x) <= m + slack) {
            g += Vec(p.a, p.b);
            ++ties;
          }
        gam[k] = std::max(0.0, m);
        env.supergradient[k] = g / ties;
      }
    }
  }

  // contact tolerance: twice the interpolation error h^2/8 |D^2 u| on the smooth positive set
  double tol = opt.contact_tolerance;
  if (tol < 0) {
    double d2 = 0;
    for (std::size_t k = 0; k < lat.size(); ++k) {
      const auto ij = lat.ij(k);
      if (lat.on_boundary(ij[0], ij[1]) || !(u.values()[k] > 0)) continue;
      for (int a = 0; a < dim; ++a) {
        const int di = a == 0 ? 1 : 0, dj = a == 1 ? 1 : 0;
        const double up = u.at(ij[0] + di, ij[1] + dj), dn = u.at(ij[0] - di, ij[1] - dj);
        if (!(up > 0 && dn > 0)) continue;
        d2 = std::max(d2, std::abs(up + dn - 2 * u.values()[k]) / (lat.h * lat.h));
      }
    }
    tol = 2 * lat.h * lat.h / 8 * d2;
  }
  env.tolerance = std::max(tol, 1e-12 * std::max(1.0, sup_pos));
  for (std::size_t k = 0; k < lat.size(); ++k)
    env.contact[k] = phi.height(o, lat.node(k)) < 1 && std::abs(u.values()[k] - gam[k]) <= env.tolerance;

  ExteriorRule zero = ExteriorRule::constant(0);
  zero.name = "zero";
  env.gamma = GridFunction(lat, std::move(gam), zero);
  return env;
}

RingReport ring_estimate_check(const GridFunction& u, const std::vector<double>& mplus, const SourceRule& f,
                               const Potential& phi, const KernelSpec& spec, const EnvelopeResult& env, double M,
                               double C0, double pre_tolerance) {
  spec.validate();
  if (!(M > 0)) fail(ErrorKind::precondition, "M must be positive");
  const Lattice& lat = u.lattice();
  if (mplus.size() != lat.size()) fail(ErrorKind::precondition, "operator values must cover the lattice");
  if (env.contact_count() == 0) fail(ErrorKind::precondition, "contact set is empty");
  const double r0 = std::pow(2.0, -1 / (2 - spec.sigma));
  int kmax = -1;
  while (r0 * std::pow(0.5, kmax + 1) >= 4 * lat.h) ++kmax;
  if (kmax < 0) fail(ErrorKind::refinement_needed, "no ring with r_k >= 4h; refine the grid");

  RingReport rep;
  rep.M = M;
  rep.C0 = C0;
  rep.all_pass = true;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    if (!env.contact[k]) continue;
    RingPoint pt;
    pt.x = lat.node(k);
    pt.f = f(pt.x);
    pt.k_max = kmax;
    if (std::isfinite(mplus[k]) && mplus[k] < -pt.f - pre_tolerance * std::max(1.0, std::abs(pt.f))) {
      std::ostringstream os;
      os << "M+u < -f at contact point (" << pt.x[0] << ", " << pt.x[1] << ")";
      fail(ErrorKind::precondition, os.str());
    }
    const Vec g = env.supergradient[k];
    const double ux = u.values()[k];
    pt.min_ratio = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= kmax; ++ring) {
      const double rk = r0 * std::pow(0.5, ring), rk1 = 0.5 * rk;
      long nr = 0, nw = 0;
      for_nodes_in(lat, section_bounds(phi, Section{pt.x, rk}, 64, 0.05), [&](int, int, const Vec& y) {
        const double v = phi.height(pt.x, y);
        if (v >= rk * rk || v < rk1 * rk1) return;
        ++nr;
        if (u.value(y) < ux + g.dot(y - pt.x) - M * rk * rk) ++nw;
      });
      if (nr == 0) continue;
      const double ratio = static_cast<double>(nw) / static_cast<double>(nr);
      pt.min_ratio = std::min(pt.min_ratio, ratio);
      if (pt.k_star < 0 && ratio <= C0 * pt.f / M) pt.k_star = ring;
    }
    if (!std::isfinite(pt.min_ratio)) fail(ErrorKind::refinement_needed, "rings contain no lattice points");
    pt.c0_hat = pt.min_ratio == 0 ? 0.0 : (pt.f > 0 ? M / pt.f * pt.min_ratio : std::numeric_limits<double>::infinity());
    rep.c0_hat = std::max(rep.c0_hat, pt.c0_hat);
    rep.all_pass = rep.all_pass && pt.k_star >= 0;
    rep.points.push_back(pt);
  }
  return rep;
}

AbpReport abp_experiment(const GridFunction& u, const std::vector<double>& mplus, const SourceRule& f,
                         const Potential& phi, const KernelSpec& spec, const AbpOptions& opt) {
  spec.validate();
  const Lattice& lat = u.lattice();
  const int dim = lat.dim();
  const Vec o = Vec::Zero();
  AbpReport rep;
  rep.tau = opt.tau > 0 ? opt.tau : compute_tau(phi, 256).tau;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    rep.sup_u = std::max(rep.sup_u, u.values()[k]);
    rep.f_sup = std::max(rep.f_sup, std::abs(f(lat.node(k))));
  }
  if (mplus.size() != lat.size()) fail(ErrorKind::precondition, "operator values must cover the lattice");
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const Vec x = lat.node(k);
    if (!std::isfinite(mplus[k]) || phi.height(o, x) >= 1) continue;
    if (mplus[k] < -f(x) - 1e-7 * std::max(1.0, std::abs(f(x)))) {
      std::ostringstream os;
      os << "M+u >= -f fails at (" << x[0] << ", " << x[1] << ")";
      fail(ErrorKind::precondition, os.str());
    }
  }
  rep.envelope = concave_envelope(u, phi, rep.tau, opt.envelope);
  if (rep.sup_u <= 0) {
    rep.trivial = true;
    return rep;
  }
  rep.contacts = rep.envelope.contact_count();
  rep.rings = ring_estimate_check(u, mplus, f, phi, spec, rep.envelope, opt.M, opt.C0);

  const double r0 = std::pow(2.0, -1 / (2 - spec.sigma));
  std::vector<Section> secs;
  std::vector<double> fvals;
  std::vector<Vec> grads;
  for (const RingPoint& p : rep.rings.points) {
    if (p.k_star < 0) continue;
    secs.push_back({p.x, r0 * std::pow(0.5, p.k_star)});
    fvals.push_back(p.f);
  }
  if (secs.empty()) return rep;

  // union measure by marking cells of a common grid
  Box ub = section_bounds(phi, secs[0]);
  for (const Section& s : secs) {
    const Box b = section_bounds(phi, s);
    for (int a = 0; a < dim; ++a) {
      ub.lo[a] = std::min(ub.lo[a], b.lo[a]);
      ub.hi[a] = std::max(ub.hi[a], b.hi[a]);
    }
  }
  const MeasureGrid grid = MeasureGrid::with_spacing(ub, 0.5 * lat.h);
  std::vector<char> mark(grid.size(), 0);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const Vec p = grid.center(c);
    for (const Section& s : secs)
      if (contains(phi, s, p)) {
        mark[c] = 1;
        break;
      }
  }
  rep.union_measure = static_cast<double>(std::count(mark.begin(), mark.end(), 1)) * grid.cell_measure();
  rep.c_hat = std::pow(rep.sup_u, dim) / rep.union_measure;

  std::vector<Vec> centers;
  for (const Section& s : secs) centers.push_back(s.center);
  auto radius = [&](const Vec& p) {
    for (const Section& s : secs)
      if (s.center == p) return s.r;
    return secs[0].r;
  };
  const CoverReport cov = besicovitch_cover(phi, centers, radius, opt.cover_eps, MeasureGrid::with_spacing(ub, lat.h));
  rep.cover_size = static_cast<int>(cov.selected.size());
  rep.cover_overlap = cov.overlap_max;
  rep.cover_ok = cov.covers;

  const EnvelopeResult& env = rep.envelope;
  const GridFunction& gam = env.gamma;
  for (std::size_t s = 0; s < secs.size(); ++s) {
    const Section& S = secs[s];
    // gradient image of S_{r/4}
    std::vector<Vec> gs;
    const Section q{S.center, 0.25 * S.r};
    for_nodes_in(lat, section_bounds(phi, q), [&](int i, int j, const Vec& y) {
      if (!in_box_lattice(lat, i, j) || !contains(phi, q, y)) return;
      const std::size_t k = lat.index(i, j);
      if (env.in_tau[k]) gs.push_back(env.supergradient[k]);
    });
    double image = 0;
    if (dim == 1) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Vec& g : gs) {
        lo = std::min(lo, g[0]);
        hi = std::max(hi, g[0]);
      }
      if (!gs.empty()) image = hi - lo;
    } else {
      const std::vector<Vec> hh = hull2(gs);
      image = hh.size() >= 3 ? polygon_area(hh) : 0.0;
    }
    if (fvals[s] > 0) {
      const double vol = section_volume(phi, q, dim == 1 ? 4000 : 200);
      rep.gradient_ratio_max = std::max(rep.gradient_ratio_max, image / (std::pow(fvals[s], dim) * vol));
    }

    // quadratic detachment on the inner half section
    const std::size_t kc = lat.index(static_cast<int>(std::lround((S.center[0] - lat.box.lo[0]) / lat.h)),
                                     dim == 2 ? static_cast<int>(std::lround((S.center[1] - lat.box.lo[1]) / lat.h)) : 0);
    const Vec g0 = env.supergradient[kc];
    const double gx = gam.values()[kc];
    const double hdet = opt.M * S.r * S.r;
    long shell = 0, bad = 0;
    bool holds = true;
    for_nodes_in(lat, section_bounds(phi, S), [&](int i, int j, const Vec& y) {
      if (!in_box_lattice(lat, i, j)) return;
      const double v = phi.height(S.center, y);
      if (v >= S.r * S.r) return;
      const double t = gx + g0.dot(y - S.center) - hdet;
      const double gy = gam.values()[lat.index(i, j)];
      if (v >= 0.25 * S.r * S.r) {
        ++shell;
        if (gy < t) ++bad;
      } else if (gy < t - env.tolerance) {
        holds = false;
      }
    });
    if (shell > 0 && static_cast<double>(bad) <= opt.eps0 * static_cast<double>(shell)) {
      ++rep.detachment_applicable;
      if (holds) ++rep.detachment_holds;
    }
  }
  return rep;
}

}  // namespace deformk
