#include "deformk/sections.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace deformk {

namespace {

std::string fmt_point(const Vec& p, int dim) {
  std::ostringstream os;
  os << "(" << p[0];
  if (dim == 2) os << ", " << p[1];
  os << ")";
  return os.str();
}

// Local counting lattice for a section; returns (inside count, cell measure).
template <class F>
void for_each_in_section(const Potential& phi, const Section& s, int per_axis, F&& f) {
  const Box b = section_bounds(phi, s);
  const MeasureGrid g = MeasureGrid::over(b, per_axis);
  const double r2 = s.r * s.r;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec p = g.center(k);
    if (phi.height(s.center, p) < r2) f(p, g.cell_measure());
  }
}

}  // namespace

bool contains(const Potential& phi, const Section& s, const Vec& y) {
  return phi.height(s.center, y) < s.r * s.r;
}

double quasi_distance(const Potential& phi, const Vec& x, const Vec& y) {
  return std::sqrt(phi.height(x, y));
}

double boundary_radius(const Potential& phi, const Vec& x, double r, const Vec& direction) {
  if (!(r > 0)) fail(ErrorKind::precondition, "boundary_radius needs r > 0");
  Vec d = direction;
  if (phi.dim() == 1) d[1] = 0;
  const double nd = d.norm();
  if (!(nd > 0)) fail(ErrorKind::precondition, "boundary_radius needs a nonzero direction");
  d /= nd;
  if (phi.quadratic()) return r * std::sqrt(2.0 / d.dot(phi.matrix() * d));

  const double r2 = r * r;
  auto f = [&](double t) { return phi.height(x, x + t * d) - r2; };
  const auto [mlo, mhi] = phi.hessian_spectrum();
  double lo = 0.5 * r * std::sqrt(2.0 / mhi);
  double hi = r * std::sqrt(2.0 / mlo);
  while (f(lo) > 0) lo *= 0.5;
  while (f(hi) < 0) {
    hi *= 2;
    if (hi > 1e6 * r) fail(ErrorKind::unbounded_section, "boundary beyond 1e6 r");
  }
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(
      f, lo, hi, f(lo), f(hi), boost::math::tools::eps_tolerance<double>(44), iters);
  return 0.5 * (root.first + root.second);
}

Box section_bounds(const Potential& phi, const Section& s, int rays, double pad) {
  Box b;
  b.dim = phi.dim();
  b.lo = s.center;
  b.hi = s.center;
  for (const Vec& d : full_directions(phi.dim(), rays)) {
    const Vec p = s.center + boundary_radius(phi, s.center, s.r, d) * d;
    for (int a = 0; a < phi.dim(); ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a]);
    }
  }
  for (int a = 0; a < phi.dim(); ++a) {
    const double w = (b.hi[a] - b.lo[a]) * pad;
    b.lo[a] -= w;
    b.hi[a] += w;
  }
  return b;
}

double section_volume(const Potential& phi, const Section& s, int per_axis) {
  double v = 0;
  for_each_in_section(phi, s, per_axis, [&](const Vec&, double cell) { v += cell; });
  return v;
}

Vec AffineMap::inverse_apply(const Vec& q) const {
  Vec out = Vec::Zero();
  if (dim == 1) {
    out[0] = (q[0] - offset[0]) / linear(0, 0);
  } else {
    out = linear.inverse() * (q - offset);
  }
  return out;
}

EllipsoidFit fit_ellipsoid(const Potential& phi, const Vec& x, double r, int ray_count) {
  const int n = phi.dim();
  if (ray_count < 2 * n + 2) fail(ErrorKind::precondition, "fit_ellipsoid needs ray_count >= 2n+2");
  EllipsoidFit out;
  out.map.dim = n;

  if (n == 1) {
    const double a = boundary_radius(phi, x, r, Vec(-1, 0));
    const double b = boundary_radius(phi, x, r, Vec(1, 0));
    const double half = 0.5 * (a + b), mid = x[0] + 0.5 * (b - a);
    out.map.linear = Mat::Zero();
    out.map.linear(0, 0) = 1 / half;
    out.map.offset = Vec(-mid / half, 0);
    out.inner = 1;
    out.outer = 1;
    out.volume = 2 * half;
    return out;
  }

  std::vector<Vec> pts;
  for (const Vec& d : full_directions(2, ray_count)) pts.push_back(x + boundary_radius(phi, x, r, d) * d);
  const int m = static_cast<int>(pts.size());

  // Khachiyan iteration on lifted points
  Eigen::MatrixXd q(3, m);
  for (int j = 0; j < m; ++j) q.col(j) << pts[static_cast<std::size_t>(j)], 1.0;
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(q);
    if (lu.rank() < 3) fail(ErrorKind::geometry, "degenerate boundary point set");
  }
  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
  const double d = 2;
  int it = 0;
  for (; it < 100000; ++it) {
    const Eigen::Matrix3d xm = q * u.asDiagonal() * q.transpose();
    const Eigen::Matrix3d xi = xm.inverse();
    Eigen::VectorXd mv(m);
    for (int j = 0; j < m; ++j) mv[j] = q.col(j).dot(xi * q.col(j));
    Eigen::Index jmax;
    const double mmax = mv.maxCoeff(&jmax);
    const double step = (mmax - d - 1) / ((d + 1) * (mmax - 1));
    Eigen::VectorXd nu = (1 - step) * u;
    nu[jmax] += step;
    const double change = (nu - u).norm();
    u = nu;
    if (change < 1e-6) break;
  }
  out.iterations = it;
  Eigen::MatrixXd p(2, m);
  for (int j = 0; j < m; ++j) p.col(j) = pts[static_cast<std::size_t>(j)];
  const Vec c = p * u;
  const Mat cov = p * u.asDiagonal() * p.transpose() - c * c.transpose();
  const Mat a = (cov / d).inverse();
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Mat l = es.operatorSqrt();
  out.map.linear = l;
  out.map.offset = -l * c;

  // fresh rays at offset angles
  double inner = std::numeric_limits<double>::infinity(), outer = 0;
  const int fresh = 4 * ray_count;
  for (int k = 0; k < fresh; ++k) {
    const double t = 2 * std::numbers::pi * (k + 0.3141) / fresh;
    const Vec dir(std::cos(t), std::sin(t));
    const Vec z = x + boundary_radius(phi, x, r, dir) * dir;
    const double nz = out.map.apply(z).norm();
    inner = std::min(inner, nz);
    outer = std::max(outer, nz);
  }
  if (outer > 1 + 1e-3) {
    out.map.linear /= outer;
    out.map.offset /= outer;
    inner /= outer;
    outer = 1;
  }
  out.inner = inner;
  out.outer = outer;
  out.volume = std::numbers::pi / std::abs(out.map.det());
  return out;
}

double engulfing_probe(const Potential& phi, const Vec& x, double r, int trial_count) {
  if (trial_count < 1) fail(ErrorKind::precondition, "engulfing_probe needs trial_count >= 1");
  const int n = phi.dim();
  const int rays = n == 1 ? 2 : 64;
  std::vector<Vec> dirs = full_directions(n, rays);
  std::vector<Vec> boundary;
  std::vector<double> tstar;
  for (const Vec& d : dirs) {
    const double t = boundary_radius(phi, x, r, d);
    tstar.push_back(t);
    boundary.push_back(x + t * d);
  }
  // interior samples: area-uniform radii along golden-angle directions
  const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
  double worst = 0;
  for (int k = 0; k < trial_count; ++k) {
    Vec dir;
    if (n == 1) dir = Vec(k % 2 == 0 ? 1.0 : -1.0, 0);
    else dir = Vec(std::cos(golden * k), std::sin(golden * k));
    const double frac = n == 1 ? (static_cast<double>(k / 2) + 0.5) / ((trial_count + 1) / 2)
                               : std::sqrt((k + 0.5) / trial_count);
    const double t = boundary_radius(phi, x, r, dir) * std::min(frac, 1 - 1e-9);
    const Vec y = x + t * dir;
    for (const Vec& z : boundary) worst = std::max(worst, std::sqrt(phi.height(y, z)) / r);
  }
  if (!(worst < 64)) fail(ErrorKind::engulfing_failure, "gamma > 64 needed at x = " + fmt_point(x, n));
  double lo = 1, hi = 64;
  if (worst < lo) return lo;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (worst < mid) hi = mid;
    else lo = mid;
  }
  return hi;
}

CoverReport besicovitch_cover(const Potential& phi, const std::vector<Vec>& points,
                              const std::function<double(const Vec&)>& radius, double epsilon,
                              const MeasureGrid& test) {
  if (!(epsilon > 0 && epsilon < 0.5)) fail(ErrorKind::precondition, "epsilon must lie in (0, 1/2)");
  std::vector<Vec> order = points;
  std::sort(order.begin(), order.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  CoverReport rep;
  for (const Vec& p : order) {
    bool covered = false;
    for (const Section& s : rep.selected)
      if (contains(phi, s, p)) { covered = true; break; }
    if (!covered) rep.selected.push_back({p, radius(p)});
  }
  rep.covers = true;
  for (const Vec& p : points) {
    bool covered = false;
    for (const Section& s : rep.selected)
      if (contains(phi, s, p)) { covered = true; break; }
    rep.covers = rep.covers && covered;
  }
  long total = 0, in_union = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const Vec p = test.center(k);
    int c = 0;
    for (const Section& s : rep.selected)
      if (contains(phi, {s.center, (1 - epsilon) * s.r}, p)) ++c;
    rep.overlap_max = std::max(rep.overlap_max, c);
    total += c;
    if (c > 0) ++in_union;
  }
  rep.measure_ratio = in_union > 0 ? static_cast<double>(total) / static_cast<double>(in_union) : 0;
  rep.overlap_constant = rep.overlap_max / std::log(1 / epsilon);
  return rep;
}

bool LatticeMask::at(const Vec& p) const {
  int idx[2] = {0, 0};
  for (int a = 0; a < grid.box.dim; ++a) {
    const double t = (p[a] - grid.box.lo[a]) / (grid.box.hi[a] - grid.box.lo[a]);
    if (t < 0 || t >= 1) return false;
    idx[a] = std::min(grid.count[a] - 1, static_cast<int>(t * grid.count[a]));
  }
  return inside[static_cast<std::size_t>(idx[1]) * static_cast<std::size_t>(grid.count[0]) +
                static_cast<std::size_t>(idx[0])] != 0;
}

double LatticeMask::measure() const {
  return static_cast<double>(std::count(inside.begin(), inside.end(), 1)) * grid.cell_measure();
}

CoverReport cz_decompose(const Potential& phi, const LatticeMask& a, double theta) {
  if (!(theta > 0.1 && theta < 0.9)) fail(ErrorKind::precondition, "theta must lie in (0.1, 0.9)");
  if (a.inside.size() != a.grid.size()) fail(ErrorKind::precondition, "mask size mismatch");
  if (std::count(a.inside.begin(), a.inside.end(), 1) == 0) fail(ErrorKind::precondition, "A is empty");
  const int n = phi.dim();
  const double cell = a.grid.cell_measure();
  double hcell = (a.grid.box.hi[0] - a.grid.box.lo[0]) / a.grid.count[0];
  if (n == 2) hcell = std::min(hcell, (a.grid.box.hi[1] - a.grid.box.lo[1]) / a.grid.count[1]);
  const double fine = hcell / 4;

  struct Counts { double in_a, total; };
  auto measure = [&](const Section& s) {
    const Box b = section_bounds(phi, s);
    const MeasureGrid g = MeasureGrid::with_spacing(b, fine);
    Counts c{0, 0};
    const double r2 = s.r * s.r;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec p = g.center(k);
      if (phi.height(s.center, p) < r2) {
        c.total += g.cell_measure();
        if (a.at(p)) c.in_a += g.cell_measure();
      }
    }
    return c;
  };

  CoverReport rep;
  const double tol = 2 * cell;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    if (!a.inside[k]) continue;
    const Vec x = a.grid.center(k);
    bool covered = false;
    for (const Section& s : rep.selected)
      if (contains(phi, s, x)) { covered = true; break; }
    if (covered) continue;

    const auto [mlo, mhi] = phi.hessian_spectrum();
    double lo = 0.5 * fine * std::sqrt(mlo / 2);
    Counts clo = measure({x, lo});
    if (!(clo.total > 0) || clo.in_a < theta * clo.total)
      fail(ErrorKind::refinement_needed, "density theta unreachable at center " + fmt_point(x, n));
    double hi = 2 * lo;
    Counts chi = measure({x, hi});
    while (chi.in_a >= theta * chi.total) {
      lo = hi;
      clo = chi;
      hi *= 2;
      chi = measure({x, hi});
      if (hi > 1e6) fail(ErrorKind::refinement_needed, "density never drops below theta at " + fmt_point(x, n));
    }
    Section best{x, lo};
    Counts cbest = clo;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Counts cm = measure({x, mid});
      if (std::abs(cm.in_a - theta * cm.total) < std::abs(cbest.in_a - theta * cbest.total)) {
        best = {x, mid};
        cbest = cm;
      }
      if (std::abs(cm.in_a - theta * cm.total) <= 0.25 * tol) break;
      if (cm.in_a >= theta * cm.total) lo = mid;
      else hi = mid;
      if (hi - lo < 1e-12 * hi) break;
    }
    if (std::abs(cbest.in_a - theta * cbest.total) > tol)
      fail(ErrorKind::refinement_needed, "density jumps past theta at center " + fmt_point(x, n));
    rep.selected.push_back(best);
    rep.densities.push_back(cbest.in_a / cbest.total);
  }

  rep.covers = true;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    if (!a.inside[k]) continue;
    const Vec x = a.grid.center(k);
    bool covered = false;
    for (const Section& s : rep.selected)
      if (contains(phi, s, x)) { covered = true; break; }
    rep.covers = rep.covers && covered;
  }

  // |A| / |union| on a common fine lattice
  Box ub = a.grid.box;
  for (const Section& s : rep.selected) {
    const Box b = section_bounds(phi, s);
    for (int d = 0; d < n; ++d) {
      ub.lo[d] = std::min(ub.lo[d], b.lo[d]);
      ub.hi[d] = std::max(ub.hi[d], b.hi[d]);
    }
  }
  const MeasureGrid g = MeasureGrid::with_spacing(ub, fine);
  double mu = 0, ma = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec p = g.center(k);
    if (a.at(p)) ma += g.cell_measure();
    for (const Section& s : rep.selected)
      if (contains(phi, s, p)) { mu += g.cell_measure(); break; }
  }
  rep.measure_ratio = mu > 0 ? ma / mu : 0;
  rep.overlap_max = 0;
  return rep;
}

DeformationReport deformation_checks(const Potential& phi, double t, const Vec& y, int samples) {
  if (!(t > 0)) fail(ErrorKind::precondition, "deformation_checks needs t > 0");
  const int n = phi.dim();
  DeformationReport rep;
  rep.delta_hat = std::numeric_limits<double>::infinity();
  const int rays = n == 1 ? 2 : 48;
  const std::vector<Vec> dirs = full_directions(n, rays);
  const double t2 = t * t, q2 = t * t / 16;

  auto fits = [&](const Vec& x, double delta) {
    const double s = delta * t;
    for (const Vec& d : dirs) {
      const double b = boundary_radius(phi, x, s, d);
      for (double f : {0.25, 0.5, 0.75, 1.0}) {
        const Vec p = x + f * b * d;
        const double v = phi.height(y, p);
        if (!(v < t2) || !(v >= q2)) return false;
      }
    }
    return true;
  };

  const std::vector<Vec> sdirs = full_directions(n, std::max(1, samples));
  for (const Vec& d : sdirs) {
    for (double level : {0.5 + 1e-6, 0.625, 0.75 - 1e-6}) {
      const Vec x = y + boundary_radius(phi, y, level * t, d) * d;
      double lo = 0, hi = 1;
      while (hi - lo > 1e-5) {
        const double mid = 0.5 * (lo + hi);
        if (fits(x, mid)) lo = mid;
        else hi = mid;
      }
      rep.probes.push_back(x);
      rep.deltas.push_back(lo);
      rep.delta_hat = std::min(rep.delta_hat, lo);

      // doubling and shell at (x, t/2)
      const int per_axis = n == 1 ? 20000 : 300;
      const double r = 0.5 * t;
      const double v1 = section_volume(phi, {x, r}, per_axis);
      const double vh = section_volume(phi, {x, r / 2}, per_axis);
      rep.doubling_max = std::max(rep.doubling_max, v1 / vh);
      const double e = 0.5;
      rep.shell_worst = std::max(rep.shell_worst, (v1 - vh) / (n * (1 - e) * v1));
    }
  }
  const double cap = (n == 1 ? 2.0 : 4.0) * 1.05;
  rep.doubling_ok = rep.doubling_max >= 1 && rep.doubling_max <= cap;
  rep.shell_ok = rep.shell_worst <= 1.05;
  if (rep.delta_hat < 1e-4) fail(ErrorKind::deformation_failure, "delta_hat below 1e-4");
  return rep;
}

}  // namespace deformk
