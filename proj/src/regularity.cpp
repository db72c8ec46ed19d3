#include "deformk/regularity.hpp"

#include "deformk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace deformk {

LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::insufficient_range, "log-log fit needs two points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) fail(ErrorKind::precondition, "log-log fit on non-positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0) fail(ErrorKind::insufficient_range, "log-log fit with a single abscissa");
  LogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.points = static_cast<int>(n);
  return f;
}

namespace {

double section_measure(const Potential& phi, const Vec& z, double r) {
  return section_volume(phi, {z, r}, phi.dim() == 2 ? 256 : 4096);
}

// narrowest axis extent of S_r(x) in lattice cells
double cells_spanned(const Potential& phi, const Vec& x, double r, double h) {
  const Box b = section_bounds(phi, {x, r}, 64, 0.0);
  double w = b.hi[0] - b.lo[0];
  if (phi.dim() == 2) w = std::min(w, b.hi[1] - b.lo[1]);
  return w / h;
}

// values per lattice node (one or two components) and a validity mask
struct NodeData {
  std::vector<Vec> v;
  std::vector<char> ok;
  int comps = 1;
};

NodeData scalar_data(const GridFunction& u) {
  NodeData d;
  d.v.resize(u.values().size());
  d.ok.assign(u.values().size(), 1);
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = Vec(u.values()[i], 0.0);
  return d;
}

NodeData gradient_data(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  NodeData d;
  d.comps = lat.dim();
  d.v.assign(lat.size(), Vec::Zero());
  d.ok.assign(lat.size(), 0);
  const double h = lat.h;
  for (int j = 0; j < lat.nodes_y(); ++j)
    for (int i = 0; i < lat.nodes_x(); ++i) {
      if (lat.on_boundary(i, j)) continue;
      Vec g = Vec::Zero();
      g[0] = (u.at(i + 1, j) - u.at(i - 1, j)) / (2 * h);
      if (lat.dim() == 2) g[1] = (u.at(i, j + 1) - u.at(i, j - 1)) / (2 * h);
      const std::size_t k = lat.index(i, j);
      d.v[k] = g;
      d.ok[k] = 1;
    }
  return d;
}

HolderReport holder_fit(const GridFunction& u, const NodeData& data, double sup_u, const Vec& x0,
                        const Potential& phi, const HolderOptions& opt) {
  const Lattice& lat = u.lattice();
  if (!lat.box.contains(x0)) fail(ErrorKind::precondition, "Holder base point outside the box");
  if (opt.rho <= 0) fail(ErrorKind::config, "rho must be positive");
  HolderReport rep;
  rep.sup_u = sup_u;

  auto osc_over = [&](auto&& inside) {
    Vec lo = Vec::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    int count = 0;
    for (std::size_t k = 0; k < lat.size(); ++k) {
      if (!data.ok[k] || !inside(lat.node(k))) continue;
      ++count;
      lo = lo.cwiseMin(data.v[k]);
      hi = hi.cwiseMax(data.v[k]);
    }
    if (count < 2) return -1.0;
    double o = 0;
    for (int c = 0; c < data.comps; ++c) o = std::max(o, hi[c] - lo[c]);
    return o;
  };

  std::vector<double> euclid_r, euclid_osc;
  for (int j = 0; j < 40; ++j) {
    const double r = 0.5 * opt.rho * std::ldexp(1.0, -j);
    if (cells_spanned(phi, x0, r, lat.h) < opt.min_cells) break;
    const double o = osc_over([&](const Vec& y) { return phi.height(x0, y) < r * r; });
    if (o < 0) break;
    if (!rep.osc.empty() && o > rep.osc.back() + opt.monotone_tolerance * (1 + rep.osc.front())) {
      std::ostringstream os;
      os << "oscillation grows from " << rep.osc.back() << " to " << o << " at r=" << r;
      fail(ErrorKind::grid_artifact, os.str());
    }
    rep.radii.push_back(r);
    rep.osc.push_back(o);
    if (2 * r / lat.h >= opt.min_cells) {
      const double oe = osc_over([&](const Vec& y) { return (y - x0).norm() < r; });
      if (oe >= 0) {
        euclid_r.push_back(r);
        euclid_osc.push_back(oe);
      }
    }
  }
  if (rep.radii.size() < 3) {
    std::ostringstream os;
    os << "only " << rep.radii.size() << " radii resolved at h=" << lat.h;
    fail(ErrorKind::insufficient_range, os.str());
  }

  auto fit_positive = [](const std::vector<double>& r, const std::vector<double>& o, LogFit& fit) {
    std::vector<double> rr, oo;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (o[i] > 0) {
        rr.push_back(r[i]);
        oo.push_back(o[i]);
      }
    if (rr.empty()) {
      // constant data: any exponent, report Lipschitz
      fit = {1.0, -std::numeric_limits<double>::infinity(), 1.0, static_cast<int>(r.size())};
      return 1.0;
    }
    if (rr.size() < 3) fail(ErrorKind::insufficient_range, "fewer than 3 nonzero oscillations");
    fit = fit_loglog(rr, oo);
    return fit.slope;
  };
  rep.alpha_hat = fit_positive(rep.radii, rep.osc, rep.fit);
  if (euclid_r.size() >= 3) rep.alpha_euclid = fit_positive(euclid_r, euclid_osc, rep.fit_euclid);

  // seminorm on S_{rho/2}(x0), exponent capped at 1
  const double a = std::clamp(rep.alpha_hat, 1e-6, 1.0);
  const double r2 = 0.25 * opt.rho * opt.rho;
  std::vector<std::size_t> pts;
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (data.ok[k] && phi.height(x0, lat.node(k)) < r2) pts.push_back(k);
  const std::size_t stride = std::max<std::size_t>(1, (pts.size() + opt.max_pairs_nodes - 1) / opt.max_pairs_nodes);
  std::vector<std::size_t> sub;
  for (std::size_t i = 0; i < pts.size(); i += stride) sub.push_back(pts[i]);
  double semi = 0;
  for (std::size_t p : sub)
    for (std::size_t q : sub) {
      if (p == q) continue;
      const double d = quasi_distance(phi, lat.node(p), lat.node(q));
      if (d <= 0) continue;
      semi = std::max(semi, (data.v[p] - data.v[q]).norm() / std::pow(d, a));
    }
  rep.seminorm_hat = semi;
  rep.bound_c = semi / (sup_u + opt.C0 > 0 ? sup_u + opt.C0 : 1.0);
  return rep;
}

double sup_abs(const GridFunction& u) {
  double s = std::abs(u.exterior().sup);
  for (double v : u.values()) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

LepsReport l_eps_tail(const GridFunction& u, const std::vector<double>& mminus, const Vec& z, const Potential& phi,
                      const LepsOptions& opt) {
  const Lattice& lat = u.lattice();
  if (mminus.size() != lat.size()) fail(ErrorKind::config, "M-u must be given per lattice node");
  if (opt.rho <= 0 || opt.r <= 0 || opt.tau <= 0) fail(ErrorKind::config, "radii must be positive");
  LepsReport rep;

  double umin = std::numeric_limits<double>::infinity();
  for (double v : u.values()) umin = std::min(umin, v);
  if (umin < -1e-10) {
    std::ostringstream os;
    os << "u must be nonnegative (min " << umin << ")";
    fail(ErrorKind::precondition, os.str());
  }
  double inf_r = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (phi.height(z, lat.node(k)) < opt.r * opt.r) inf_r = std::min(inf_r, u.values()[k]);
  if (!(inf_r <= 1 + 1e-9)) {
    std::ostringstream os;
    os << "inf of u over S_r(z) is " << inf_r << " > 1";
    fail(ErrorKind::precondition, os.str());
  }
  const double t2 = 4 * opt.tau * opt.tau;
  rep.mminus_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lat.size(); ++k) {
    if (!std::isfinite(mminus[k]) || phi.height(z, lat.node(k)) >= t2) continue;
    rep.mminus_max = std::max(rep.mminus_max, mminus[k]);
  }
  if (rep.mminus_max > opt.eps0) {
    std::ostringstream os;
    os << "M-u reaches " << rep.mminus_max << " > eps0 on S_2tau(z)";
    fail(ErrorKind::precondition, os.str());
  }

  const MeasureGrid g = MeasureGrid::with_spacing(section_bounds(phi, {z, opt.rho}), lat.h / 4);
  const double cell = g.cell_measure();
  const double per_lattice_cell = lat.cell_measure() / cell;
  std::vector<double> inside;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vec p = g.center(c);
    if (phi.height(z, p) < opt.rho * opt.rho) inside.push_back(u.value(p));
  }
  std::vector<double> fit_t, fit_v;
  int nonempty = 0;
  for (int j = 0; j <= opt.max_level; ++j) {
    const double t = std::ldexp(1.0, j);
    const auto n = std::count_if(inside.begin(), inside.end(), [t](double v) { return v > t; });
    rep.levels.push_back(t);
    rep.volumes.push_back(static_cast<double>(n) * cell);
    if (n > 0) ++nonempty;
    if (static_cast<double>(n) >= opt.min_cells * per_lattice_cell) {
      fit_t.push_back(t);
      fit_v.push_back(static_cast<double>(n) * cell);
    }
  }
  if (nonempty == 0) {
    rep.trivial = true;
  } else {
    if (nonempty < 4 || fit_t.size() < 4) {
      std::ostringstream os;
      os << nonempty << " nonempty levels, " << fit_t.size() << " resolved";
      fail(ErrorKind::insufficient_range, os.str());
    }
    rep.fit = fit_loglog(fit_t, fit_v);
    rep.eps_hat = -rep.fit.slope;
    rep.c_hat = std::exp(rep.fit.intercept) / section_measure(phi, z, opt.r);
  }

  // measure of {u <= M} in S_1(z), first dyadic M with positive measure
  const MeasureGrid g1 = MeasureGrid::with_spacing(section_bounds(phi, {z, 1.0}), lat.h / 2);
  std::vector<double> in1;
  for (std::size_t c = 0; c < g1.size(); ++c) {
    const Vec p = g1.center(c);
    if (phi.height(z, p) < 1.0) in1.push_back(u.value(p));
  }
  const double s1 = section_measure(phi, z, 1.0);
  for (int j = 0; j <= 30; ++j) {
    const double m = std::ldexp(1.0, j);
    const auto n = std::count_if(in1.begin(), in1.end(), [m](double v) { return v <= m; });
    if (n > 0) {
      rep.lemma_m = m;
      rep.lemma_eta = static_cast<double>(n) * g1.cell_measure() / s1;
      break;
    }
  }
  return rep;
}

HolderReport holder_estimate(const GridFunction& u, const Vec& x0, const Potential& phi, const HolderOptions& opt) {
  return holder_fit(u, scalar_data(u), sup_abs(u), x0, phi, opt);
}

HolderReport gradient_holder(const GridFunction& u, const Vec& x0, const Potential& phi, const HolderOptions& opt) {
  return holder_fit(u, gradient_data(u), sup_abs(u), x0, phi, opt);
}

double harnack_ratio(const GridFunction& u, const Potential& phi, double rho, double C0, double* u0,
                     double* sup_inner) {
  const Lattice& lat = u.lattice();
  const Vec o = Vec::Zero();
  const double v0 = u.value(o);
  double s = v0;
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (phi.height(o, lat.node(k)) < 0.25 * rho * rho) s = std::max(s, u.values()[k]);
  if (u0) *u0 = v0;
  if (sup_inner) *sup_inner = s;
  const double den = v0 + C0;
  return den > 0 ? s / den : std::numeric_limits<double>::infinity();
}

HarnackReport harnack_experiment(const Potential& phi, const KernelSpec& bounds, const std::vector<ExteriorRule>& data,
                                 const std::vector<double>& sigmas, const Box& box,
                                 const std::vector<double>& resolutions, const HarnackOptions& opt) {
  if (data.empty() || sigmas.empty() || resolutions.size() < 2)
    fail(ErrorKind::config, "harnack needs data, sigmas and two resolutions");
  if (std::abs(opt.source) > opt.C0 + 1e-15) fail(ErrorKind::precondition, "|source| must not exceed C0");
  if (!box.contains(Vec::Zero())) fail(ErrorKind::precondition, "box must contain the origin");
  if (opt.equation != EquationKind::extremal_plus && opt.equation != EquationKind::extremal_minus)
    fail(ErrorKind::config, "harnack runs on an extremal equation");
  for (const auto& d : data)
    if (d.sup < 0) fail(ErrorKind::precondition, "exterior datum '" + d.name + "' must be nonnegative");

  HarnackReport rep;
  const Equation eq = opt.equation == EquationKind::extremal_plus ? Equation::plus() : Equation::minus();
  const SourceRule f = ExteriorRule::constant(opt.source);
  const double t2 = 4 * opt.tau * opt.tau;
  bool converged = true;
  for (double s : sigmas) {
    KernelSpec spec = bounds;
    spec.sigma = s;
    spec.validate();
    double trend = 0;
    for (double h : resolutions) {
      const Lattice lat = Lattice::over(box, h);
      auto st = build_stencil(lat, phi, s, opt.solve.scheme);
      for (const auto& d : data) {
        SolveResult res = solve(st, spec, eq, f, d, opt.solve);
        HarnackRow row;
        row.datum = d.name;
        row.sigma = s;
        row.h = h;
        row.converged = res.report.converged;
        converged = converged && row.converged;
        double umin = std::numeric_limits<double>::infinity();
        for (double v : res.u.values()) umin = std::min(umin, v);
        if (umin < -1e-8) {
          std::ostringstream os;
          os << "solution for '" << d.name << "' goes negative (" << umin << ")";
          fail(ErrorKind::precondition, os.str());
        }
        const auto mm = lattice_operator_values(st, res.u, Equation::minus(), spec);
        const auto mp = lattice_operator_values(st, res.u, Equation::plus(), spec);
        row.mminus_max = -std::numeric_limits<double>::infinity();
        row.mplus_min = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < lat.size(); ++k) {
          if (!std::isfinite(mm[k]) || phi.height(Vec::Zero(), lat.node(k)) >= t2) continue;
          row.mminus_max = std::max(row.mminus_max, mm[k]);
          row.mplus_min = std::min(row.mplus_min, mp[k]);
        }
        const double slack = 1e-6;
        if (row.mminus_max > opt.C0 + slack || row.mplus_min < -opt.C0 - slack) {
          std::ostringstream os;
          os << "solution leaves the class: M-u max " << row.mminus_max << ", M+u min " << row.mplus_min;
          fail(ErrorKind::precondition, os.str());
        }
        row.ratio = harnack_ratio(res.u, phi, opt.rho, opt.C0, &row.u0, &row.sup_inner);
        trend = std::max(trend, row.ratio);
        rep.rows.push_back(row);
      }
    }
    rep.sigma_trend.emplace_back(s, trend);
  }

  for (const auto& r : rep.rows) rep.constant = std::max(rep.constant, r.ratio);
  // drift between consecutive resolutions, same datum and sigma
  std::map<std::pair<std::string, double>, std::vector<const HarnackRow*>> groups;
  for (const auto& r : rep.rows) groups[{r.datum, r.sigma}].push_back(&r);
  for (const auto& [key, g] : groups)
    for (std::size_t i = 1; i < g.size(); ++i) {
      const double a = g[i - 1]->ratio, b = g[i]->ratio;
      rep.drift_max = std::max(rep.drift_max, std::abs(b - a) / std::max(std::abs(b), 1e-300));
    }
  rep.bounded = std::isfinite(rep.constant) && rep.constant <= opt.cap;
  rep.stable = rep.drift_max <= opt.drift;
  bool increasing = rep.sigma_trend.size() >= 2;
  for (std::size_t i = 1; i < rep.sigma_trend.size(); ++i)
    increasing = increasing && rep.sigma_trend[i].second > rep.sigma_trend[i - 1].second;
  rep.no_blowup = !(increasing && rep.sigma_trend.back().second > 1.5 * rep.sigma_trend.front().second);
  rep.ok = rep.bounded && rep.stable && rep.no_blowup && converged;
  return rep;
}

namespace {

// int over {wbar >= varrho^2} of |K(y) - K(y - h)| / |h|, ray by ray
double shift_integral(const KernelRule& rule, const Potential& phi, const Vec& x, const KernelSpec& spec,
                      double varrho, const Vec& h, int panels, int angular) {
  const int n = phi.dim();
  const double p = 0.5 * (n + spec.sigma);
  auto kern = [&](const Vec& y) {
    const double w = phi.symmetric_height(x, y);
    return (2 - spec.sigma) * rule.multiplier(x, y) / std::pow(w, p);
  };
  std::vector<Vec> dirs;
  double ang_w = 1;
  if (n == 1) {
    dirs = {Vec(1, 0), Vec(-1, 0)};
  } else {
    for (int a = 0; a < angular; ++a) {
      const double th = 2 * M_PI * (a + 0.5) / angular;
      dirs.emplace_back(std::cos(th), std::sin(th));
    }
    ang_w = 2 * M_PI / angular;
  }
  const GaussRule& gl = gauss_legendre(8);
  const double q = spec.sigma + 1;  // decay of the integrand in rho
  const double hn = h.norm();
  double total = 0;
  for (const Vec& d : dirs) {
    // wbar increases along rays; bracket and bisect the section boundary
    double lo = 0, hi = 1;
    while (phi.symmetric_height(x, hi * d) < varrho * varrho) hi *= 2;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi.symmetric_height(x, mid * d) < varrho * varrho ? lo : hi) = mid;
    }
    const double R = hi;
    double ray = 0;
    for (int k = 0; k < panels; ++k)
      for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
        const double t = (k + gl.nodes[g]) / panels;
        const double rho = R * std::pow(t, -1.0 / q);
        const double jac = (R / q) * std::pow(t, -1.0 / q - 1);
        const Vec y = rho * d;
        const double diff = std::abs(kern(y) - kern(y - h)) / hn;
        ray += gl.weights[g] / panels * diff * jac * (n == 2 ? rho : 1.0);
      }
    total += ang_w * ray;
  }
  return total;
}

}  // namespace

ShiftReport kernel_shift_check(const KernelRule& rule, const Potential& phi, const Vec& x, const KernelSpec& spec,
                               double varrho, const std::vector<Vec>& shifts, const ShiftOptions& opt) {
  spec.validate();
  if (varrho <= 0) fail(ErrorKind::config, "varrho must be positive");
  if (shifts.empty()) fail(ErrorKind::config, "no shifts given");
  if (opt.panels < 1 || opt.angular < 4) fail(ErrorKind::config, "shift quadrature too coarse");
  ShiftReport rep;
  for (const Vec& h : shifts) {
    const double hn = h.norm();
    if (hn == 0) fail(ErrorKind::precondition, "shift must be nonzero");
    if (hn >= 0.5 * varrho) fail(ErrorKind::precondition, "shift must satisfy |h| < varrho/2");
    const double a = shift_integral(rule, phi, x, spec, varrho, h, opt.panels, opt.angular);
    const double b = shift_integral(rule, phi, x, spec, varrho, h, 2 * opt.panels, 2 * opt.angular);
    if (!std::isfinite(a) || !std::isfinite(b))
      fail(ErrorKind::class_violation, "shift integral is not finite for rule '" + rule.name + "'");
    rep.per_shift.push_back(b);
    rep.upsilon_hat = std::max(rep.upsilon_hat, a);
    rep.upsilon_refined = std::max(rep.upsilon_refined, b);
    rep.rel_change = std::max(rep.rel_change, std::abs(b - a) / std::max(b, 1e-300));
  }
  rep.stable = rep.rel_change <= opt.stability;
  return rep;
}

C1Report c1alpha_experiment(const Potential& phi, const KernelSpec& spec, const KernelRule& rule, const Box& box,
                            const std::vector<double>& resolutions, const SourceRule& f, const ExteriorRule& exterior,
                            const Vec& x0, const C1Options& opt) {
  if (resolutions.size() < 2) fail(ErrorKind::config, "c1alpha needs two resolutions");
  C1Report rep;
  std::vector<Vec> shifts = opt.shifts;
  if (shifts.empty()) {
    for (double s : {1.0 / 16, 1.0 / 8, 1.0 / 4}) {
      shifts.push_back(Vec(s * opt.varrho, 0));
      if (phi.dim() == 2) shifts.push_back(Vec(s * opt.varrho, s * opt.varrho) / std::sqrt(2.0));
    }
  }
  rep.shift = kernel_shift_check(rule, phi, x0, spec, opt.varrho, shifts);
  rep.baseline = kernel_shift_check(constant_rule(spec.midpoint()), phi, x0, spec, opt.varrho, shifts);
  if (!rep.shift.stable) {
    std::ostringstream os;
    os << "shift integral not stable under refinement (change " << rep.shift.rel_change << ")";
    rep.refused = true;
    rep.reason = os.str();
    return rep;
  }
  if (rep.shift.upsilon_refined > opt.threshold_factor * rep.baseline.upsilon_refined) {
    std::ostringstream os;
    os << "shift integral " << rep.shift.upsilon_refined << " exceeds " << opt.threshold_factor
       << " x smooth baseline " << rep.baseline.upsilon_refined;
    rep.refused = true;
    rep.reason = os.str();
    return rep;
  }
  const Equation eq = Equation::linear(rule);
  std::vector<double> hs = resolutions;
  std::sort(hs.begin(), hs.end(), std::greater<double>());
  bool all_converged = true;
  for (double h : hs) {
    SolveResult res = solve(Lattice::over(box, h), phi, spec, eq, f, exterior, opt.solve);
    all_converged = all_converged && res.report.converged;
    rep.h.push_back(h);
    rep.fits.push_back(gradient_holder(res.u, x0, phi, opt.holder));
  }
  rep.gamma_hat = rep.fits.back().alpha_hat;
  const double prev = rep.fits[rep.fits.size() - 2].alpha_hat;
  rep.drift = std::abs(rep.gamma_hat - prev) / std::max(std::abs(rep.gamma_hat), 1e-300);
  rep.ok = all_converged && rep.gamma_hat > 0 && rep.drift <= opt.drift;
  return rep;
}

}  // namespace deformk
