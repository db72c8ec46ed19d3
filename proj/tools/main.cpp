// deformk command line: one subcommand per experiment, JSON config in, JSON/CSV out.
#include "config.hpp"

#include "deformk/barrier.hpp"
#include "deformk/envelope.hpp"
#include "deformk/mc_oracle.hpp"
#include "deformk/regularity.hpp"
#include "deformk/scheme.hpp"
#include "deformk/sections.hpp"
#include "deformk/solver.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace deformk;
using namespace deformk::cli;

namespace {

int g_verbosity = 1;

void log(int level, const std::string& msg) {
  if (g_verbosity >= level) std::cerr << "[deformk] " << msg << "\n";
}

struct Output {
  fs::path dir;
  std::string sub;
  std::vector<std::string> files;

  fs::path path(const std::string& suffix) const { return dir / (sub + suffix); }

  void json_file(const std::string& suffix, const json& j) {
    std::ofstream f(path(suffix));
    if (!f) fail(ErrorKind::config, "cannot write " + path(suffix).string());
    f << j.dump(2) << "\n";
    files.push_back(path(suffix).filename().string());
  }

  void csv(const std::string& suffix, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path(suffix));
    if (!f) fail(ErrorKind::config, "cannot write " + path(suffix).string());
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << "\n";
    char buf[64];
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r[i]);
        f << (i ? "," : "") << buf;
      }
      f << "\n";
    }
    files.push_back(path(suffix).filename().string());
  }
};

// outcome of a subcommand: report body plus pass flag
struct Result {
  json report;
  bool ok = true;
};

json vec_json(const Vec& v, int dim) { return dim == 1 ? json::array({v[0]}) : json::array({v[0], v[1]}); }

json fit_json(const LogFit& f) {
  return {{"slope", f.slope}, {"intercept", std::isfinite(f.intercept) ? json(f.intercept) : json(nullptr)},
          {"r2", f.r2}, {"points", f.points}};
}

json solve_json(const SolveReport& r) {
  return {{"iterations", r.iterations},         {"policy_iterations", r.policy_iterations},
          {"final_residual", r.final_residual}, {"cfl_dt", r.cfl_dt},
          {"converged", r.converged}};
}

SolveOptions solve_options(const Config& c) {
  SolveOptions o;
  o.tolerance = c.num("tolerance", o.tolerance);
  o.max_iter = c.integer("max_iter", o.max_iter);
  o.warm_start = c.flag("warm_start", o.warm_start);
  if (!(o.tolerance > 0)) fail(ErrorKind::config, c.field("tolerance") + ": must be positive");
  if (o.max_iter < 0) fail(ErrorKind::config, c.field("max_iter") + ": must be >= 0");
  return o;
}

std::vector<double> resolutions(const Config& c) {
  std::vector<double> hs = c.nums("resolutions");
  if (hs.empty()) fail(ErrorKind::config, c.field("resolutions") + ": empty");
  for (double h : hs)
    if (!(h > 0)) fail(ErrorKind::config, c.field("resolutions") + ": entries must be positive");
  return hs;
}

std::vector<std::vector<double>> grid_rows(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const Vec p = lat.node(k);
    if (lat.dim() == 1) rows.push_back({p[0], u.values()[k]});
    else rows.push_back({p[0], p[1], u.values()[k]});
  }
  return rows;
}

std::vector<std::string> grid_header(int dim, const std::string& name) {
  return dim == 1 ? std::vector<std::string>{"x", name} : std::vector<std::string>{"x", "y", name};
}

// ---- sections ----

Result run_sections(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  const int n = phi.dim();
  std::vector<Vec> pts;
  if (c.has("points")) {
    for (const Config& p : c.list("points")) {
      const std::vector<double> v = p.raw().get<std::vector<double>>();
      if (static_cast<int>(v.size()) != n) fail(ErrorKind::config, c.field("points") + ": wrong dimension");
      pts.emplace_back(v[0], n == 2 ? v[1] : 0.0);
    }
  } else {
    for (double a : {-0.5, 0.0, 0.5})
      for (double b : (n == 2 ? std::vector<double>{-0.5, 0.5} : std::vector<double>{0.0})) pts.emplace_back(a, b);
  }
  const std::vector<double> radii = c.nums("radii", {0.25, 0.5, 1.0});
  const int trials = c.integer("trials", 48), rays = c.integer("rays", 64), per_axis = c.integer("per_axis", 200);
  const double gamma_cap = c.num("gamma_cap", 8), inner_min = c.num("inner_min", 0.2);
  std::vector<std::vector<double>> rows;
  double gmax = 0, dlo = 1e300, dhi = 0, cmin = 1e300, omax = 0;
  for (const Vec& x : pts)
    for (double r : radii) {
      if (!(r > 0)) fail(ErrorKind::config, c.field("radii") + ": must be positive");
      const double g = engulfing_probe(phi, x, r, trials);
      const double v = section_volume(phi, {x, r}, per_axis), v2 = section_volume(phi, {x, r / 2}, per_axis);
      const EllipsoidFit e = fit_ellipsoid(phi, x, r, rays);
      gmax = std::max(gmax, g);
      dlo = std::min(dlo, v / v2);
      dhi = std::max(dhi, v / v2);
      cmin = std::min(cmin, e.inner);
      omax = std::max(omax, e.outer);
      rows.push_back({x[0], x[1], r, v, v / v2, g, e.inner, e.outer});
    }
  out.csv(".csv", {"x", "y", "r", "volume", "doubling", "gamma_hat", "inner", "outer"}, rows);
  const TauReport tau = compute_tau(phi, c.integer("tau_samples", 64));
  Result res;
  const double dcap = std::pow(2.0, n) * 1.05;
  res.ok = gmax <= gamma_cap && dlo >= 1 && dhi <= dcap && cmin >= inner_min && omax <= 1 + 1e-3;
  res.report = {{"gamma_hat_max", gmax},    {"doubling_min", dlo},       {"doubling_max", dhi},
                {"doubling_cap", dcap},     {"inner_min", cmin},         {"outer_max", omax},
                {"tau", tau.tau},           {"tau_sampled_sup", tau.sampled_sup}, {"tau_cell", tau.cell},
                {"gamma_cap", gamma_cap}};
  return res;
}

// ---- operator ----

GridFunction load_field(const Config& c, const Lattice& lat, const ExteriorRule& ext) {
  if (c.has("csv")) {
    std::ifstream f(c.str("csv"));
    if (!f) fail(ErrorKind::config, c.field("csv") + ": cannot open");
    std::vector<double> vals(lat.size(), std::nan(""));
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::vector<double> cols;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
      if (static_cast<int>(cols.size()) != lat.dim() + 1) fail(ErrorKind::config, c.field("csv") + ": bad row");
      const int i = static_cast<int>(std::lround((cols[0] - lat.box.lo[0]) / lat.h));
      const int j = lat.dim() == 2 ? static_cast<int>(std::lround((cols[1] - lat.box.lo[1]) / lat.h)) : 0;
      if (i < 0 || i > lat.count[0] || j < 0 || (lat.dim() == 2 && j > lat.count[1]))
        fail(ErrorKind::config, c.field("csv") + ": point off the lattice");
      vals[lat.index(i, j)] = cols.back();
    }
    for (double v : vals)
      if (!std::isfinite(v)) fail(ErrorKind::config, c.field("csv") + ": lattice not fully covered");
    return GridFunction(lat, vals, ext);
  }
  const std::string id = c.str("id", "gaussian");
  const double w = c.num("width", 0.5), a = c.num("amplitude", 1);
  std::function<double(const Vec&)> fn;
  if (id == "gaussian") fn = [=](const Vec& x) { return a * std::exp(-x.squaredNorm() / (w * w)); };
  else if (id == "cap") fn = [=](const Vec& x) { return a * std::max(0.0, 1 - x.squaredNorm() / (w * w)); };
  else fail(ErrorKind::config, c.field("id") + ": unknown field '" + id + "'");
  return GridFunction::sample(lat, fn, {id, fn, std::abs(a), true});
}

Result run_operator(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  const KernelSpec spec = parse_kernel(c.at("kernel"));
  const Config g = c.at("grid");
  const Box box = parse_box(g, phi.dim());
  const double h = parse_h(g);
  const Lattice lat = Lattice::over(box, h);
  const ExteriorRule ext = c.has("exterior") ? parse_exterior(c.at("exterior")) : ExteriorRule::constant(0);
  const GridFunction u = load_field(c.at("field"), lat, ext);
  std::vector<std::vector<KernelRule>> fam{{constant_rule(spec.lambda), smooth_rule(spec.lambda, spec.Lambda)},
                                           {constant_rule(spec.Lambda)}};
  if (c.has("families")) fam = parse_equation(c.at("families"), spec).families;
  const QuadraturePlan plan = QuadraturePlan::for_grid(box, h);
  const int stride = std::max(1, c.integer("stride", 1));
  std::vector<std::vector<double>> rows;
  double worst = 0;
  bool ordered = true;
  for (int j = 0; j < lat.nodes_y(); j += stride)
    for (int i = 0; i < lat.nodes_x(); i += stride) {
      if (lat.on_boundary(i, j)) continue;
      const Vec x = lat.node(i, j);
      const OperatorTriple t = operator_triple(u, x, phi, fam, spec, plan);
      const double tol = 1e-9 * (std::abs(t.m_minus) + std::abs(t.m_plus) + 1);
      ordered = ordered && t.m_minus <= t.isaacs + tol && t.isaacs <= t.m_plus + tol;
      worst = std::max(worst, std::max(t.m_minus - t.isaacs, t.isaacs - t.m_plus));
      rows.push_back({x[0], x[1], t.m_minus, t.isaacs, t.m_plus});
    }
  out.csv(".csv", {"x", "y", "m_minus", "isaacs", "m_plus"}, rows);
  Result res;
  res.ok = ordered;
  res.report = {{"points", rows.size()}, {"ordered", ordered}, {"order_violation_max", worst}};
  return res;
}

// ---- solve ----

Result run_solve(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  KernelSpec spec = parse_kernel(c.at("kernel"));
  const Config g = c.at("grid");
  const Box box = parse_box(g, phi.dim());
  const Lattice lat = Lattice::over(box, parse_h(g));
  const Equation eq = parse_equation(c.has("equation") ? c.at("equation") : Config(json::object(), "equation"), spec);
  const SourceRule f = c.has("source") ? parse_source(c.at("source")) : ExteriorRule::constant(0);
  const ExteriorRule ext = c.has("exterior") ? parse_exterior(c.at("exterior")) : ExteriorRule::constant(0);
  const SolveOptions opt = solve_options(c);
  const SolveResult r = solve(lat, phi, spec, eq, f, ext, opt);
  log(2, "solve: " + std::to_string(r.report.policy_iterations) + " policy steps, " +
             std::to_string(r.report.iterations) + " sweeps");
  out.csv(".csv", grid_header(phi.dim(), "u"), grid_rows(r.u));
  Result res;
  res.ok = r.report.converged;
  res.report = {{"equation", eq.name()}, {"unknowns", r.unknowns.size()}, {"report", solve_json(r.report)}};
  std::vector<double> hist;
  const int keep = std::max(1, static_cast<int>(r.report.residual_history.size() / 64));
  for (std::size_t i = 0; i < r.report.residual_history.size(); i += keep) hist.push_back(r.report.residual_history[i]);
  res.report["residual_history"] = hist;
  return res;
}

// ---- abp ----

Result run_abp(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  const KernelSpec spec = parse_kernel(c.at("kernel"));
  const Box box = parse_box(c, phi.dim());
  const double fval = c.num("f", 1);
  if (!(fval > 0)) fail(ErrorKind::config, c.field("f") + ": must be positive");
  AbpOptions opt;
  opt.tau = c.num("tau", 0);
  opt.M = c.num("M", 1);
  opt.C0 = c.num("C0", 1);
  opt.cover_eps = c.num("cover_eps", 0.1);
  opt.eps0 = c.num("eps0", 0.05);
  const double factor = c.num("stability_factor", 2);
  const SolveOptions so = solve_options(c);
  json per = json::array();
  std::vector<double> chat;
  Result res;
  AbpReport last;
  GridFunction last_u;
  for (double h : resolutions(c)) {
    auto st = build_stencil(Lattice::over(box, h), phi, spec.sigma);
    const SolveResult r = solve(st, spec, Equation::plus(), ExteriorRule::constant(-fval), ExteriorRule::constant(0), so);
    const auto mplus = lattice_operator_values(st, r.u, Equation::plus(), spec);
    last = abp_experiment(r.u, mplus, ExteriorRule::constant(fval), phi, spec, opt);
    last_u = r.u;
    chat.push_back(last.c_hat);
    res.ok = res.ok && r.report.converged;
    per.push_back({{"h", h},
                   {"solve", solve_json(r.report)},
                   {"trivial", last.trivial},
                   {"sup_u", last.sup_u},
                   {"f_sup", last.f_sup},
                   {"tau", last.tau},
                   {"contacts", last.contacts},
                   {"union_measure", last.union_measure},
                   {"c_hat", last.c_hat},
                   {"gradient_ratio_max", last.gradient_ratio_max},
                   {"cover_size", last.cover_size},
                   {"cover_overlap", last.cover_overlap},
                   {"cover_ok", last.cover_ok},
                   {"detachment_applicable", last.detachment_applicable},
                   {"detachment_holds", last.detachment_holds},
                   {"ring_c0_hat", last.rings.c0_hat},
                   {"ring_all_pass", last.rings.all_pass}});
    res.ok = res.ok && last.cover_ok;
  }
  double ratio = 1;
  for (std::size_t i = 1; i < chat.size(); ++i)
    ratio = std::max(ratio, std::max(chat[i] / chat[i - 1], chat[i - 1] / chat[i]));
  res.ok = res.ok && std::isfinite(ratio) && ratio <= factor;
  const Lattice& lat = last_u.lattice();
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < lat.size(); ++k)
    if (last.envelope.contact[k]) {
      const Vec p = lat.node(k);
      rows.push_back({p[0], p[1], last_u.values()[k], last.envelope.gamma.values()[k]});
    }
  out.csv("_contacts.csv", {"x", "y", "u", "gamma"}, rows);
  res.report = {{"resolutions", per}, {"c_hat_ratio", ratio}, {"stability_factor", factor}};
  return res;
}

// ---- leps ----

Result run_leps(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  KernelSpec spec = parse_kernel(c.at("kernel"));
  const Box box = parse_box(c, phi.dim());
  const Vec z = c.has("z") ? parse_point(c, "z", phi.dim()) : Vec::Zero();
  const SourceRule src = c.has("source") ? parse_source(c.at("source")) : ExteriorRule::constant(0);
  const ExteriorRule ext = c.has("exterior") ? parse_exterior(c.at("exterior")) : ExteriorRule::constant(0);
  LepsOptions opt;
  opt.rho = c.num("rho", opt.rho);
  opt.r = c.num("r", opt.r);
  opt.tau = c.num("tau", opt.tau);
  opt.eps0 = c.num("eps0", opt.eps0);
  opt.min_cells = c.integer("min_cells", opt.min_cells);
  const double r2min = c.num("r2_min", 0.9), stability = c.num("stability", 0.2);
  const SolveOptions so = solve_options(c);
  Result res;
  json per = json::array();
  std::vector<double> eps;
  std::vector<std::vector<double>> rows;
  for (double h : resolutions(c)) {
    const Lattice lat = Lattice::over(box, h);
    auto st = build_stencil(lat, phi, spec.sigma);
    const SolveResult r = solve(st, spec, Equation::minus(), src, ext, so);
    double inf = 1e300;
    for (std::size_t k = 0; k < lat.size(); ++k)
      if (phi.height(z, lat.node(k)) < opt.r * opt.r) inf = std::min(inf, r.u.values()[k]);
    const double scale = c.flag("normalize", true) && inf > 0 ? 1 / inf : 1.0;
    const GridFunction u = r.u.transformed(scale, Vec::Zero(), 0);
    const auto mm = lattice_operator_values(st, u, Equation::minus(), spec);
    const LepsReport rep = l_eps_tail(u, mm, z, phi, opt);
    res.ok = res.ok && r.report.converged && (rep.trivial || (rep.eps_hat > 0 && rep.fit.r2 >= r2min)) &&
             rep.lemma_m > 0 && rep.lemma_eta > 0;
    if (!rep.trivial) eps.push_back(rep.eps_hat);
    for (std::size_t i = 0; i < rep.levels.size(); ++i) rows.push_back({h, rep.levels[i], rep.volumes[i]});
    per.push_back({{"h", h},
                   {"scale", scale},
                   {"solve", solve_json(r.report)},
                   {"trivial", rep.trivial},
                   {"eps_hat", rep.eps_hat},
                   {"c_hat", rep.c_hat},
                   {"fit", fit_json(rep.fit)},
                   {"mminus_max", rep.mminus_max},
                   {"lemma_m", rep.lemma_m},
                   {"lemma_eta", rep.lemma_eta}});
  }
  double drift = 0;
  for (std::size_t i = 1; i < eps.size(); ++i) drift = std::max(drift, std::abs(eps[i] - eps[i - 1]) / eps[i]);
  res.ok = res.ok && drift <= stability;
  out.csv(".csv", {"h", "t", "volume"}, rows);
  res.report = {{"resolutions", per}, {"eps_drift", drift}, {"stability", stability}, {"r2_min", r2min}};
  return res;
}

// ---- harnack ----

Result run_harnack(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  KernelSpec spec;
  spec.lambda = c.at("kernel").num("lambda", 1);
  spec.Lambda = c.at("kernel").num("Lambda", spec.lambda);
  spec.sigma = 1;
  std::vector<double> sigmas = c.nums("sigmas");
  for (double s : sigmas)
    if (!(s > 0 && s < 2)) fail(ErrorKind::config, c.field("sigmas") + ": must lie in (0, 2)");
  if (!(spec.lambda > 0 && spec.Lambda >= spec.lambda)) fail(ErrorKind::config, "kernel: need 0 < lambda <= Lambda");
  const Box box = parse_box(c, phi.dim());
  std::vector<ExteriorRule> data;
  for (const Config& d : c.list("data")) data.push_back(parse_exterior(d));
  HarnackOptions opt;
  opt.rho = c.num("rho", opt.rho);
  opt.C0 = c.num("C0", opt.C0);
  opt.source = c.num("source", opt.source);
  opt.tau = c.num("tau", opt.tau);
  opt.cap = c.num("cap", opt.cap);
  opt.drift = c.num("drift", opt.drift);
  opt.equation = c.str("equation", "plus") == "minus" ? EquationKind::extremal_minus : EquationKind::extremal_plus;
  opt.solve = solve_options(c);
  const HarnackReport r = harnack_experiment(phi, spec, data, sigmas, box, resolutions(c), opt);
  std::vector<std::vector<double>> rows;
  json names = json::array();
  for (const auto& row : r.rows) {
    std::size_t idx = 0;
    while (idx < data.size() && data[idx].name != row.datum) ++idx;
    rows.push_back({static_cast<double>(idx), row.sigma, row.h, row.u0, row.sup_inner, row.ratio, row.mminus_max,
                    row.mplus_min, row.converged ? 1.0 : 0.0});
  }
  for (const auto& d : data) names.push_back(d.name);
  out.csv(".csv", {"datum", "sigma", "h", "u0", "sup_inner", "ratio", "mminus_max", "mplus_min", "converged"}, rows);
  json trend = json::array();
  for (auto [s, v] : r.sigma_trend) trend.push_back({s, v});
  Result res;
  res.ok = r.ok;
  res.report = {{"data", names},         {"constant", r.constant},   {"drift_max", r.drift_max},
                {"sigma_trend", trend},  {"bounded", r.bounded},     {"stable", r.stable},
                {"no_blowup", r.no_blowup}, {"cap", opt.cap},        {"drift_tolerance", opt.drift}};
  return res;
}

// ---- holder ----

HolderOptions holder_options(const Config& c) {
  HolderOptions o;
  o.rho = c.num("rho", o.rho);
  o.C0 = c.num("C0", o.C0);
  o.min_cells = c.integer("min_cells", o.min_cells);
  o.max_pairs_nodes = c.integer("max_pairs_nodes", o.max_pairs_nodes);
  return o;
}

json holder_json(const HolderReport& r) {
  return {{"alpha_hat", r.alpha_hat},        {"fit", fit_json(r.fit)},
          {"alpha_euclid", r.alpha_euclid},  {"fit_euclid", fit_json(r.fit_euclid)},
          {"seminorm_hat", r.seminorm_hat},  {"bound_c", r.bound_c},
          {"sup_u", r.sup_u},                {"radii", r.radii},
          {"osc", r.osc}};
}

Result run_holder(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  const KernelSpec spec = parse_kernel(c.at("kernel"));
  const Box box = parse_box(c, phi.dim());
  const Equation eq = parse_equation(c.has("equation") ? c.at("equation") : Config(json::object(), "equation"), spec);
  const SourceRule f = c.has("source") ? parse_source(c.at("source")) : ExteriorRule::constant(0);
  const ExteriorRule ext = c.has("exterior") ? parse_exterior(c.at("exterior")) : ExteriorRule::constant(0);
  const Vec x0 = c.has("x0") ? parse_point(c, "x0", phi.dim()) : Vec::Zero();
  const HolderOptions ho = holder_options(c);
  const double r2min = c.num("r2_min", 0.9), stability = c.num("stability", 0.2);
  const SolveOptions so = solve_options(c);
  Result res;
  json per = json::array();
  std::vector<double> alphas;
  std::vector<std::vector<double>> rows;
  for (double h : resolutions(c)) {
    const SolveResult r = solve(Lattice::over(box, h), phi, spec, eq, f, ext, so);
    const HolderReport hr = holder_estimate(r.u, x0, phi, ho);
    res.ok = res.ok && r.report.converged && hr.alpha_hat > 0 && hr.fit.r2 >= r2min;
    alphas.push_back(hr.alpha_hat);
    for (std::size_t i = 0; i < hr.radii.size(); ++i) rows.push_back({h, hr.radii[i], hr.osc[i]});
    json j = holder_json(hr);
    j["h"] = h;
    j["solve"] = solve_json(r.report);
    per.push_back(j);
  }
  double drift = 0;
  for (std::size_t i = 1; i < alphas.size(); ++i)
    drift = std::max(drift, std::abs(alphas[i] - alphas[i - 1]) / alphas[i]);
  res.ok = res.ok && drift <= stability;
  out.csv(".csv", {"h", "r", "osc"}, rows);
  res.report = {{"resolutions", per}, {"alpha_drift", drift}, {"stability", stability}, {"r2_min", r2min}};
  return res;
}

// ---- c1alpha ----

json shift_json(const ShiftReport& s) {
  return {{"upsilon_hat", s.upsilon_hat}, {"upsilon_refined", s.upsilon_refined}, {"rel_change", s.rel_change},
          {"per_shift", s.per_shift}, {"stable", s.stable}};
}

Result run_c1alpha(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  KernelSpec spec = parse_kernel(c.at("kernel"));
  const KernelRule rule = parse_kernel_rule(c.at("rule"), spec);
  const Box box = parse_box(c, phi.dim());
  const SourceRule f = c.has("source") ? parse_source(c.at("source")) : ExteriorRule::constant(0);
  const ExteriorRule ext = c.has("exterior") ? parse_exterior(c.at("exterior")) : ExteriorRule::constant(0);
  const Vec x0 = c.has("x0") ? parse_point(c, "x0", phi.dim()) : Vec::Zero();
  C1Options opt;
  opt.varrho = c.num("varrho", opt.varrho);
  opt.threshold_factor = c.num("threshold_factor", opt.threshold_factor);
  opt.drift = c.num("drift", opt.drift);
  opt.holder = holder_options(c);
  opt.solve = solve_options(c);
  const C1Report r = c1alpha_experiment(phi, spec, rule, box, resolutions(c), f, ext, x0, opt);
  std::vector<std::vector<double>> rows;
  json fits = json::array();
  for (std::size_t k = 0; k < r.fits.size(); ++k) {
    for (std::size_t i = 0; i < r.fits[k].radii.size(); ++i) rows.push_back({r.h[k], r.fits[k].radii[i], r.fits[k].osc[i]});
    json j = holder_json(r.fits[k]);
    j["h"] = r.h[k];
    fits.push_back(j);
  }
  out.csv(".csv", {"h", "r", "gradient_osc"}, rows);
  Result res;
  // a refusal is the contract for kernels failing the shift check, not a failed assertion
  res.ok = r.refused || r.ok;
  res.report = {{"rule", rule.name},          {"refused", r.refused},     {"reason", r.reason},
                {"shift", shift_json(r.shift)}, {"baseline", shift_json(r.baseline)},
                {"gamma_hat", r.gamma_hat},   {"drift", r.drift},         {"fits", fits},
                {"asserted", !r.refused && r.ok}};
  return res;
}

// ---- mc-validate ----

Result run_mc(const Config& c, Output& out) {
  const Potential phi = parse_potential(c.at("potential"));
  const Config k = c.at("kernel");
  JumpProcessConfig cfg;
  cfg.phi = phi;
  cfg.a = k.num("a", k.num("lambda", 1));
  cfg.sigma = k.num("sigma");
  if (!(cfg.sigma > 0 && cfg.sigma < 2)) fail(ErrorKind::config, k.field("sigma") + ": must lie in (0, 2)");
  if (!(cfg.a > 0)) fail(ErrorKind::config, k.field("a") + ": must be positive");
  cfg.eta = c.num("eta", cfg.eta);
  if (!(cfg.eta > 0)) fail(ErrorKind::config, c.field("eta") + ": must be positive");
  cfg.payoff = parse_exterior(c.at("payoff"));
  cfg.seed = static_cast<std::uint64_t>(c.integer64("seed", 1));
  cfg.max_jumps = c.integer64("max_jumps", cfg.max_jumps);
  cfg.d2_scale = c.num("d2_scale", cfg.d2_scale);
  const Box box = parse_box(c, phi.dim());
  const Vec x0 = c.has("x0") ? parse_point(c, "x0", phi.dim()) : box.center();
  const long paths = static_cast<long>(c.integer64("paths", 10000));
  const ExitEstimate e = estimate_exit_payoff(cfg, x0, box, paths);
  Result res;
  res.report = {{"mean", e.mean},
                {"std_error", e.std_error},
                {"bias_bound", e.bias_bound},
                {"paths", e.paths},
                {"mean_jumps", e.mean_jumps},
                {"truncated_mass", e.truncated_mass},
                {"small_moment", e.small_moment},
                {"seed", cfg.seed},
                {"eta", cfg.eta}};
  std::vector<std::vector<double>> rows{{x0[0], x0[1], e.mean, e.std_error, e.bias_bound}};
  if (c.has("compare_h")) {
    const double h = c.num("compare_h");
    if (!(h > 0)) fail(ErrorKind::config, c.field("compare_h") + ": must be positive");
    const KernelSpec spec{cfg.a, cfg.a, cfg.sigma, Selection::fixed_midpoint};
    const SolveResult r = solve(Lattice::over(box, h), phi, spec, Equation::linear(constant_rule(cfg.a)),
                                ExteriorRule::constant(0), cfg.payoff, solve_options(c));
    const double grid = r.u.value(x0), gap = std::abs(grid - e.mean), allowed = 3 * e.std_error + e.bias_bound;
    res.ok = r.report.converged && gap <= allowed;
    res.report["grid_value"] = grid;
    res.report["gap"] = gap;
    res.report["allowed"] = allowed;
    res.report["agrees"] = gap <= allowed;
  }
  out.csv(".csv", {"x", "y", "mean", "std_error", "bias_bound"}, rows);
  return res;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json versions() {
  return {{"deformk", DEFORMK_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

bool experiment_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::spec:
    case ErrorKind::data:
    case ErrorKind::precondition:
      return false;
    default:
      return true;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deformk: nonlocal equations with deforming kernels"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "more log output (repeatable)");
  app.add_flag("-q,--quiet", quiet, "errors only");

  const std::map<std::string, std::function<Result(const Config&, Output&)>> subs{
      {"sections", run_sections}, {"operator", run_operator}, {"solve", run_solve},
      {"abp", run_abp},           {"leps", run_leps},         {"harnack", run_harnack},
      {"holder", run_holder},     {"c1alpha", run_c1alpha},   {"mc-validate", run_mc}};
  for (const auto& [name, fn] : subs) {
    CLI::App* s = app.add_subcommand(name, "run the " + name + " experiment");
    s->add_option("config", config_path, "JSON config file")->required();
    s->add_option("-o,--out", out_dir, "output directory (overrides DEFORMK_OUTPUT_DIR and the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  g_verbosity = quiet ? 0 : 1 + verbose;
  const std::string sub = app.get_subcommands().front()->get_name();

  json cfg;
  try {
    std::ifstream f(config_path);
    if (!f) throw std::runtime_error("cannot open " + config_path);
    cfg = json::parse(f);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (out_dir.empty()) {
    if (const char* env = std::getenv("DEFORMK_OUTPUT_DIR"); env && *env) out_dir = env;
    else if (cfg.contains("output") && cfg["output"].is_string()) out_dir = cfg["output"].get<std::string>();
    else out_dir = "deformk_out";
  }
  Output out{out_dir, sub, {}};
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec) {
    std::cerr << "config error: cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return 1;
  }

  const auto t0 = std::chrono::steady_clock::now();
  json report{{"subcommand", sub}, {"config", cfg}};
  int code = 0;
  try {
    Result r = subs.at(sub)(Config(cfg), out);
    report.update(r.report);
    report["status"] = r.ok ? "ok" : "failed";
    code = r.ok ? 0 : 2;
    if (!r.ok) log(1, sub + ": assertion failed, see " + out.path(".json").string());
  } catch (const Error& e) {
    if (!experiment_kind(e.kind())) {
      std::cerr << "config error: " << e.what() << "\n";
      return 1;
    }
    report["status"] = "error";
    report["error_kind"] = to_string(e.kind());
    report["message"] = e.what();
    code = 2;
    log(1, sub + ": " + std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    out.json_file(".json", report);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest{{"subcommand", sub},
                  {"config_hash", "fnv1a64:" + hex64(fnv1a(cfg.dump()))},
                  {"config_path", config_path},
                  {"versions", versions()},
                  {"runtime_seconds", secs},
                  {"finished_utc", utc_now()},
                  {"exit_code", code},
                  {"outputs", out.files}};
    std::ofstream m(out.path(".manifest.json"));
    m << manifest.dump(2) << "\n";
    log(2, "wrote " + out.path(".json").string());
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
