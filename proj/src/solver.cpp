#include "deformk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace deformk {

std::string Equation::name() const {
  switch (kind) {
    case EquationKind::extremal_plus: return "extremal_plus";
    case EquationKind::extremal_minus: return "extremal_minus";
    case EquationKind::linear: return "linear";
    case EquationKind::isaacs: return "isaacs";
  }
  return "?";
}

PreparedEquation prepare(const DiscreteOperator& op, const Equation& eq, const KernelSpec& bounds) {
  bounds.validate();
  PreparedEquation pe{eq, bounds, {}};
  if (eq.kind == EquationKind::linear || eq.kind == EquationKind::isaacs) {
    if (eq.families.empty() || eq.families[0].empty()) fail(ErrorKind::config, "equation needs kernel rules");
    for (const auto& fam : eq.families) {
      if (fam.empty()) fail(ErrorKind::config, "empty kernel family");
      std::vector<RuleTable> row;
      for (const auto& r : fam) row.push_back(op.tabulate(r, bounds));
      pe.tables.push_back(std::move(row));
    }
  }
  return pe;
}

namespace {

struct Choice {
  std::size_t alpha = 0, beta = 0;
  double value = 0;
};

Choice isaacs_at(const DiscreteOperator& op, const PreparedEquation& pe, std::size_t i) {
  Choice best{0, 0, std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < pe.tables.size(); ++a) {
    double sup = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t b = 0; b < pe.tables[a].size(); ++b) {
      const double v = op.linear(i, pe.tables[a][b]);
      if (v > sup) {
        sup = v;
        arg = b;
      }
    }
    if (sup < best.value) best = {a, arg, sup};
  }
  return best;
}

double eval_at(const DiscreteOperator& op, const PreparedEquation& pe, std::size_t i) {
  switch (pe.eq.kind) {
    case EquationKind::extremal_plus: return op.extremal(i, pe.bounds.lambda, pe.bounds.Lambda, true);
    case EquationKind::extremal_minus: return op.extremal(i, pe.bounds.lambda, pe.bounds.Lambda, false);
    case EquationKind::linear: return op.linear(i, pe.tables[0][0]);
    case EquationKind::isaacs: return isaacs_at(op, pe, i).value;
  }
  return 0;
}

double sup_residual(const std::vector<double>& iu, const std::vector<double>& f) {
  double r = 0;
  for (std::size_t i = 0; i < iu.size(); ++i) r = std::max(r, std::abs(iu[i] - f[i]));
  return r;
}

// One policy-iteration step: freeze multipliers at the current values, solve the linear system.
std::vector<double> policy_step(DiscreteOperator& op, const PreparedEquation& pe, const std::vector<double>& f) {
  const Stencil& st = op.stencil();
  const std::size_t nk = st.incr.size(), nq = st.tail_y.size();
  Eigen::MatrixXd a;
  Eigen::VectorXd rhs;
  const double lo = pe.bounds.lambda, hi = pe.bounds.Lambda;
  switch (pe.eq.kind) {
    case EquationKind::extremal_plus:
    case EquationKind::extremal_minus: {
      const bool plus = pe.eq.kind == EquationKind::extremal_plus;
      auto pm = [&](std::size_t i, std::size_t k) { return (op.pair_delta(i, k) > 0) == plus ? hi : lo; };
      auto tm = [&](std::size_t i, std::size_t q) { return (op.tail_delta(i, q) > 0) == plus ? hi : lo; };
      op.assemble(pm, tm, f, a, rhs);
      break;
    }
    case EquationKind::linear:
    case EquationKind::isaacs: {
      std::vector<const RuleTable*> pick(op.unknowns(), &pe.tables[0][0]);
      if (pe.eq.kind == EquationKind::isaacs)
        for (std::size_t i = 0; i < op.unknowns(); ++i) {
          const Choice c = isaacs_at(op, pe, i);
          pick[i] = &pe.tables[c.alpha][c.beta];
        }
      auto pm = [&](std::size_t i, std::size_t k) { return pick[i]->pair[i * nk + k]; };
      auto tm = [&](std::size_t i, std::size_t q) { return pick[i]->tail[i * nq + q]; };
      op.assemble(pm, tm, f, a, rhs);
      break;
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd sol = lu.solve(rhs);
  for (int k = 0; k < 2; ++k) sol += lu.solve(rhs - a * sol);  // iterative refinement
  return std::vector<double>(sol.data(), sol.data() + sol.size());
}

}  // namespace

std::vector<double> apply_equation(DiscreteOperator& op, const PreparedEquation& pe, const std::vector<double>& u) {
  op.set_values(u);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = eval_at(op, pe, i);
  return out;
}

double cfl_dt(const DiscreteOperator& op, const KernelSpec& bounds) {
  double m = 0;
  for (std::size_t i = 0; i < op.unknowns(); ++i) m = std::max(m, bounds.Lambda * op.mass(i));
  return 1.0 / m;
}

std::vector<double> apply_iteration(DiscreteOperator& op, const PreparedEquation& pe, const std::vector<double>& f,
                                    const std::vector<double>& u, double dt) {
  const std::vector<double> iu = apply_equation(op, pe, u);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + dt * (iu[i] - f[i]);
  return out;
}

std::vector<double> sample_source(const DiscreteOperator& op, const SourceRule& f) {
  std::vector<double> out(op.unknowns());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(op.node(i));
  return out;
}

SolveResult solve(std::shared_ptr<const Stencil> stencil, const KernelSpec& bounds, const Equation& eq,
                  const SourceRule& f, const ExteriorRule& exterior, const SolveOptions& opt) {
  bounds.validate();
  if (!f.continuous) fail(ErrorKind::precondition, "right-hand side '" + f.name + "' is not continuous");
  if (!std::isfinite(exterior.sup)) fail(ErrorKind::precondition, "exterior rule must be bounded");
  if (std::abs(stencil->sigma - bounds.sigma) > 1e-14) fail(ErrorKind::config, "stencil sigma differs from spec");
  DiscreteOperator op(std::move(stencil), exterior);
  const PreparedEquation pe = prepare(op, eq, bounds);
  const std::vector<double> fv = sample_source(op, f);

  SolveResult res;
  SolveReport& rep = res.report;
  rep.cfl_dt = cfl_dt(op, bounds);

  std::vector<double> u(op.unknowns(), 0.0);
  std::vector<double> iu = apply_equation(op, pe, u);
  double r = sup_residual(iu, fv);

  if (opt.warm_start) {
    std::vector<double> cur = u;
    for (int it = 0; it < opt.max_policy_iter && r > opt.tolerance; ++it) {
      op.set_values(cur);
      std::vector<double> next = policy_step(op, pe, fv);
      std::vector<double> inext = apply_equation(op, pe, next);
      const double rn = sup_residual(inext, fv);
      ++rep.policy_iterations;
      double moved = 0;
      for (std::size_t i = 0; i < next.size(); ++i) moved = std::max(moved, std::abs(next[i] - cur[i]));
      if (rn < r) {
        u = next;
        iu = std::move(inext);
        r = rn;
      }
      if (moved == 0) break;
      cur = std::move(next);
    }
    op.set_values(u);
  }

  // explicit monotone sweeps; the residual is nonincreasing under the uniform CFL step
  const int stride = std::max(1, opt.history_stride);
  rep.residual_history.push_back(r);
  while (r > opt.tolerance && rep.iterations < opt.max_iter) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += rep.cfl_dt * (iu[i] - fv[i]);
    iu = apply_equation(op, pe, u);
    r = sup_residual(iu, fv);
    ++rep.iterations;
    if (rep.iterations % stride == 0) rep.residual_history.push_back(r);
  }
  op.set_values(u);
  rep.final_residual = r;
  rep.converged = r <= opt.tolerance;
  res.u = op.to_grid();
  res.unknowns = std::move(u);
  return res;
}

SolveResult solve(const Lattice& lattice, const Potential& phi, const KernelSpec& bounds, const Equation& eq,
                  const SourceRule& f, const ExteriorRule& exterior, const SolveOptions& opt) {
  return solve(build_stencil(lattice, phi, bounds.sigma, opt.scheme), bounds, eq, f, exterior, opt);
}

namespace {

bool same_lattice(const Lattice& a, const Lattice& b) {
  return a.dim() == b.dim() && a.count == b.count && std::abs(a.h - b.h) < 1e-14 &&
         (a.box.lo - b.box.lo).norm() < 1e-12;
}

std::vector<double> unknown_values(const Stencil& st, const GridFunction& g) {
  std::vector<double> out(st.unknowns());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.values()[st.unknown_lattice[i]];
  return out;
}

}  // namespace

std::vector<double> lattice_operator_values(std::shared_ptr<const Stencil> stencil, const GridFunction& u,
                                            const Equation& eq, const KernelSpec& bounds) {
  const Stencil& st = *stencil;
  DiscreteOperator op(stencil, u.exterior());
  const PreparedEquation pe = prepare(op, eq, bounds);
  std::vector<double> uu(st.unknowns());
  for (std::size_t i = 0; i < uu.size(); ++i) uu[i] = u.values()[st.unknown_lattice[i]];
  const std::vector<double> iu = apply_equation(op, pe, uu);
  std::vector<double> out(st.lattice.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < iu.size(); ++i) out[st.unknown_lattice[i]] = iu[i];
  return out;
}

ComparisonReport comparison_check(std::shared_ptr<const Stencil> stencil, const GridFunction& u,
                                  const GridFunction& v, const SourceRule& f, const Equation& eq,
                                  const KernelSpec& bounds, double tolerance, double pre_tolerance) {
  const Stencil& st = *stencil;
  if (!same_lattice(st.lattice, u.lattice()) || !same_lattice(st.lattice, v.lattice()))
    fail(ErrorKind::precondition, "comparison pair must live on the stencil lattice");
  const Lattice& lat = st.lattice;

  // u <= v outside the box: exterior lattice points, boundary limits and tail nodes
  auto ext_check = [&](const Vec& p, double a, double b) {
    if (a > b + pre_tolerance) {
      std::ostringstream os;
      os << "u > v outside the box at (" << p[0] << ", " << p[1] << "): " << a << " > " << b;
      fail(ErrorKind::precondition, os.str());
    }
  };
  const int kx = lat.count[0], ky = lat.dim() == 2 ? lat.count[1] : 0;
  for (int j = -ky; j <= lat.count[1] + ky; ++j) {
    if (lat.dim() == 1 && j != 0) continue;
    for (int i = -kx; i <= lat.count[0] + kx; ++i) {
      const bool inside = i >= 0 && i <= lat.count[0] && (lat.dim() == 1 || (j >= 0 && j <= lat.count[1]));
      if (inside) {
        if (!lat.on_boundary(i, j)) continue;
        ext_check(lat.node(i, j), exterior_at_boundary(u.exterior(), lat, i, j),
                  exterior_at_boundary(v.exterior(), lat, i, j));
      } else {
        const Vec p = lat.box.lo + Vec(i * lat.h, lat.dim() == 2 ? j * lat.h : 0.0);
        ext_check(p, u.exterior()(p), v.exterior()(p));
      }
    }
  }
  for (std::size_t i = 0; i < st.unknowns(); ++i) {
    const Vec x = lat.node(st.unknown_lattice[i]);
    for (const Vec& y : st.tail_y)
      for (const Vec& p : {Vec(x + y), Vec(x - y)}) ext_check(p, u.exterior()(p), v.exterior()(p));
  }

  DiscreteOperator opu(stencil, u.exterior()), opv(stencil, v.exterior());
  const PreparedEquation pu = prepare(opu, eq, bounds), pv = prepare(opv, eq, bounds);
  const std::vector<double> uu = unknown_values(st, u), vv = unknown_values(st, v);
  const std::vector<double> iu = apply_equation(opu, pu, uu), iv = apply_equation(opv, pv, vv);
  const std::vector<double> fv = sample_source(opu, f);

  ComparisonReport rep;
  double fscale = 1;
  for (double x : fv) fscale = std::max(fscale, std::abs(x));
  for (std::size_t i = 0; i < fv.size(); ++i) {
    rep.sub_defect = std::max(rep.sub_defect, fv[i] - iu[i]);
    rep.super_defect = std::max(rep.super_defect, iv[i] - fv[i]);
  }
  if (rep.sub_defect > pre_tolerance * fscale) fail(ErrorKind::precondition, "u is not a discrete subsolution");
  if (rep.super_defect > pre_tolerance * fscale) fail(ErrorKind::precondition, "v is not a discrete supersolution");

  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const double g = u.values()[k] - v.values()[k];
    if (g > rep.max_gap) {
      rep.max_gap = g;
      rep.worst = lat.node(k);
    }
  }

  ExteriorRule diff;
  diff.name = u.exterior().name + "-" + v.exterior().name;
  diff.fn = [a = u.exterior().fn, b = v.exterior().fn](const Vec& x) { return a(x) - b(x); };
  diff.sup = u.exterior().sup + v.exterior().sup;
  DiscreteOperator opd(stencil, diff);
  const PreparedEquation pd = prepare(opd, Equation::plus(), bounds);
  std::vector<double> dd(uu.size());
  for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = uu[i] - vv[i];
  const std::vector<double> md = apply_equation(opd, pd, dd);
  rep.lemma_gap = std::numeric_limits<double>::infinity();
  bool lemma_ok = true;
  for (std::size_t i = 0; i < dd.size(); ++i) {
    const double g = md[i] - (iu[i] - iv[i]);
    rep.lemma_gap = std::min(rep.lemma_gap, g);
    if (g < -1e-10 * (1 + std::abs(iu[i]) + std::abs(iv[i]) + std::abs(md[i]))) lemma_ok = false;
  }
  rep.ok = rep.max_gap <= tolerance && lemma_ok;
  return rep;
}

}  // namespace deformk
