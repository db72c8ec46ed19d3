#include "deformk/envelope.hpp"
#include "deformk/kernels.hpp"
#include "deformk/mc_oracle.hpp"
#include "deformk/regularity.hpp"
#include "deformk/sections.hpp"
#include "deformk/solver.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace deformk;

namespace {

Vec to_vec(const std::vector<double>& p) {
  if (p.empty() || p.size() > 2) throw py::value_error("points have 1 or 2 coordinates");
  return Vec(p[0], p.size() > 1 ? p[1] : 0.0);
}

Box to_box(const std::vector<std::vector<double>>& b) {
  if (b.size() != 1 && b.size() != 2) throw py::value_error("box is [[lo, hi]] or [[lo, hi], [lo, hi]]");
  Box box;
  box.dim = static_cast<int>(b.size());
  for (std::size_t a = 0; a < b.size(); ++a) {
    if (b[a].size() != 2) throw py::value_error("box axis needs [lo, hi]");
    box.lo[a] = b[a][0];
    box.hi[a] = b[a][1];
  }
  return box;
}

// float -> constant rule, callable f(x: list) -> float otherwise
ExteriorRule to_rule(const py::object& o, double sup, bool continuous) {
  if (py::isinstance<py::float_>(o) || py::isinstance<py::int_>(o)) return ExteriorRule::constant(o.cast<double>());
  auto fn = o.cast<std::function<double(std::vector<double>)>>();
  return {"python", [fn](const Vec& x) { return fn({x[0], x[1]}); }, sup, continuous};
}

Equation to_equation(const std::string& kind, double a) {
  if (kind == "plus") return Equation::plus();
  if (kind == "minus") return Equation::minus();
  if (kind == "linear") return Equation::linear(constant_rule(a));
  throw py::value_error("equation is 'plus', 'minus' or 'linear'");
}

py::dict grid_dict(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const auto count = static_cast<py::ssize_t>(lat.size());
  const auto dsz = static_cast<py::ssize_t>(sizeof(double));
  // explicit strides: the count-only constructor came out with stride 0 here
  py::array_t<double> nodes({count, static_cast<py::ssize_t>(lat.dim())}, {lat.dim() * dsz, dsz});
  py::array_t<double> vals({count}, {dsz});
  auto n = nodes.mutable_unchecked<2>();
  auto v = vals.mutable_unchecked<1>();
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const Vec p = lat.node(k);
    for (int a = 0; a < lat.dim(); ++a) n(k, a) = p[a];
    v(k) = u.values()[k];
  }
  py::dict d;
  d["nodes"] = nodes;
  d["values"] = vals;
  d["h"] = lat.h;
  return d;
}

}  // namespace

PYBIND11_MODULE(_impl, m) {
  m.attr("__version__") = DEFORMK_VERSION;

  py::register_exception<Error>(m, "DeformkError", PyExc_RuntimeError);

  py::class_<Potential>(m, "Potential")
      .def_static("isotropic", &Potential::isotropic, py::arg("dim"))
      .def_static("perturbed", &Potential::perturbed, py::arg("eps"), py::arg("dim"))
      .def_static(
          "from_id", [](const std::string& id, const std::vector<double>& params, int dim) {
            return Potential::from_id(id, params, dim);
          },
          py::arg("id"), py::arg("params") = std::vector<double>{}, py::arg("dim") = 1)
      .def_property_readonly("dim", &Potential::dim)
      .def_property_readonly("id", &Potential::id)
      .def("value", [](const Potential& p, const std::vector<double>& x) { return p.value(to_vec(x)); })
      .def("height", [](const Potential& p, const std::vector<double>& x, const std::vector<double>& y) {
        return p.height(to_vec(x), to_vec(y));
      });

  m.def(
      "quasi_distance",
      [](const Potential& p, const std::vector<double>& x, const std::vector<double>& y) {
        return quasi_distance(p, to_vec(x), to_vec(y));
      },
      py::arg("phi"), py::arg("x"), py::arg("y"));
  m.def(
      "section_volume",
      [](const Potential& p, const std::vector<double>& x, double r, int per_axis) {
        return section_volume(p, {to_vec(x), r}, per_axis);
      },
      py::arg("phi"), py::arg("x"), py::arg("r"), py::arg("per_axis") = 200);
  m.def(
      "engulfing_probe",
      [](const Potential& p, const std::vector<double>& x, double r, int trials) {
        return engulfing_probe(p, to_vec(x), r, trials);
      },
      py::arg("phi"), py::arg("x"), py::arg("r"), py::arg("trials") = 48);
  m.def(
      "fit_ellipsoid",
      [](const Potential& p, const std::vector<double>& x, double r, int rays) {
        const EllipsoidFit e = fit_ellipsoid(p, to_vec(x), r, rays);
        return py::dict(py::arg("inner") = e.inner, py::arg("outer") = e.outer, py::arg("volume") = e.volume,
                        py::arg("iterations") = e.iterations);
      },
      py::arg("phi"), py::arg("x"), py::arg("r"), py::arg("rays") = 64);
  m.def(
      "compute_tau", [](const Potential& p, int samples) { return compute_tau(p, samples).tau; }, py::arg("phi"),
      py::arg("samples") = 64);

  m.def(
      "operator_triple",
      [](const py::object& u, double sup, const std::vector<double>& x, const Potential& phi, double lambda,
         double Lambda, double sigma, double h) {
        const ExteriorRule r = to_rule(u, sup, true);
        FunctionField f(phi.dim(), r.fn, sup, 1e-3);
        const KernelSpec spec{lambda, Lambda, sigma, Selection::table};
        spec.validate();
        const Box b{Vec(-1, phi.dim() == 2 ? -1 : 0), Vec(1, phi.dim() == 2 ? 1 : 0), phi.dim()};
        const OperatorTriple t = operator_triple(
            f, to_vec(x), phi, {{constant_rule(lambda), smooth_rule(lambda, Lambda)}, {constant_rule(Lambda)}}, spec,
            QuadraturePlan::for_grid(b, h));
        return py::make_tuple(t.m_minus, t.isaacs, t.m_plus);
      },
      py::arg("u"), py::arg("sup"), py::arg("x"), py::arg("phi"), py::arg("lam"), py::arg("Lam"), py::arg("sigma"),
      py::arg("h") = 1.0 / 128);

  m.def(
      "solve",
      [](const Potential& phi, const std::vector<std::vector<double>>& box, double h, double lambda, double Lambda,
         double sigma, const std::string& equation, const py::object& source, const py::object& exterior,
         double tolerance) {
        const KernelSpec spec{lambda, Lambda, sigma, Selection::table};
        spec.validate();
        SolveOptions opt;
        opt.tolerance = tolerance;
        const SourceRule f = to_rule(source, 0, true);
        const ExteriorRule g = to_rule(exterior, 0, true);
        const SolveResult r =
            solve(Lattice::over(to_box(box), h), phi, spec, to_equation(equation, lambda), f, g, opt);
        py::dict d = grid_dict(r.u);
        d["converged"] = r.report.converged;
        d["iterations"] = r.report.iterations;
        d["policy_iterations"] = r.report.policy_iterations;
        d["residual"] = r.report.final_residual;
        return d;
      },
      py::arg("phi"), py::arg("box"), py::arg("h"), py::arg("lam"), py::arg("Lam"), py::arg("sigma"),
      py::arg("equation") = "plus", py::arg("source") = 0.0, py::arg("exterior") = 0.0, py::arg("tolerance") = 1e-9);

  m.def(
      "holder_exponent",
      [](const Potential& phi, const std::vector<std::vector<double>>& box, double h, py::array_t<double> values,
         const std::vector<double>& x0, double rho) {
        const Lattice lat = Lattice::over(to_box(box), h);
        if (static_cast<std::size_t>(values.size()) != lat.size()) throw py::value_error("values do not match the lattice");
        std::vector<double> v(values.data(), values.data() + values.size());
        HolderOptions opt;
        opt.rho = rho;
        const HolderReport r = holder_estimate(GridFunction(lat, v, ExteriorRule::constant(0)), to_vec(x0), phi, opt);
        return py::dict(py::arg("alpha") = r.alpha_hat, py::arg("r2") = r.fit.r2, py::arg("radii") = r.radii,
                        py::arg("osc") = r.osc);
      },
      py::arg("phi"), py::arg("box"), py::arg("h"), py::arg("values"), py::arg("x0"), py::arg("rho") = 0.5);

  m.def(
      "exit_payoff",
      [](const Potential& phi, double a, double sigma, const py::object& payoff, const std::vector<double>& x0,
         const std::vector<std::vector<double>>& box, long paths, double eta, std::uint64_t seed) {
        JumpProcessConfig cfg;
        cfg.phi = phi;
        cfg.a = a;
        cfg.sigma = sigma;
        cfg.eta = eta;
        cfg.seed = seed;
        cfg.payoff = to_rule(payoff, 1, false);
        const ExitEstimate e = estimate_exit_payoff(cfg, to_vec(x0), to_box(box), paths);
        return py::dict(py::arg("mean") = e.mean, py::arg("std_error") = e.std_error,
                        py::arg("bias_bound") = e.bias_bound, py::arg("paths") = e.paths);
      },
      py::arg("phi"), py::arg("a"), py::arg("sigma"), py::arg("payoff"), py::arg("x0"), py::arg("box"),
      py::arg("paths") = 10000, py::arg("eta") = 1e-2, py::arg("seed") = 1);
}
