#include "config.hpp"

#include <cmath>
#include <sstream>

namespace deformk::cli {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  fail(ErrorKind::config, field + ": " + what);
}

}  // namespace

Config Config::at(const std::string& key) const {
  if (!has(key)) bad(field(key), "missing");
  return Config(j_.at(key), field(key));
}

double Config::num(const std::string& key) const {
  if (!has(key)) bad(field(key), "missing");
  const json& v = j_.at(key);
  if (!v.is_number()) bad(field(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(field(key), "not finite");
  return d;
}

int Config::integer(const std::string& key, int def) const {
  return static_cast<int>(integer64(key, def));
}

long long Config::integer64(const std::string& key, long long def) const {
  if (!has(key)) return def;
  const json& v = j_.at(key);
  if (!v.is_number_integer()) bad(field(key), "expected an integer");
  return v.get<long long>();
}

std::string Config::str(const std::string& key) const {
  if (!has(key)) bad(field(key), "missing");
  const json& v = j_.at(key);
  if (!v.is_string()) bad(field(key), "expected a string");
  return v.get<std::string>();
}

bool Config::flag(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const json& v = j_.at(key);
  if (!v.is_boolean()) bad(field(key), "expected true/false");
  return v.get<bool>();
}

std::vector<double> Config::nums(const std::string& key) const {
  if (!has(key)) bad(field(key), "missing");
  const json& v = j_.at(key);
  std::vector<double> out;
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) bad(field(key), "expected a number list");
  for (const auto& e : v) {
    if (!e.is_number()) bad(field(key), "expected a number list");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<Config> Config::list(const std::string& key) const {
  if (!has(key)) bad(field(key), "missing");
  const json& v = j_.at(key);
  if (!v.is_array()) bad(field(key), "expected a list");
  std::vector<Config> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], field(key) + "[" + std::to_string(i) + "]");
  return out;
}

Potential parse_potential(const Config& c) {
  const int dim = c.integer("dim", 1);
  if (dim != 1 && dim != 2) bad(c.field("dim"), "must be 1 or 2");
  const std::string id = c.str("id", "isotropic");
  try {
    return Potential::from_id(id, c.nums("params", {}), dim);
  } catch (const Error& e) {
    bad(c.field("id"), e.what());
  }
}

KernelSpec parse_kernel(const Config& c) {
  KernelSpec k;
  k.lambda = c.num("lambda", 1);
  k.Lambda = c.num("Lambda", k.lambda);
  k.sigma = c.num("sigma");
  if (!(k.sigma > 0 && k.sigma < 2)) bad(c.field("sigma"), "must lie in (0, 2)");
  if (!(k.lambda > 0)) bad(c.field("lambda"), "must be positive");
  if (!(k.Lambda >= k.lambda)) bad(c.field("Lambda"), "must be >= lambda");
  return k;
}

Box parse_box(const Config& c, int dim) {
  Box b;
  b.dim = dim;
  const json& v = c.raw();
  auto pair = [&](const json& p, int axis) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      bad(c.field("box"), "expected [lo, hi] per axis");
    b.lo[axis] = p[0].get<double>();
    b.hi[axis] = p[1].get<double>();
    if (!(b.hi[axis] > b.lo[axis])) bad(c.field("box"), "empty interval");
  };
  if (!c.has("box")) bad(c.field("box"), "missing");
  const json& bx = v.at("box");
  if (dim == 1) {
    pair(bx.is_array() && !bx.empty() && bx[0].is_array() ? bx[0] : bx, 0);
  } else {
    if (!bx.is_array() || bx.size() != 2) bad(c.field("box"), "expected [[lo, hi], [lo, hi]] in 2D");
    pair(bx[0], 0);
    pair(bx[1], 1);
  }
  return b;
}

double parse_h(const Config& c) {
  const double h = c.num("h");
  if (!(h > 0)) bad(c.field("h"), "must be positive");
  return h;
}

Vec parse_point(const Config& c, const std::string& key, int dim) {
  const std::vector<double> p = c.nums(key);
  if (static_cast<int>(p.size()) != dim) bad(c.field(key), "expected " + std::to_string(dim) + " coordinates");
  return dim == 1 ? Vec(p[0], 0) : Vec(p[0], p[1]);
}

ExteriorRule parse_exterior(const Config& c) {
  const std::string id = c.str("id");
  const int axis = c.integer("axis", 0);
  if (axis != 0 && axis != 1) bad(c.field("axis"), "must be 0 or 1");
  if (id == "constant") return ExteriorRule::constant(c.num("value", 0));
  if (id == "step") {
    const double t = c.num("threshold", 1), v = c.num("value", 1);
    return {"step", [t, v, axis](const Vec& x) { return x[axis] > t ? v : 0.0; }, std::abs(v), false};
  }
  if (id == "indicator") {
    const double a = c.num("a"), b = c.num("b"), v = c.num("value", 1);
    const bool sym = c.flag("symmetric", false);
    if (!(b > a)) bad(c.field("b"), "must exceed a");
    return {sym ? "indicator_sym" : "indicator",
            [=](const Vec& x) {
              const double s = sym ? std::abs(x[axis]) : x[axis];
              return s >= a && s <= b ? v : 0.0;
            },
            std::abs(v), false};
  }
  if (id == "tent") {
    const double m = c.num("center"), w = c.num("width"), v = c.num("value", 1);
    if (!(w > 0)) bad(c.field("width"), "must be positive");
    return {"tent", [=](const Vec& x) { return v * std::max(0.0, 1 - std::abs(x[axis] - m) / w); }, std::abs(v), true};
  }
  if (id == "wave") {
    const double a = c.num("amplitude", 1), k = c.num("frequency", 1);
    return {"wave", [=](const Vec& x) { return 0.5 * a * (1 + std::sin(k * x[axis])); }, std::abs(a), true};
  }
  bad(c.field("id"), "unknown exterior rule '" + id + "'");
}

SourceRule parse_source(const Config& c) {
  const std::string id = c.str("id");
  const int axis = c.integer("axis", 0);
  if (axis != 0 && axis != 1) bad(c.field("axis"), "must be 0 or 1");
  if (id == "constant") return ExteriorRule::constant(c.num("value", 0));
  if (id == "bump") {
    const double a = c.num("amplitude", 1), w = c.num("width");
    const std::vector<double> ctr = c.nums("center", {0, 0});
    const Vec m(ctr[0], ctr.size() > 1 ? ctr[1] : 0.0);
    if (!(w > 0)) bad(c.field("width"), "must be positive");
    return {"bump", [=](const Vec& x) { return a * std::max(0.0, 1 - (x - m).squaredNorm() / (w * w)); }, std::abs(a),
            true};
  }
  if (id == "cosine") {
    const double a = c.num("amplitude", 1), k = c.num("frequency", 1), s = c.num("slope", 0);
    return {"cosine", [=](const Vec& x) { return a * std::cos(k * x[axis]) + s * x[axis]; }, std::abs(a) + std::abs(s), true};
  }
  if (id == "step") {
    const double t = c.num("threshold", 0), v = c.num("value", 1);
    return {"step", [=](const Vec& x) { return x[axis] > t ? v : 0.0; }, std::abs(v), false};
  }
  bad(c.field("id"), "unknown source rule '" + id + "'");
}

KernelRule parse_kernel_rule(const Config& c, const KernelSpec& spec) {
  const std::string id = c.str("id");
  if (id == "constant") return constant_rule(c.num("value", spec.midpoint()));
  if (id == "smooth") return smooth_rule(spec.lambda, spec.Lambda);
  if (id == "checkerboard") {
    const double cell = c.num("cell", 0.05);
    if (!(cell > 0)) bad(c.field("cell"), "must be positive");
    return checkerboard_rule(spec.lambda, spec.Lambda, cell);
  }
  bad(c.field("id"), "unknown kernel rule '" + id + "'");
}

Equation parse_equation(const Config& c, const KernelSpec& spec) {
  const std::string kind = c.str("kind", "plus");
  if (kind == "plus") return Equation::plus();
  if (kind == "minus") return Equation::minus();
  if (kind == "linear") return Equation::linear(parse_kernel_rule(c.at("rule"), spec));
  if (kind == "isaacs") {
    std::vector<std::vector<KernelRule>> fam;
    for (const Config& row : c.list("families")) {
      std::vector<KernelRule> r;
      const json& arr = row.raw();
      if (!arr.is_array() || arr.empty()) bad(c.field("families"), "each family must be a nonempty list");
      for (std::size_t i = 0; i < arr.size(); ++i) r.push_back(parse_kernel_rule(Config(arr[i], c.field("families")), spec));
      fam.push_back(std::move(r));
    }
    if (fam.empty()) bad(c.field("families"), "empty");
    return Equation::isaacs(std::move(fam));
  }
  bad(c.field("kind"), "unknown equation '" + kind + "'");
}

}  // namespace deformk::cli
