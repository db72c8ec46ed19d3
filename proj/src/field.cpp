#include "deformk/field.hpp"

#include <algorithm>
#include <cmath>

namespace deformk {

ExteriorRule ExteriorRule::constant(double c) {
  return {"constant", [c](const Vec&) { return c; }, std::abs(c), true};
}

Mat Field::hessian(const Vec& x) const {
  const double h = hessian_step();
  Mat out = Mat::Zero();
  const double u0 = value(x);
  const Vec e1(h, 0), e2(0, h);
  out(0, 0) = (value(x + e1) + value(x - e1) - 2 * u0) / (h * h);
  if (dim() == 2) {
    out(1, 1) = (value(x + e2) + value(x - e2) - 2 * u0) / (h * h);
    const double c = (value(x + e1 + e2) - value(x + e1 - e2) - value(x - e1 + e2) +
                      value(x - e1 - e2)) / (4 * h * h);
    out(0, 1) = out(1, 0) = c;
  }
  return out;
}

GridFunction::GridFunction(Lattice lattice, std::vector<double> values, ExteriorRule exterior)
    : lattice_(std::move(lattice)), values_(std::move(values)), exterior_(std::move(exterior)) {
  if (values_.size() != lattice_.size()) fail(ErrorKind::data, "grid values do not match lattice size");
  for (double v : values_)
    if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite grid value");
}

GridFunction GridFunction::sample(const Lattice& lattice, const std::function<double(const Vec&)>& fn,
                                  ExteriorRule exterior) {
  std::vector<double> v(lattice.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(lattice.node(k));
  return GridFunction(lattice, std::move(v), std::move(exterior));
}

double GridFunction::value(const Vec& x) const {
  const Box& b = lattice_.box;
  if (!b.contains(x)) return exterior_(x);
  const double h = lattice_.h;
  const double sx = (x[0] - b.lo[0]) / h;
  const int i = std::clamp(static_cast<int>(sx), 0, lattice_.count[0] - 1);
  const double tx = sx - i;
  if (lattice_.dim() == 1) return (1 - tx) * at(i) + tx * at(i + 1);
  const double sy = (x[1] - b.lo[1]) / h;
  const int j = std::clamp(static_cast<int>(sy), 0, lattice_.count[1] - 1);
  const double ty = sy - j;
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
         (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
}

double GridFunction::sup_bound() const {
  double m = exterior_.sup;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GridFunction GridFunction::transformed(double scale, const Vec& slope, double shift) const {
  std::vector<double> v(values_.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = scale * values_[k] + slope.dot(lattice_.node(k)) + shift;
  ExteriorRule ext = exterior_;
  auto base = exterior_.fn;
  ext.fn = [base, scale, slope, shift](const Vec& x) { return scale * base(x) + slope.dot(x) + shift; };
  ext.sup = std::abs(scale) * exterior_.sup + std::abs(shift);
  ext.name = exterior_.name + "+affine";
  return GridFunction(lattice_, std::move(v), std::move(ext));
}

}  // namespace deformk
