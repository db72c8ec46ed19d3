#include "deformk/core.hpp"

#include <cmath>
#include <numbers>

namespace deformk {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::spec: return "spec";
    case ErrorKind::data: return "data";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::catalog_violation: return "catalog-violation";
    case ErrorKind::unbounded_section: return "unbounded-section";
    case ErrorKind::engulfing_failure: return "engulfing-failure";
    case ErrorKind::refinement_needed: return "refinement-needed";
    case ErrorKind::deformation_failure: return "deformation-failure";
    case ErrorKind::kernel_class_violation: return "kernel-class-violation";
    case ErrorKind::ellipticity_failure: return "ellipticity-failure";
    case ErrorKind::barrier_failure: return "barrier-failure";
    case ErrorKind::m_too_small: return "m-too-small";
    case ErrorKind::comparison_failure: return "comparison-failure";
    case ErrorKind::runaway: return "runaway";
    case ErrorKind::insufficient_range: return "insufficient-range";
    case ErrorKind::grid_artifact: return "grid-artifact";
    case ErrorKind::class_violation: return "class-violation";
    case ErrorKind::geometry_pathology: return "geometry-pathology";
    case ErrorKind::experiment_failure: return "experiment-failure";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

bool Box::contains(const Vec& x) const {
  for (int a = 0; a < dim; ++a)
    if (x[a] < lo[a] || x[a] > hi[a]) return false;
  return true;
}

bool Box::contains_open(const Vec& x) const {
  for (int a = 0; a < dim; ++a)
    if (x[a] <= lo[a] || x[a] >= hi[a]) return false;
  return true;
}

double Box::diameter() const {
  double s = 0;
  for (int a = 0; a < dim; ++a) s += (hi[a] - lo[a]) * (hi[a] - lo[a]);
  return std::sqrt(s);
}

double Box::volume() const {
  double v = 1;
  for (int a = 0; a < dim; ++a) v *= hi[a] - lo[a];
  return v;
}

Lattice Lattice::over(const Box& box, double h) {
  if (!(h > 0)) fail(ErrorKind::config, "lattice spacing h must be positive");
  Lattice l;
  l.box = box;
  l.h = h;
  for (int a = 0; a < box.dim; ++a) {
    const double len = box.hi[a] - box.lo[a];
    if (!(len > 0)) fail(ErrorKind::config, "box has nonpositive extent");
    const double n = len / h;
    const long r = std::lround(n);
    if (r < 2 || std::abs(n - static_cast<double>(r)) > 1e-9 * std::max(1.0, n))
      fail(ErrorKind::config, "box extent is not a multiple of h (need >= 2 cells)");
    l.count[a] = static_cast<int>(r);
  }
  if (box.dim == 1) l.count[1] = 0;
  return l;
}

Vec Lattice::node(int i, int j) const {
  Vec x = box.lo;
  x[0] += i * h;
  if (box.dim == 2) x[1] += j * h;
  else x[1] = 0;
  return x;
}

Vec Lattice::node(std::size_t flat) const {
  const auto p = ij(flat);
  return node(p[0], p[1]);
}

std::array<int, 2> Lattice::ij(std::size_t flat) const {
  const auto nx = static_cast<std::size_t>(nodes_x());
  return {static_cast<int>(flat % nx), static_cast<int>(flat / nx)};
}

bool Lattice::on_boundary(int i, int j) const {
  if (i == 0 || i == count[0]) return true;
  if (box.dim == 2 && (j == 0 || j == count[1])) return true;
  return false;
}

MeasureGrid MeasureGrid::over(const Box& box, int per_axis) {
  MeasureGrid g;
  g.box = box;
  g.count = {per_axis, box.dim == 2 ? per_axis : 1};
  return g;
}

MeasureGrid MeasureGrid::with_spacing(const Box& box, double h) {
  MeasureGrid g;
  g.box = box;
  for (int a = 0; a < 2; ++a) {
    if (a >= box.dim) { g.count[a] = 1; continue; }
    g.count[a] = std::max(1, static_cast<int>(std::ceil((box.hi[a] - box.lo[a]) / h - 1e-9)));
  }
  return g;
}

std::size_t MeasureGrid::size() const {
  return static_cast<std::size_t>(count[0]) * static_cast<std::size_t>(count[1]);
}

Vec MeasureGrid::center(std::size_t flat) const {
  const auto nx = static_cast<std::size_t>(count[0]);
  const double i = static_cast<double>(flat % nx), j = static_cast<double>(flat / nx);
  Vec x;
  x[0] = box.lo[0] + (i + 0.5) * (box.hi[0] - box.lo[0]) / count[0];
  x[1] = box.dim == 2 ? box.lo[1] + (j + 0.5) * (box.hi[1] - box.lo[1]) / count[1] : 0.0;
  return x;
}

double MeasureGrid::cell_measure() const {
  double v = (box.hi[0] - box.lo[0]) / count[0];
  if (box.dim == 2) v *= (box.hi[1] - box.lo[1]) / count[1];
  return v;
}

std::vector<Vec> half_directions(int dim, int count) {
  if (dim == 1) return {Vec(1, 0)};
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double t = std::numbers::pi * (k + 0.5) / count;
    out.emplace_back(std::cos(t), std::sin(t));
  }
  return out;
}

std::vector<Vec> full_directions(int dim, int count) {
  if (dim == 1) return {Vec(1, 0), Vec(-1, 0)};
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double t = 2 * std::numbers::pi * (k + 0.5) / count;
    out.emplace_back(std::cos(t), std::sin(t));
  }
  return out;
}

}  // namespace deformk
