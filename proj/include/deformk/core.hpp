#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace deformk {

// Points live in R^2; in 1D the second coordinate is carried as 0.
using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

enum class ErrorKind {
  config,
  spec,
  data,
  precondition,
  geometry,
  catalog_violation,
  unbounded_section,
  engulfing_failure,
  refinement_needed,
  deformation_failure,
  kernel_class_violation,
  ellipticity_failure,
  barrier_failure,
  m_too_small,
  comparison_failure,
  runaway,
  insufficient_range,
  grid_artifact,
  class_violation,
  geometry_pathology,
  experiment_failure,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline Vec point(double x, double y = 0.0) { return Vec(x, y); }

// Determinant of the leading dim x dim block.
inline double det_n(const Mat& m, int dim) {
  return dim == 1 ? m(0, 0) : m.determinant();
}

// Axis-aligned box, closed as a point set for interpolation purposes.
struct Box {
  Vec lo = Vec::Zero();
  Vec hi = Vec::Zero();
  int dim = 1;

  bool contains(const Vec& x) const;         // closed box
  bool contains_open(const Vec& x) const;    // interior
  double diameter() const;
  double volume() const;
  Vec center() const { return 0.5 * (lo + hi); }
};

// Vertex lattice lo + i*h over a box, i = 0..count per axis.
struct Lattice {
  Box box;
  double h = 0.0;
  std::array<int, 2> count{0, 0};  // cells per axis; nodes = count + 1

  static Lattice over(const Box& box, double h);

  int dim() const { return box.dim; }
  int nodes_x() const { return count[0] + 1; }
  int nodes_y() const { return box.dim == 2 ? count[1] + 1 : 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y());
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x()) +
           static_cast<std::size_t>(i);
  }
  Vec node(int i, int j) const;
  Vec node(std::size_t flat) const;
  std::array<int, 2> ij(std::size_t flat) const;
  bool on_boundary(int i, int j) const;
  double cell_measure() const { return box.dim == 2 ? h * h : h; }
};

// Uniform counting lattice (cell centers) used for measuring sets.
struct MeasureGrid {
  Box box;
  std::array<int, 2> count{1, 1};

  static MeasureGrid over(const Box& box, int per_axis);
  static MeasureGrid with_spacing(const Box& box, double h);
  std::size_t size() const;
  Vec center(std::size_t flat) const;
  double cell_measure() const;
};

// Unit directions spread uniformly over the half circle (2D) or {+1} (1D).
std::vector<Vec> half_directions(int dim, int count);
// Full circle (2D) or {+1, -1} (1D).
std::vector<Vec> full_directions(int dim, int count);

}  // namespace deformk
