#pragma once

#include "deformk/core.hpp"
#include "deformk/potential.hpp"

#include <functional>
#include <vector>

namespace deformk {

// S_r(x) = {y : v_x(y) < r^2}
struct Section {
  Vec center = Vec::Zero();
  double r = 1;
};

bool contains(const Potential& phi, const Section& s, const Vec& y);

// t* > 0 with v_x(x + t* d) = r^2
double boundary_radius(const Potential& phi, const Vec& x, double r, const Vec& direction);

// d(x,y) = inf{r : y in S_r(x)} = sqrt(v_x(y))
double quasi_distance(const Potential& phi, const Vec& x, const Vec& y);

// Bounding box of a section from boundary rays, padded.
Box section_bounds(const Potential& phi, const Section& s, int rays = 64, double pad = 0.05);

// Lattice count of |S_r(x)| with per_axis cells across the bounding box.
double section_volume(const Potential& phi, const Section& s, int per_axis);

struct AffineMap {
  Mat linear = Mat::Identity();
  Vec offset = Vec::Zero();
  int dim = 1;

  Vec apply(const Vec& p) const { return linear * p + offset; }
  Vec inverse_apply(const Vec& q) const;
  double det() const { return det_n(linear, dim); }
};

struct EllipsoidFit {
  AffineMap map;        // T: section -> unit ball
  double inner = 0;     // c with B_c in T(S)
  double outer = 0;     // max |T z| over fresh rays (<= 1 + 1e-3)
  double volume = 0;    // |T^{-1}(B_1)|
  int iterations = 0;
};

EllipsoidFit fit_ellipsoid(const Potential& phi, const Vec& x, double r, int ray_count);

double engulfing_probe(const Potential& phi, const Vec& x, double r, int trial_count);

struct CoverReport {
  std::vector<Section> selected;
  int overlap_max = 0;
  double measure_ratio = 0;
  double overlap_constant = 0;     // M_hat = overlap_max / log(1/eps) (besicovitch)
  std::vector<double> densities;   // |A cap S| / |S| per section (cz)
  bool covers = false;
};

// Greedy lexicographic subcover; overlap of {S_{(1-eps) r_k}(x_k)} counted on test.
CoverReport besicovitch_cover(const Potential& phi, const std::vector<Vec>& points,
                              const std::function<double(const Vec&)>& radius, double epsilon,
                              const MeasureGrid& test);

// Open set A given as a mask over the cells of grid.
struct LatticeMask {
  MeasureGrid grid;
  std::vector<char> inside;

  bool at(const Vec& p) const;
  double measure() const;
};

CoverReport cz_decompose(const Potential& phi, const LatticeMask& a, double theta);

struct DeformationReport {
  double delta_hat = 0;
  std::vector<Vec> probes;
  std::vector<double> deltas;
  double doubling_max = 0;  // max |S_r| / |S_{r/2}|
  double shell_worst = 0;   // max (|S_r| - |S_{er}|) / (n (1-e) |S_r|)
  bool doubling_ok = false;
  bool shell_ok = false;
};

DeformationReport deformation_checks(const Potential& phi, double t, const Vec& y, int samples);

}  // namespace deformk
