#pragma once

#include "deformk/core.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace deformk {

enum class PotentialKind { isotropic, anisotropic, perturbed };

struct PotentialEval {
  double value = 0;
  Vec gradient = Vec::Zero();
  Mat hessian = Mat::Zero();
};

// Catalog potential phi; the convex function driving section geometry.
//   isotropic    1/2 |x|^2
//   anisotropic  1/2 x^T A x        (A SPD, cond <= 100)
//   perturbed    1/2 |x|^2 + eps sqrt(1+|x|^2),  0 <= eps <= 0.5
class Potential {
 public:
  static Potential isotropic(int dim);
  static Potential anisotropic(const Mat& a, int dim);
  static Potential perturbed(double eps, int dim);
  // ids: "isotropic", "anisotropic" (params a11,a12,a22 | a in 1D), "perturbed" (eps)
  static Potential from_id(std::string_view id, const std::vector<double>& params, int dim);

  PotentialKind kind() const { return kind_; }
  std::string id() const;
  const std::vector<double>& params() const { return params_; }
  int dim() const { return dim_; }
  bool quadratic() const { return kind_ != PotentialKind::perturbed; }
  const Mat& matrix() const { return a_; }  // quadratic part

  PotentialEval eval(const Vec& x) const;
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  // v_x(y) = phi(y) - phi(x) - grad phi(x).(y-x), clamped at 0
  double height(const Vec& x, const Vec& y) const;
  // w_x(y) = v_x(x+y)
  double shifted_height(const Vec& x, const Vec& incr) const { return height(x, x + incr); }
  // sqrt(w_x(y) w_x(-y))
  double symmetric_height(const Vec& x, const Vec& incr) const;

  // Global bounds on the Hessian spectrum (valid on all of R^n).
  std::pair<double, double> hessian_spectrum() const;

 private:
  PotentialKind kind_ = PotentialKind::isotropic;
  int dim_ = 1;
  Mat a_ = Mat::Identity();
  double eps_ = 0;
  std::vector<double> params_;
};

struct MABounds {
  double g_lo = 0;
  double g_hi = 0;
};

MABounds verify_ma_bounds(const Potential& phi, const Box& box, int samples);

}  // namespace deformk
