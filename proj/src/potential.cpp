#include "deformk/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace deformk {

namespace {

Mat embed(const Mat& a, int dim) {
  Mat m = a;
  if (dim == 1) {
    m(0, 1) = m(1, 0) = 0;
    m(1, 1) = 0;
  }
  return m;
}

void check_dim(int dim) {
  if (dim != 1 && dim != 2) fail(ErrorKind::config, "dimension must be 1 or 2");
}

}  // namespace

Potential Potential::isotropic(int dim) {
  check_dim(dim);
  Potential p;
  p.kind_ = PotentialKind::isotropic;
  p.dim_ = dim;
  p.a_ = embed(Mat::Identity(), dim);
  return p;
}

Potential Potential::anisotropic(const Mat& a, int dim) {
  check_dim(dim);
  Mat s = 0.5 * (a + a.transpose());
  Potential p;
  p.kind_ = PotentialKind::anisotropic;
  p.dim_ = dim;
  if (dim == 1) {
    if (!(s(0, 0) > 0)) fail(ErrorKind::config, "anisotropic: a must be positive");
    p.params_ = {s(0, 0)};
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    const double lo = es.eigenvalues()[0], hi = es.eigenvalues()[1];
    if (!(lo > 0)) fail(ErrorKind::config, "anisotropic: matrix not positive definite");
    if (hi / lo > 100 + 1e-9) fail(ErrorKind::config, "anisotropic: condition number exceeds 100");
    p.params_ = {s(0, 0), s(0, 1), s(1, 1)};
  }
  p.a_ = embed(s, dim);
  return p;
}

Potential Potential::perturbed(double eps, int dim) {
  check_dim(dim);
  if (!(eps >= 0 && eps <= 0.5)) fail(ErrorKind::config, "perturbed: eps must lie in [0, 0.5]");
  Potential p;
  p.kind_ = PotentialKind::perturbed;
  p.dim_ = dim;
  p.a_ = embed(Mat::Identity(), dim);
  p.eps_ = eps;
  p.params_ = {eps};
  return p;
}

Potential Potential::from_id(std::string_view id, const std::vector<double>& params, int dim) {
  if (id == "isotropic") return isotropic(dim);
  if (id == "anisotropic") {
    Mat a = Mat::Identity();
    if (dim == 1 && params.size() == 1) {
      a(0, 0) = params[0];
    } else if (dim == 2 && params.size() == 3) {
      a << params[0], params[1], params[1], params[2];
    } else {
      fail(ErrorKind::config, "anisotropic: expected params [a] (1D) or [a11,a12,a22] (2D)");
    }
    return anisotropic(a, dim);
  }
  if (id == "perturbed") {
    if (params.size() != 1) fail(ErrorKind::config, "perturbed: expected params [eps]");
    return perturbed(params[0], dim);
  }
  fail(ErrorKind::config, "unknown potential id '" + std::string(id) + "'");
}

std::string Potential::id() const {
  switch (kind_) {
    case PotentialKind::isotropic: return "isotropic";
    case PotentialKind::anisotropic: return "anisotropic";
    case PotentialKind::perturbed: return "perturbed";
  }
  return "?";
}

PotentialEval Potential::eval(const Vec& x) const {
  return {value(x), gradient(x), hessian(x)};
}

double Potential::value(const Vec& x) const {
  double v = 0.5 * x.dot(a_ * x);
  if (kind_ == PotentialKind::perturbed) v += eps_ * std::sqrt(1 + x.squaredNorm());
  return v;
}

Vec Potential::gradient(const Vec& x) const {
  Vec g = a_ * x;
  if (kind_ == PotentialKind::perturbed) g += eps_ / std::sqrt(1 + x.squaredNorm()) * x;
  return g;
}

Mat Potential::hessian(const Vec& x) const {
  Mat h = a_;
  if (kind_ == PotentialKind::perturbed) {
    const double s = std::sqrt(1 + x.squaredNorm());
    h += eps_ * (embed(Mat::Identity(), dim_) / s - x * x.transpose() / (s * s * s));
  }
  return h;
}

double Potential::height(const Vec& x, const Vec& y) const {
  const Vec d = y - x;
  double v = 0.5 * d.dot(a_ * d);
  if (kind_ == PotentialKind::perturbed) {
    // s(y) - s(x) - grad s(x).d without cancellation
    const double sx = std::sqrt(1 + x.squaredNorm());
    const double sy = std::sqrt(1 + y.squaredNorm());
    const double xd = x.dot(d), dd = d.squaredNorm();
    const double num = dd * sx - xd * (2 * xd + dd) / (sx + sy);
    v += eps_ * num / (sx * (sx + sy));
  }
  return std::max(v, 0.0);
}

double Potential::symmetric_height(const Vec& x, const Vec& incr) const {
  if (kind_ != PotentialKind::perturbed) return 0.5 * incr.dot(a_ * incr);
  return std::sqrt(height(x, x + incr) * height(x, x - incr));
}

std::pair<double, double> Potential::hessian_spectrum() const {
  double lo, hi;
  if (dim_ == 1) {
    lo = hi = a_(0, 0);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(a_);
    lo = es.eigenvalues()[0];
    hi = es.eigenvalues()[1];
  }
  // eps (I/s - x x^T/s^3) has spectrum within [0, eps]
  if (kind_ == PotentialKind::perturbed) hi += eps_;
  return {lo, hi};
}

MABounds verify_ma_bounds(const Potential& phi, const Box& box, int samples) {
  if (samples < 1) fail(ErrorKind::precondition, "verify_ma_bounds needs samples >= 1");
  MABounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const int ny = phi.dim() == 2 ? samples : 1;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < samples; ++i) {
      Vec x = box.lo;
      const double ti = samples == 1 ? 0.5 : static_cast<double>(i) / (samples - 1);
      const double tj = samples == 1 ? 0.5 : static_cast<double>(j) / (samples - 1);
      x[0] = box.lo[0] + ti * (box.hi[0] - box.lo[0]);
      x[1] = phi.dim() == 2 ? box.lo[1] + tj * (box.hi[1] - box.lo[1]) : 0.0;
      const double g = det_n(phi.hessian(x), phi.dim());
      if (!(g > 0)) {
        std::ostringstream os;
        os << "det D^2 phi = " << g << " at (" << x[0] << ", " << x[1] << ")";
        fail(ErrorKind::catalog_violation, os.str());
      }
      b.g_lo = std::min(b.g_lo, g);
      b.g_hi = std::max(b.g_hi, g);
    }
  }
  return b;
}

}  // namespace deformk
