#pragma once

#include "deformk/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace deformk {

// Data on R^n \ box, with a declared sup bound.
struct ExteriorRule {
  std::string name;
  std::function<double(const Vec&)> fn;
  double sup = 0;
  bool continuous = true;

  double operator()(const Vec& x) const { return fn(x); }
  static ExteriorRule constant(double c);
};

class Field {
 public:
  virtual ~Field() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual double sup_bound() const = 0;
  // step used by the finite-difference Hessian
  virtual double hessian_step() const { return 1e-3; }
  virtual Mat hessian(const Vec& x) const;

  double operator()(const Vec& x) const { return value(x); }
};

class FunctionField final : public Field {
 public:
  FunctionField(int dim, std::function<double(const Vec&)> fn, double sup, double step = 1e-3)
      : dim_(dim), fn_(std::move(fn)), sup_(sup), step_(step) {}
  int dim() const override { return dim_; }
  double value(const Vec& x) const override { return fn_(x); }
  double sup_bound() const override { return sup_; }
  double hessian_step() const override { return step_; }

 private:
  int dim_;
  std::function<double(const Vec&)> fn_;
  double sup_;
  double step_;
};

// a*u + b*v, pointwise
class CombinedField final : public Field {
 public:
  CombinedField(const Field& u, double a, const Field& v, double b) : u_(u), v_(v), a_(a), b_(b) {}
  int dim() const override { return u_.dim(); }
  double value(const Vec& x) const override { return a_ * u_.value(x) + b_ * v_.value(x); }
  double sup_bound() const override {
    return std::abs(a_) * u_.sup_bound() + std::abs(b_) * v_.sup_bound();
  }
  double hessian_step() const override { return u_.hessian_step(); }
  Mat hessian(const Vec& x) const override { return a_ * u_.hessian(x) + b_ * v_.hessian(x); }

 private:
  const Field& u_;
  const Field& v_;
  double a_, b_;
};

// Lattice values with multilinear interpolation on the closed box and an
// exterior rule outside it.
class GridFunction final : public Field {
 public:
  GridFunction() = default;
  GridFunction(Lattice lattice, std::vector<double> values, ExteriorRule exterior);
  // Sample fn on all nodes; exterior rule attached as given.
  static GridFunction sample(const Lattice& lattice, const std::function<double(const Vec&)>& fn,
                             ExteriorRule exterior);

  int dim() const override { return lattice_.dim(); }
  double value(const Vec& x) const override;
  double sup_bound() const override;
  double hessian_step() const override { return lattice_.h; }

  const Lattice& lattice() const { return lattice_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const ExteriorRule& exterior() const { return exterior_; }
  double at(int i, int j = 0) const { return values_[lattice_.index(i, j)]; }

  // s*u + slope.x + shift, exterior included
  GridFunction transformed(double scale, const Vec& slope, double shift) const;

 private:
  Lattice lattice_;
  std::vector<double> values_;
  ExteriorRule exterior_;
};

}  // namespace deformk
