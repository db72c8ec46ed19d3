#pragma once

#include "deformk/field.hpp"
#include "deformk/kernels.hpp"
#include "deformk/potential.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace deformk {

struct SchemeOptions {
  int cell_gauss = 4;      // tensor Gauss points per axis for far cells
  int near_gauss = 10;     // ... for cells with |k|_inf == 2
  int tail_radial = 24;
  int tail_angular = 32;
};

// Geometry of the monotone lattice scheme: pair weights W(i,k) for
// increments k*h (half space), inner second-difference weights, and tail
// quadrature nodes outside the increment square. Independent of data.
struct Stencil {
  Lattice lattice;
  double sigma = 1;
  bool shared = true;                    // translation invariant weights
  std::vector<std::array<int, 2>> incr;  // k (half space)
  std::vector<Vec> y;                    // k*h
  std::vector<double> weights;           // shared ? [k] : [node*K + k]
  std::vector<Vec> tail_y;               // tail increments
  std::vector<double> tail_w;            // shared ? [q] : [node*Q + q]
  std::vector<std::size_t> unknown_lattice;  // lattice flat index per unknown

  std::size_t unknowns() const { return unknown_lattice.size(); }
  double w(std::size_t node, std::size_t k) const {
    return shared ? weights[k] : weights[node * incr.size() + k];
  }
  double tw(std::size_t node, std::size_t q) const {
    return shared ? tail_w[q] : tail_w[node * tail_y.size() + q];
  }
};

std::shared_ptr<const Stencil> build_stencil(const Lattice& lattice, const Potential& phi, double sigma,
                                             const SchemeOptions& opt = {});

// Per-pair multiplier choice for a linear kernel rule: [node][k] and tails.
struct RuleTable {
  std::vector<double> pair;  // [node*K + k]
  std::vector<double> tail;  // [node*Q + q]
};

class DiscreteOperator {
 public:
  DiscreteOperator(std::shared_ptr<const Stencil> stencil, const ExteriorRule& exterior);

  const Stencil& stencil() const { return *st_; }
  std::size_t unknowns() const { return st_->unknowns(); }
  Vec node(std::size_t i) const { return st_->lattice.node(st_->unknown_lattice[i]); }

  void set_values(const std::vector<double>& u);
  const std::vector<double>& values() const { return u_; }

  // second differences at node i for pair k (current values)
  double pair_delta(std::size_t i, std::size_t k) const;
  double tail_delta(std::size_t i, std::size_t q) const;

  double extremal(std::size_t i, double lambda, double Lambda, bool plus) const;
  RuleTable tabulate(const KernelRule& rule, const KernelSpec& bounds) const;
  double linear(std::size_t i, const RuleTable& t) const;

  // sum of unit-multiplier weights, both signs: d(op)/du_i = -mass * a
  double mass(std::size_t i) const;

  // Linear system A u = rhs for fixed per-pair multipliers a(i, pair) / a(i, tail).
  template <class PairMult, class TailMult>
  void assemble(PairMult&& pm, TailMult&& tm, const std::vector<double>& f, Eigen::MatrixXd& a,
                Eigen::VectorXd& rhs) const;

  // padded lookups
  double lookup(std::ptrdiff_t padded) const;
  std::ptrdiff_t padded_of_unknown(std::size_t i) const { return pad_of_unk_[i]; }
  std::ptrdiff_t offset(std::size_t k) const { return offsets_[k]; }
  std::ptrdiff_t unknown_of_padded(std::ptrdiff_t p) const { return unk_of_pad_[static_cast<std::size_t>(p)]; }

  // the full lattice GridFunction for current values (boundary nodes from exterior limits)
  GridFunction to_grid() const;
  const ExteriorRule& exterior() const { return ext_; }

 private:
  std::shared_ptr<const Stencil> st_;
  ExteriorRule ext_;
  std::array<int, 2> pad_lo_{0, 0};
  std::array<int, 2> pad_n_{1, 1};
  std::vector<double> padded_;           // values on the padded lattice
  std::vector<std::ptrdiff_t> unk_of_pad_;
  std::vector<std::ptrdiff_t> pad_of_unk_;
  std::vector<std::ptrdiff_t> offsets_;
  std::vector<double> tail_g_;           // [node*Q + q] = g(x+y) + g(x-y)
  std::vector<double> u_;
};

// outward-limit exterior value at a lattice node on the box boundary
double exterior_at_boundary(const ExteriorRule& ext, const Lattice& lat, int i, int j);

template <class PairMult, class TailMult>
void DiscreteOperator::assemble(PairMult&& pm, TailMult&& tm, const std::vector<double>& f,
                                Eigen::MatrixXd& a, Eigen::VectorXd& rhs) const {
  const std::size_t n = unknowns();
  const std::size_t nk = st_->incr.size(), nq = st_->tail_y.size();
  a.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  rhs.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double diag = 0, r = f[i];
    const std::ptrdiff_t p = pad_of_unk_[i];
    for (std::size_t k = 0; k < nk; ++k) {
      const double c = pm(i, k) * st_->w(i, k);
      if (c == 0) continue;
      diag -= 2 * c;
      for (std::ptrdiff_t q : {p + offsets_[k], p - offsets_[k]}) {
        const std::ptrdiff_t j = unk_of_pad_[static_cast<std::size_t>(q)];
        if (j >= 0) a(ii, static_cast<Eigen::Index>(j)) += c;
        else r -= c * padded_[static_cast<std::size_t>(q)];
      }
    }
    for (std::size_t q = 0; q < nq; ++q) {
      const double c = tm(i, q) * st_->tw(i, q);
      diag -= 2 * c;
      r -= c * tail_g_[i * nq + q];
    }
    a(ii, ii) += diag;
    rhs[ii] = r;
  }
}

}  // namespace deformk
