#include "deformk/scheme.hpp"

#include "deformk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace deformk {

namespace {

double kernel_bound(const Potential& phi, const Vec& x, const Vec& y, double expo) {
  const double w = phi.symmetric_height(x, y);
  return w > 0 ? std::pow(w, -expo) : 0.0;
}

// int over the cell k*h + [-h/2, h/2]^n of wbar^{-(n+sigma)/2}
double cell_integral(const Potential& phi, const Vec& x, const std::array<int, 2>& k, double h, int dim,
                     double expo, int q) {
  const GaussRule& g = gauss_legendre(q);
  double s = 0;
  if (dim == 1) {
    for (int a = 0; a < q; ++a) {
      const double y = (k[0] - 0.5 + g.nodes[a]) * h;
      s += g.weights[a] * kernel_bound(phi, x, Vec(y, 0), expo);
    }
    return s * h;
  }
  for (int a = 0; a < q; ++a) {
    const double y1 = (k[0] - 0.5 + g.nodes[a]) * h;
    for (int b = 0; b < q; ++b) {
      const double y2 = (k[1] - 0.5 + g.nodes[b]) * h;
      s += g.weights[a] * g.weights[b] * kernel_bound(phi, x, Vec(y1, y2), expo);
    }
  }
  return s * h * h;
}

// (2-sigma) int_{[-3h/2,3h/2]^n} y y^T (y^T B y / 2)^{-(n+sigma)/2} dy
Mat inner_moment(const Mat& b, double h, int dim, double sigma) {
  const double half = 1.5 * h;
  Mat m = Mat::Zero();
  if (dim == 1) {
    m(0, 0) = 2 * std::pow(0.5 * b(0, 0), -(1 + sigma) / 2) * std::pow(half, 2 - sigma);
    return m;
  }
  const GaussRule& g = gauss_legendre(32);
  const double piece = std::numbers::pi / 4;
  for (int p = 0; p < 4; ++p) {
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      const double th = piece * (p + g.nodes[a]);
      const Vec t(std::cos(th), std::sin(th));
      const double r = half / std::max(std::abs(t[0]), std::abs(t[1]));
      const double k = std::pow(0.5 * t.dot(b * t), -(2 + sigma) / 2) * std::pow(r, 2 - sigma);
      m += (2 * piece * g.weights[a] * k) * (t * t.transpose());
    }
  }
  return m;
}

Mat model_hessian(const Potential& phi, const Vec& x) {
  Mat b = phi.hessian(x);
  if (phi.dim() == 1) {
    b(0, 1) = b(1, 0) = 0;
    b(1, 1) = 1;
  }
  return b;
}

struct NodeWeights {
  std::vector<double> pair;
  std::vector<double> tail;
};

NodeWeights weights_at(const Stencil& st, const Potential& phi, const Vec& x, const std::array<int, 2>& half_k,
                       const SchemeOptions& opt) {
  const int dim = st.lattice.dim();
  const double sigma = st.sigma, h = st.lattice.h;
  const double expo = (dim + sigma) / 2;
  NodeWeights nw;
  nw.pair.assign(st.incr.size(), 0.0);

  const Mat mom = inner_moment(model_hessian(phi, x), h, dim, sigma);
  const double h2 = h * h;
  for (std::size_t k = 0; k < st.incr.size(); ++k) {
    const auto& kk = st.incr[k];
    const int linf = std::max(std::abs(kk[0]), std::abs(kk[1]));
    if (linf == 1) {
      const double c = std::abs(mom(0, 1));
      if (kk[1] == 0) nw.pair[k] = std::max(0.0, mom(0, 0) - c) / h2;
      else if (kk[0] == 0) nw.pair[k] = std::max(0.0, mom(1, 1) - c) / h2;
      else if (kk[0] * kk[1] * mom(0, 1) > 0) nw.pair[k] = c / h2;
      continue;
    }
    const int q = linf == 2 ? opt.near_gauss : opt.cell_gauss;
    nw.pair[k] = 2 * (2 - sigma) * cell_integral(phi, x, kk, h, dim, expo, q);
  }

  const GaussRule& gt = gauss_legendre(opt.tail_radial);
  const std::vector<Vec> dirs = half_directions(dim, opt.tail_angular);
  const double ang = dim == 1 ? 1.0 : std::numbers::pi / opt.tail_angular;
  std::size_t qi = 0;
  nw.tail.assign(st.tail_y.size(), 0.0);
  for (const Vec& th : dirs) {
    double r = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a)
      if (std::abs(th[a]) > 1e-15) r = std::min(r, (half_k[a] + 0.5) * h / std::abs(th[a]));
    for (std::size_t b = 0; b < gt.nodes.size(); ++b, ++qi) {
      const double t = gt.nodes[b];
      const double rho = r * std::pow(t, -1 / sigma);
      const Vec y = rho * th;
      const double kb = kernel_bound(phi, x, y, expo) * std::pow(rho, dim + sigma);
      nw.tail[qi] = 2 * (2 - sigma) * ang * gt.weights[b] * kb / (sigma * std::pow(r, sigma));
    }
  }
  return nw;
}

}  // namespace

std::shared_ptr<const Stencil> build_stencil(const Lattice& lattice, const Potential& phi, double sigma,
                                             const SchemeOptions& opt) {
  if (!(sigma > 0 && sigma < 2)) fail(ErrorKind::spec, "sigma must lie in (0, 2)");
  if (lattice.dim() != phi.dim()) fail(ErrorKind::config, "lattice and potential dimensions differ");
  auto st = std::make_shared<Stencil>();
  st->lattice = lattice;
  st->sigma = sigma;
  st->shared = phi.quadratic();
  const int dim = lattice.dim();
  const std::array<int, 2> half_k{lattice.count[0], dim == 2 ? lattice.count[1] : 0};

  for (int k2 = -half_k[1]; k2 <= half_k[1]; ++k2)
    for (int k1 = -half_k[0]; k1 <= half_k[0]; ++k1) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      st->incr.push_back({k1, k2});
      st->y.emplace_back(k1 * lattice.h, k2 * lattice.h);
    }

  // tail node positions; radii depend only on the square Q, not on x
  {
    const GaussRule& gt = gauss_legendre(opt.tail_radial);
    for (const Vec& th : half_directions(dim, opt.tail_angular)) {
      double r = std::numeric_limits<double>::infinity();
      for (int a = 0; a < dim; ++a)
        if (std::abs(th[a]) > 1e-15) r = std::min(r, (half_k[a] + 0.5) * lattice.h / std::abs(th[a]));
      for (double t : gt.nodes) st->tail_y.push_back(r * std::pow(t, -1 / sigma) * th);
    }
  }

  for (std::size_t f = 0; f < lattice.size(); ++f) {
    const auto ij = lattice.ij(f);
    if (!lattice.on_boundary(ij[0], ij[1])) st->unknown_lattice.push_back(f);
  }
  if (st->unknown_lattice.empty()) fail(ErrorKind::config, "lattice has no interior nodes");

  if (st->shared) {
    NodeWeights nw = weights_at(*st, phi, lattice.box.center(), half_k, opt);
    st->weights = std::move(nw.pair);
    st->tail_w = std::move(nw.tail);
  } else {
    const std::size_t n = st->unknowns();
    st->weights.reserve(n * st->incr.size());
    st->tail_w.reserve(n * st->tail_y.size());
    for (std::size_t i = 0; i < n; ++i) {
      NodeWeights nw = weights_at(*st, phi, lattice.node(st->unknown_lattice[i]), half_k, opt);
      st->weights.insert(st->weights.end(), nw.pair.begin(), nw.pair.end());
      st->tail_w.insert(st->tail_w.end(), nw.tail.begin(), nw.tail.end());
    }
  }
  return st;
}

double exterior_at_boundary(const ExteriorRule& ext, const Lattice& lat, int i, int j) {
  Vec nrm = Vec::Zero();
  if (i == 0) nrm[0] -= 1;
  if (i == lat.count[0]) nrm[0] += 1;
  if (lat.dim() == 2) {
    if (j == 0) nrm[1] -= 1;
    if (j == lat.count[1]) nrm[1] += 1;
  }
  const double eps = 1e-9 * std::max(1.0, lat.box.diameter());
  return ext(lat.node(i, j) + eps * nrm);
}

DiscreteOperator::DiscreteOperator(std::shared_ptr<const Stencil> stencil, const ExteriorRule& exterior)
    : st_(std::move(stencil)), ext_(exterior) {
  const Lattice& lat = st_->lattice;
  const int dim = lat.dim();
  pad_lo_ = {lat.count[0], dim == 2 ? lat.count[1] : 0};
  pad_n_ = {3 * lat.count[0] + 1, dim == 2 ? 3 * lat.count[1] + 1 : 1};
  const std::size_t total = static_cast<std::size_t>(pad_n_[0]) * static_cast<std::size_t>(pad_n_[1]);
  padded_.assign(total, 0.0);
  unk_of_pad_.assign(total, -1);

  std::vector<std::ptrdiff_t> unk_of_lat(lat.size(), -1);
  for (std::size_t u = 0; u < st_->unknowns(); ++u) unk_of_lat[st_->unknown_lattice[u]] = static_cast<std::ptrdiff_t>(u);
  pad_of_unk_.assign(st_->unknowns(), 0);

  for (int b = 0; b < pad_n_[1]; ++b)
    for (int a = 0; a < pad_n_[0]; ++a) {
      const int i = a - pad_lo_[0], j = b - pad_lo_[1];
      const std::size_t p = static_cast<std::size_t>(b) * static_cast<std::size_t>(pad_n_[0]) + static_cast<std::size_t>(a);
      const bool inside = i >= 0 && i <= lat.count[0] && (dim == 1 || (j >= 0 && j <= lat.count[1]));
      if (inside) {
        const std::ptrdiff_t u = unk_of_lat[lat.index(i, j)];
        if (u >= 0) {
          unk_of_pad_[p] = u;
          pad_of_unk_[static_cast<std::size_t>(u)] = static_cast<std::ptrdiff_t>(p);
        } else {
          padded_[p] = exterior_at_boundary(ext_, lat, i, j);
        }
      } else {
        padded_[p] = ext_(lat.box.lo + Vec(i * lat.h, dim == 2 ? j * lat.h : 0.0));
      }
    }

  offsets_.reserve(st_->incr.size());
  for (const auto& k : st_->incr) offsets_.push_back(static_cast<std::ptrdiff_t>(k[1]) * pad_n_[0] + k[0]);

  const std::size_t nq = st_->tail_y.size();
  tail_g_.resize(st_->unknowns() * nq);
  for (std::size_t u = 0; u < st_->unknowns(); ++u) {
    const Vec x = node(u);
    for (std::size_t q = 0; q < nq; ++q) tail_g_[u * nq + q] = ext_(x + st_->tail_y[q]) + ext_(x - st_->tail_y[q]);
  }
  u_.assign(st_->unknowns(), 0.0);
}

void DiscreteOperator::set_values(const std::vector<double>& u) {
  if (u.size() != unknowns()) fail(ErrorKind::precondition, "value vector size mismatch");
  u_ = u;
  for (std::size_t i = 0; i < u.size(); ++i) padded_[static_cast<std::size_t>(pad_of_unk_[i])] = u[i];
}

double DiscreteOperator::lookup(std::ptrdiff_t padded) const { return padded_[static_cast<std::size_t>(padded)]; }

double DiscreteOperator::pair_delta(std::size_t i, std::size_t k) const {
  const std::ptrdiff_t p = pad_of_unk_[i];
  return padded_[static_cast<std::size_t>(p + offsets_[k])] + padded_[static_cast<std::size_t>(p - offsets_[k])] -
         2 * u_[i];
}

double DiscreteOperator::tail_delta(std::size_t i, std::size_t q) const {
  return tail_g_[i * st_->tail_y.size() + q] - 2 * u_[i];
}

double DiscreteOperator::extremal(std::size_t i, double lambda, double Lambda, bool plus) const {
  const double up = plus ? Lambda : lambda, dn = plus ? lambda : Lambda;
  double s = 0;
  for (std::size_t k = 0; k < st_->incr.size(); ++k) {
    const double d = pair_delta(i, k);
    s += st_->w(i, k) * d * (d > 0 ? up : dn);
  }
  for (std::size_t q = 0; q < st_->tail_y.size(); ++q) {
    const double d = tail_delta(i, q);
    s += st_->tw(i, q) * d * (d > 0 ? up : dn);
  }
  return s;
}

RuleTable DiscreteOperator::tabulate(const KernelRule& rule, const KernelSpec& bounds) const {
  RuleTable t;
  const std::size_t n = unknowns(), nk = st_->incr.size(), nq = st_->tail_y.size();
  t.pair.resize(n * nk);
  t.tail.resize(n * nq);
  const double slack = 1e-12 * std::max(1.0, bounds.Lambda);
  auto pick = [&](const Vec& x, const Vec& y) {
    const double a = rule.multiplier(x, y), b = rule.multiplier(x, -y);
    if (!(std::min(a, b) >= bounds.lambda - slack && std::max(a, b) <= bounds.Lambda + slack))
      fail(ErrorKind::kernel_class_violation, "rule '" + rule.name + "' leaves [lambda, Lambda]");
    return std::clamp(0.5 * (a + b), bounds.lambda, bounds.Lambda);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = node(i);
    for (std::size_t k = 0; k < nk; ++k) t.pair[i * nk + k] = pick(x, st_->y[k]);
    for (std::size_t q = 0; q < nq; ++q) t.tail[i * nq + q] = pick(x, st_->tail_y[q]);
  }
  return t;
}

double DiscreteOperator::linear(std::size_t i, const RuleTable& t) const {
  const std::size_t nk = st_->incr.size(), nq = st_->tail_y.size();
  double s = 0;
  for (std::size_t k = 0; k < nk; ++k) s += t.pair[i * nk + k] * st_->w(i, k) * pair_delta(i, k);
  for (std::size_t q = 0; q < nq; ++q) s += t.tail[i * nq + q] * st_->tw(i, q) * tail_delta(i, q);
  return s;
}

double DiscreteOperator::mass(std::size_t i) const {
  double s = 0;
  for (std::size_t k = 0; k < st_->incr.size(); ++k) s += st_->w(i, k);
  for (std::size_t q = 0; q < st_->tail_y.size(); ++q) s += st_->tw(i, q);
  return 2 * s;
}

GridFunction DiscreteOperator::to_grid() const {
  const Lattice& lat = st_->lattice;
  std::vector<double> vals(lat.size(), 0.0);
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const auto ij = lat.ij(f);
    vals[f] = exterior_at_boundary(ext_, lat, ij[0], ij[1]);
  }
  for (std::size_t u = 0; u < unknowns(); ++u) vals[st_->unknown_lattice[u]] = u_[u];
  return GridFunction(lat, std::move(vals), ext_);
}

}  // namespace deformk
