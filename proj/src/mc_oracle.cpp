#include "deformk/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace deformk {

namespace {

double sphere_measure(int dim) { return dim == 1 ? 2.0 : 2 * std::numbers::pi; }

}  // namespace

ExitEstimate estimate_exit_payoff(const JumpProcessConfig& cfg, const Vec& x0, const Box& domain, long paths) {
  if (paths < 100) fail(ErrorKind::precondition, "need at least 100 paths");
  if (!(cfg.eta > 0)) fail(ErrorKind::precondition, "eta must be positive");
  if (!(cfg.sigma > 0 && cfg.sigma < 2)) fail(ErrorKind::spec, "sigma must lie in (0, 2)");
  if (!(cfg.a > 0)) fail(ErrorKind::spec, "kernel multiplier must be positive");
  if (!domain.contains_open(x0)) fail(ErrorKind::precondition, "x0 must lie inside the domain");
  const int dim = cfg.phi.dim();
  const double sigma = cfg.sigma, p = 0.5 * (dim + sigma);
  const auto [mu_lo, mu_hi] = cfg.phi.hessian_spectrum();

  // wbar in [mu_lo/2 |y|^2, mu_hi/2 |y|^2]
  const double r_min = cfg.eta * std::sqrt(2 / mu_hi);
  const double r_lo = cfg.eta * std::sqrt(2 / mu_lo);
  const double sph = sphere_measure(dim);

  ExitEstimate est;
  est.paths = paths;
  est.truncated_mass = (2 - sigma) * cfg.a * std::pow(0.5 * mu_hi, -p) * sph * std::pow(r_lo, -sigma) / sigma;
  est.small_moment = cfg.a * std::pow(0.5 * mu_lo, -p) * sph * std::pow(r_lo, 2 - sigma);

  double sum = 0, sum2 = 0, jumps = 0;
  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (long k = 0; k < paths; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(k & 0xffffffff), static_cast<std::uint32_t>(k >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec x = x0;
    long n = 0;
    while (domain.contains_open(x)) {
      Vec y;
      for (;;) {
        const double r = r_min * std::pow(1.0 - uni(rng), -1 / sigma);
        if (dim == 1) {
          y = Vec(uni(rng) < 0.5 ? -r : r, 0);
        } else {
          const double th = 2 * std::numbers::pi * uni(rng);
          y = Vec(r * std::cos(th), r * std::sin(th));
        }
        const double wb = cfg.phi.symmetric_height(x, y);
        if (wb < cfg.eta * cfg.eta) continue;
        const double acc = std::pow(0.5 * mu_lo * r * r / wb, p);
        if (uni(rng) < acc) break;
      }
      x += y;
      if (++n > cfg.max_jumps) {
        std::ostringstream os;
        os << "path " << k << " exceeded " << cfg.max_jumps << " jumps; eta too small";
        fail(ErrorKind::runaway, os.str());
      }
    }
    const double g = cfg.payoff(x);
    gmin = std::min(gmin, g);
    gmax = std::max(gmax, g);
    sum += g;
    sum2 += g * g;
    jumps += static_cast<double>(n);
  }
  const double np = static_cast<double>(paths);
  est.mean = sum / np;
  const double var = std::max(0.0, (sum2 - np * est.mean * est.mean) / (np - 1));
  est.std_error = std::sqrt(var / np);
  if (gmin == gmax) {
    est.mean = gmin;
    est.std_error = 0;
  }
  est.mean_jumps = jumps / np;
  est.bias_bound = cfg.d2_scale * est.mean_jumps * est.small_moment / est.truncated_mass;
  return est;
}

}  // namespace deformk
