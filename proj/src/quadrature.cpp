#include "deformk/quadrature.hpp"

#include "deformk/core.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <map>
#include <mutex>

namespace deformk {

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  if (n < 1) fail(ErrorKind::spec, "gauss_legendre needs n >= 1");
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    r.nodes[0] = 0.5;
    r.weights[0] = 1.0;
  } else {
    // boost returns the nonnegative zeros in increasing order; mirror them
    const int half = n / 2;
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    for (int k = 0; k < static_cast<int>(zeros.size()); ++k) {
      const double x = zeros[static_cast<std::size_t>(k)];
      const double dp = boost::math::legendre_p_prime<double>(n, x);
      const double w = 1.0 / ((1 - x * x) * dp * dp);
      const auto up = static_cast<std::size_t>(half + k);
      const auto dn = static_cast<std::size_t>(n % 2 == 1 ? half - k : half - 1 - k);
      r.nodes[up] = 0.5 * (1 + x);
      r.nodes[dn] = 0.5 * (1 - x);
      r.weights[up] = w;
      r.weights[dn] = w;
    }
  }
  return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace deformk
