#pragma once

#include <vector>

namespace deformk {

struct GaussRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

// n-point Gauss-Legendre mapped to [0, 1]; cached per n, thread-safe.
const GaussRule& gauss_legendre(int n);

}  // namespace deformk
