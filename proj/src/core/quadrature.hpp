#pragma once

#include <span>
#include <vector>

namespace osp {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with `n` nodes (1 <= n <= 128). Exact for polynomials of degree 2n-1.
const GaussRule &gauss_legendre(int n);

/// Maps the reference rule onto [a, b] and appends nodes/weights.
void gauss_on_interval(int n, double a, double b, std::vector<double> &nodes,
                       std::vector<double> &weights);

/// Orthonormal Legendre polynomial of degree `j` on [a, b].
double legendre_orthonormal(int j, double x, double a, double b);

} // namespace osp
