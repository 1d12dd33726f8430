#pragma once

#include "core/bspline.hpp"
#include "core/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <vector>

namespace test {

/// Partition of [a, b] with `atoms` atoms whose lengths vary by up to a factor ~ spread.
inline osp::Partition1D random_partition(std::mt19937_64 &rng, std::size_t atoms, double a = 0.0, double b = 1.0,
                                         double spread = 5.0) {
  std::uniform_real_distribution<double> u(1.0, spread);
  std::vector<double> len(atoms);
  double total = 0.0;
  for (auto &l : len)
    total += (l = u(rng));
  std::vector<double> bp;
  double x = a;
  for (std::size_t i = 0; i + 1 < atoms; ++i) {
    x += (b - a) * len[i] / total;
    bp.push_back(x);
  }
  return osp::Partition1D(a, b, bp);
}

inline osp::Partition1D uniform_partition(std::size_t atoms, double a = 0.0, double b = 1.0) {
  std::vector<double> bp;
  for (std::size_t i = 1; i < atoms; ++i)
    bp.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(atoms));
  return osp::Partition1D(a, b, bp);
}

inline Eigen::VectorXd random_vector(std::mt19937_64 &rng, std::size_t n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto &e : v)
    e = g(rng);
  return v;
}

/// Uniform point strictly inside an atom, away from its ends.
inline double inside(std::mt19937_64 &rng, const osp::Interval &iv) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  return iv.lo + u(rng) * iv.length();
}

} // namespace test
