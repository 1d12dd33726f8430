#pragma once

#include "core/partition.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace osp {

class OrthoSystem;

using AtomRange = std::pair<std::size_t, std::size_t>;

/// Atom ranges [first, last] of all clamped order-r supports on `atoms` atoms.
std::vector<AtomRange> support_windows(std::size_t atoms, int r);

/// Largest length ratio of two touching or overlapping order-r supports of `p`.
double partition_gamma(const Partition1D &p, int r, AtomRange *a = nullptr, AtomRange *b = nullptr);

struct GammaWitness {
  std::size_t dir = 0;
  std::size_t step = 0;
  AtomRange a{0, 0}, b{0, 0};
  double ratio = 1.0;
};

struct GammaReport {
  std::vector<double> per_direction;
  double gamma = 1.0;
  GammaWitness witness;
};

GammaReport regularity_parameter(const TensorFiltration &f, const std::vector<int> &r);

struct BetaWitness {
  std::size_t dir = 0;
  /// Global steps n_1 and n_beta.
  std::size_t start = 0, end = 0;
  /// B as an atom range of F_start in direction dir.
  AtomRange support{0, 0};
  std::vector<AtomRef> chain;
};

struct BetaReport {
  /// Longest violating chain.
  std::size_t longest = 1;
  /// longest + 1; meaningful when !cap_exceeded.
  std::size_t beta = 2;
  bool cap_exceeded = false;
  std::size_t cap = 12;
  std::vector<std::size_t> per_direction_longest;
  BetaWitness witness;
};

/// Exact search over all windows and supports; reports cap_exceeded when a chain of length
/// `cap` exists.
BetaReport direction_regularity_parameter(const TensorFiltration &f, const std::vector<int> &r,
                                          std::size_t cap = 12);

/// Replays a witness: strictly decreasing atoms, A_1^dir inside B, B a support at both ends.
bool verify_beta_witness(const TensorFiltration &f, const std::vector<int> &r, const BetaWitness &w);

/// Split point for atom `iv` of direction `dir`.
using SplitRule = std::function<double(std::size_t dir, const Interval &iv)>;

/// Level by level, direction by direction, every atom split left to right; midpoints by default.
TensorFiltration dyadic_extension(const std::vector<Partition1D> &base, std::size_t levels,
                                  const SplitRule &rule = {});

struct ExampleFiltration {
  double eps = 0.0;
  Partition1D base{-1.0, 1.0};
  std::vector<SplitStep> schedule;
};

/// F(1/ell) on [-1, 1] with m equal middle atoms, then floor(|ln eps|) rounds of outer
/// refinements; every round splits once left and once right, choosing the split that keeps
/// the order-k regularity parameter smallest.
ExampleFiltration make_example_filtration(std::size_t ell, int k, int m);
Filtration1D to_filtration(const ExampleFiltration &e);

struct LemmaDirEntry {
  std::size_t dir = 0;
  BetaReport beta_prime;
};

struct LemmaDirReport {
  bool skipped = false;
  std::string reason;
  GammaReport gamma;
  BetaReport beta;
  std::vector<LemmaDirEntry> entries;
  bool passed = true;
};

LemmaDirReport validate_lemma_dir(const TensorFiltration &f, const std::vector<int> &k,
                                  const std::vector<int> &m, std::size_t cap = 12);

struct CombWitness {
  std::vector<std::ptrdiff_t> s;
  std::size_t dir = 0;
  std::vector<std::size_t> chain;
};

struct CombReport {
  std::size_t max_card = 0;
  double max_ratio = 0.0;
  std::size_t configurations = 0;
  CombWitness witness;
};

/// Longest chains (C_l) with constant distance s to J_l over every s with |s_j| <= radius.
CombReport lemma_comb_audit(const OrthoSystem &sys, std::size_t radius);

nlohmann::json regularity_report_json(const GammaReport &g, const BetaReport &b);

} // namespace osp
