#pragma once

#include "core/config.hpp"
#include "core/grid.hpp"
#include "core/projection.hpp"
#include "core/regularity.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace osp {

class OrthoSystem;

/// Named test functions on the filtration's domain: sin, abs, jump, bump, poly.
PointIntegrand::Fn target_function(const std::string &name, const TensorFiltration &f);

/// Sign vectors of length `len`. Model random keeps vector 0 at all +1; enumerate lists all
/// 2^len vectors when len <= 16 and falls back to random sampling otherwise.
std::vector<std::vector<int>> make_sign_vectors(const std::string &model, std::size_t len, std::size_t count,
                                                std::mt19937_64 &rng);

/// Expansion coefficients <f, f_l> for the first `count` functions (0 = all).
std::vector<double> expansion_coefficients(const OrthoSystem &sys, const PointIntegrand::Fn &f,
                                           std::size_t count = 0);

struct WeakTypeRow {
  std::size_t sign_vector = 0;
  double lambda = 0.0;
  double measure = 0.0;
  double ratio = 0.0;
};

struct WeakTypeResult {
  std::vector<WeakTypeRow> rows;
  std::vector<double> max_ratio_per_sign;
  double max_ratio = 0.0;
  /// sup_M ||sum_{l <= M} a_l f_l||_1 on the grid.
  double l1_sup = 0.0;
  double gamma = 0.0;
  std::size_t beta = 0;
  bool beta_cap_exceeded = false;
  double q_fit = 0.0;
};

/// lambda |{sup_M |sum_{l<=M} e_l a_l f_l| > lambda}| / sup_M ||sum_{l<=M} a_l f_l||_1 on the grid.
/// Relative lambdas are multiples of l1_sup / |I|.
WeakTypeResult sign_flip_experiment(const OrthoSystem &sys, std::span<const double> coeffs,
                                    const std::vector<std::vector<int>> &signs, std::span<const double> lambdas,
                                    bool relative, const EvalGrid &grid);

struct AeRow {
  std::size_t terms = 0;
  double sup_error = 0.0;
  double median_error = 0.0;
};

struct AeSweepResult {
  std::vector<AeRow> rows;
  EvalGrid grid;
  std::vector<double> reference;
  /// |f - S_L f| on the grid for the full expansion.
  std::vector<double> final_error;
};

/// Errors of the partial sums at every block end.
AeSweepResult ae_convergence_sweep(const OrthoSystem &sys, const PointIntegrand::Fn &f, std::size_t subcells);

/// One member of C: a rectangle of atoms of F_n.
struct Box {
  std::size_t n = 0;
  std::vector<Interval> sides;
  std::vector<AtomRange> atoms;
  double volume = 0.0;
};

struct Collection {
  /// The input filtration followed by dyadic levels up to step a.
  TensorFiltration filtration{std::vector<Partition1D>{Partition1D(0.0, 1.0)}};
  std::size_t base_steps = 0;
  std::size_t a = 0;
  std::size_t extension_levels = 0;
  double gamma = 1.0;
  std::vector<int> orders;
  std::vector<Box> boxes;
};

/// Runs of 1..3k neighbouring atoms whose end atoms have length >= |U| / (3 k gamma) and that
/// contain an order-k support.
std::vector<AtomRange> valid_runs(const Partition1D &p, int k, double gamma);

/// Members of C_n for n <= a(N), each listed once at its first step n(B). Dyadic levels are
/// appended until every atom of F_N is covered by members of C_a inside it.
Collection build_collection_C(const TensorFiltration &f, const std::vector<int> &k, double gamma,
                              std::size_t max_levels = 8);

struct CZResult {
  double lambda = 0.0;
  bool trivial = false;
  /// Indices into Collection::boxes in enumeration order (n(E), atom indices).
  std::vector<std::size_t> e;
  /// Owner j of every grid cell in the disjointified cover, -1 outside G_lambda.
  std::vector<std::ptrdiff_t> owner;
  std::vector<double> h, g;
  double max_average = 0.0;
  double reconstruction_error = 0.0;
  std::size_t overlap_max = 0;
  double overlap_ceiling = 0.0;
  /// max_j int |Q_{E_j}(f 1_{V_j})|^2 / (lambda^2 |E_j|).
  double local_projection_max = 0.0;
  /// ||h||_2^2 / (lambda ||f||_1).
  double h_ratio = 0.0;
  double h_sup = 0.0;
};

/// Calderon-Zygmund split of grid values f at height lambda. `grid` must refine the final
/// partitions of the collection's filtration with at least max k subcells per atom.
CZResult cz_decompose(const EvalGrid &grid, std::span<const double> f, double lambda, const Collection &c);

/// Polynomial sum_a c_a x^a with total degree <= degree.
struct Polynomial {
  std::size_t dim = 1;
  int degree = 0;
  std::vector<std::vector<int>> exponents;
  std::vector<double> coeffs;
  double operator()(const double *x) const;
};

Polynomial random_polynomial(std::size_t dim, int degree, std::mt19937_64 &rng);
/// sup_V |p| by a grid search refined with a compass search.
double sup_on_box(const Polynomial &p, const std::vector<Interval> &box);
/// Monte-Carlo fraction of V where |p| >= threshold.
double remez_fraction(const Polynomial &p, const std::vector<Interval> &box, double threshold, std::size_t samples,
                      std::mt19937_64 &rng);

struct RemezReport {
  std::size_t trials = 0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_fraction = 1.0;
  /// A violation is a fraction below 1/2 - 3 sigma.
  double sigma = 0.0;
};

RemezReport remez_check(int degree, std::size_t dim, std::size_t trials, std::size_t samples, std::uint64_t seed);

/// Runs one CLI experiment (weak-type, ae-sweep, cz, remez) from a config; result as JSON.
nlohmann::json run_experiment(const std::string &kind, const ExperimentConfig &c);
/// CSV rendering of a run_experiment result.
std::string experiment_csv(const std::string &kind, const nlohmann::json &result);

} // namespace osp
