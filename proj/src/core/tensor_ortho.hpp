#pragma once

#include "core/bspline.hpp"
#include "core/gram.hpp"
#include "core/ortho1d.hpp"
#include "core/partition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <tuple>
#include <vector>

namespace osp {

enum class SelectionKind { LeftToRight, RightToLeft, Random };
enum class PermutationKind { Identity, Reversed, Random };

/// Choices left open by the construction: the index order inside Omega sets and the
/// permutation pi of the non-split directions.
struct SelectionPolicy {
  SelectionKind selection = SelectionKind::LeftToRight;
  PermutationKind permutation = PermutationKind::Identity;
  std::uint64_t seed = 0;
  /// Optional override returning the next index given the taken flags of one direction.
  std::function<std::size_t(std::size_t dir, std::size_t n, const std::vector<bool> &taken)> chooser;
};

struct BuildOptions {
  SelectionPolicy policy;
  JRule j_rule = JRule::SmallestSupport;
};

enum class FactorKind { Base, Ortho, Dual };

/// One univariate factor: a spline on stage `stage` of its direction.
struct FactorFunction {
  FactorKind kind = FactorKind::Base;
  std::size_t stage = 0;
  Eigen::VectorXd coeffs;
  std::size_t j_atom = 0;
};

struct TensorOrthoFunction {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::size_t> factors;
  AtomRef j;
};

class OrthoSystem {
public:
  OrthoSystem(TensorFiltration filtration, std::vector<int> orders);

  const TensorFiltration &filtration() const { return filtration_; }
  const std::vector<int> &orders() const { return orders_; }
  std::size_t dim() const { return orders_.size(); }
  std::size_t size() const { return functions_.size(); }
  std::size_t blocks() const { return block_start_.size() - 1; }
  std::size_t block_begin(std::size_t n) const { return block_start_.at(n); }
  /// Cumulative count M̄_n.
  std::size_t block_end(std::size_t n) const { return block_start_.at(n + 1); }
  const TensorOrthoFunction &function(std::size_t l) const { return functions_.at(l); }
  const std::vector<TensorOrthoFunction> &functions() const { return functions_; }

  const std::vector<FactorFunction> &pool(std::size_t dir) const { return pool_.at(dir); }
  const BSplineBasis &stage_basis(std::size_t dir, std::size_t stage) const;
  const BSplineBasis &final_basis(std::size_t dir) const;
  /// Pool coefficients on the final stage, one column per pool entry.
  const Eigen::MatrixXd &final_coeffs(std::size_t dir) const { return final_.at(dir); }
  /// Re-expresses stage-`from` coefficients on stage `to` >= from.
  Eigen::MatrixXd lift(std::size_t dir, const Eigen::MatrixXd &c, std::size_t from, std::size_t to) const;
  /// Gram matrix of the pool functions of one direction.
  Eigen::MatrixXd pool_gram(std::size_t dir) const;

  double eval(std::size_t l, std::span<const double> x) const;
  /// f_l as a tensor spline on the final bases.
  TensorSpline tensor_spline(std::size_t l) const;
  /// Step n of the associated sigma-algebra A_l for every l.
  std::vector<std::size_t> step_sequence() const;

  // Assembly; used by the builder and the loader.
  std::size_t add_factor(std::size_t dir, FactorFunction f);
  void add_function(TensorOrthoFunction f);
  void close_block();

private:
  TensorFiltration filtration_;
  std::vector<int> orders_;
  std::vector<std::vector<BSplineBasis>> stage_bases_;
  std::vector<std::vector<FactorFunction>> pool_;
  std::vector<Eigen::MatrixXd> final_;
  std::vector<TensorOrthoFunction> functions_;
  std::vector<std::size_t> block_start_;
};

/// Incremental construction, one block per filtration step.
class SystemBuilder {
public:
  SystemBuilder(const TensorFiltration &filtration, std::vector<int> orders, BuildOptions opts = {});

  /// Builds block n; blocks must be requested in order 0, 1, 2, ...
  std::span<const TensorOrthoFunction> build_block(std::size_t n);
  std::size_t next_block() const { return next_; }
  const OrthoSystem &system() const { return sys_; }
  OrthoSystem finish();

private:
  std::size_t dual_id(std::size_t dir, std::size_t stage, const std::vector<std::size_t> &omega, std::size_t mu);
  const BandedSymmetric &gram(std::size_t dir, std::size_t stage);
  std::size_t choose(std::size_t dir, std::size_t n, const std::vector<bool> &taken);
  void build_base();

  OrthoSystem sys_;
  BuildOptions opts_;
  std::size_t next_ = 0;
  std::mt19937_64 rng_;
  std::map<std::pair<std::size_t, std::size_t>, BandedSymmetric> grams_;
  std::vector<std::map<std::tuple<std::size_t, std::vector<std::size_t>, std::size_t>, std::size_t>> duals_;
};

/// Builds all blocks 0..N.
OrthoSystem build_system(const TensorFiltration &filtration, std::vector<int> orders,
                         const BuildOptions &opts = {});

/// Orthonormal basis of S_k on a partition: Legendre polynomials on a single atom,
/// prefix duals N_i^{{0..i}*} otherwise. Returns coefficients and characteristic atoms.
std::vector<std::pair<Eigen::VectorXd, std::size_t>> base_orthonormal(const BSplineBasis &basis);

/// max |<f_i, f_j> - delta_ij| over the whole system via pooled factor Gram matrices.
double orthonormality_defect(const OrthoSystem &sys);

struct SpanReport {
  double max_residual = 0.0;
  std::size_t worst_step = 0;
  bool counts_match = true;
};

/// For every block boundary n, projects a random member of S_k(F_n) onto span{f_l : l < M̄_n}
/// and reports the relative L^2 residual.
SpanReport span_check(const OrthoSystem &sys, std::uint64_t seed, std::size_t samples = 1);

struct TensorDecayReport {
  DecayFit fit;
  /// Max over all functions of the normalized atom sups at each l1 atom distance from J.
  std::vector<double> envelope;
  /// Per p in {1, 2, 4, inf}: min and max of ||f||_p / |J|^{1/p - 1/2}.
  std::vector<double> p_values{1.0, 2.0, 4.0, std::numeric_limits<double>::infinity()};
  std::vector<double> ratio_min, ratio_max;
  /// max of ||f||_1 ||f||_inf.
  double dual_product_max = 0.0;
};

/// Envelope fit of |f_{n,m}(x)| |conv(J, A_n(x))| / |J|^{1/2} against |d_n(A_n(x), J)|_1.
TensorDecayReport fit_tensor_decay(const OrthoSystem &sys);

/// Maximal number of times one atom of F_n occurs among the J_{n,m} of block n >= 1.
std::size_t max_j_multiplicity(const OrthoSystem &sys);

/// Expansion coefficients <s, f_l> of a tensor spline on the final bases.
std::vector<double> expand_spline(const OrthoSystem &sys, const TensorSpline &s);

/// Expansion coefficients from loads b_i = <f, N_i> on the final bases.
std::vector<double> expand_loads(const OrthoSystem &sys, const std::vector<double> &loads,
                                 std::size_t count);

/// Sum_l c_l f_l as coefficients on the final bases (first c.size() functions).
TensorSpline synthesize(const OrthoSystem &sys, std::span<const double> c);

} // namespace osp
