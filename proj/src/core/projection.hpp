#pragma once

#include "core/bspline.hpp"
#include "core/grid.hpp"
#include "core/linalg.hpp"
#include "core/partition.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace osp {

class OrthoSystem;

/// Tensor Gauss rule: per-axis nodes and weights.
struct TensorQuadrature {
  std::vector<std::vector<double>> nodes;
  std::vector<std::vector<double>> weights;
  Shape shape() const;
};

TensorQuadrature make_quadrature(const std::vector<Partition1D> &parts, const std::vector<int> &per_atom);

/// Something that can be integrated against tensor B-splines.
class Integrand {
public:
  virtual ~Integrand() = default;
  virtual std::size_t dim() const = 0;
  /// Values on the tensor grid of `q`, row-major.
  virtual std::vector<double> sample(const TensorQuadrature &q) const = 0;
  /// Breakpoints of the integrand in direction `dir`; nullptr when smooth.
  virtual const Partition1D *pieces(std::size_t dir) const { (void)dir; return nullptr; }
  /// Gauss nodes per atom integrating products with order-k splines exactly; 0 when unknown.
  virtual int exact_nodes(std::size_t dir, int k) const { (void)dir; (void)k; return 0; }
};

class PointIntegrand final : public Integrand {
public:
  using Fn = std::function<double(std::span<const double>)>;
  PointIntegrand(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dim() const override { return dim_; }
  std::vector<double> sample(const TensorQuadrature &q) const override;

private:
  std::size_t dim_;
  Fn fn_;
};

class SplineIntegrand final : public Integrand {
public:
  explicit SplineIntegrand(TensorSpline s) : s_(std::move(s)) {}
  std::size_t dim() const override { return s_.bases.size(); }
  std::vector<double> sample(const TensorQuadrature &q) const override;
  const Partition1D *pieces(std::size_t dir) const override { return &s_.bases[dir].partition(); }
  int exact_nodes(std::size_t dir, int k) const override { return (k + s_.bases[dir].order()) / 2; }
  const TensorSpline &spline() const { return s_; }

private:
  TensorSpline s_;
};

/// Piecewise constant on the cells of an evaluation grid.
class GridIntegrand final : public Integrand {
public:
  GridIntegrand(const EvalGrid &grid, std::vector<double> values);
  std::size_t dim() const override { return cells_.size(); }
  std::vector<double> sample(const TensorQuadrature &q) const override;
  const Partition1D *pieces(std::size_t dir) const override { return &cells_[dir]; }
  int exact_nodes(std::size_t, int k) const override { return (k + 1) / 2; }

private:
  std::vector<Partition1D> cells_;
  Shape shape_;
  std::vector<double> values_;
};

struct QuadratureOptions {
  /// Relative load tolerance for integrands without an exact rule.
  double tol = 1e-10;
  /// Maximum number of uniform halvings of the quadrature atoms.
  int max_halvings = 6;
};

/// Orthogonal projectors P_n onto S_k(F_n), factored per direction and stage.
class Projector {
public:
  Projector(const TensorFiltration &filtration, std::vector<int> orders, QuadratureOptions qopts = {});
  const TensorFiltration &filtration() const { return filtration_; }
  const std::vector<int> &orders() const { return orders_; }
  std::vector<BSplineBasis> bases(std::size_t n) const;
  /// <f, N_{n,i}> row-major. `error` receives the estimated relative quadrature error.
  std::vector<double> loads(std::size_t n, const Integrand &f, double *error = nullptr) const;
  /// Coefficients of P_n f from its loads: one banded solve per fiber and direction.
  TensorSpline solve(std::size_t n, std::vector<double> loads) const;
  TensorSpline project(std::size_t n, const Integrand &f, double *error = nullptr) const;

private:
  const BandedCholesky &cholesky(std::size_t dir, std::size_t stage) const;

  TensorFiltration filtration_;
  std::vector<int> orders_;
  QuadratureOptions qopts_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<BandedCholesky>> chol_;
};

/// Loads of F_{n-1} obtained from loads of F_n (n >= 1).
std::vector<double> coarsen_loads(const TensorFiltration &f, const std::vector<int> &orders, std::size_t n,
                                  const std::vector<double> &loads);

/// P_{n,m} f as a spline on the bases of F_n.
TensorSpline project_partial(const OrthoSystem &sys, const Projector &proj, std::size_t n, std::size_t m,
                             const Integrand &f);
/// Same from precomputed loads on the bases of F_n.
TensorSpline project_partial_loads(const OrthoSystem &sys, const Projector &proj, std::size_t n,
                                   std::size_t m, const std::vector<double> &loads);

struct OperatorNorms {
  double l1 = 0.0;
  double linf = 0.0;
  std::vector<double> per_direction;
};

/// sup_x int |K(x, y)| dy of the univariate projector kernel, sampled at k + 2 Gauss nodes
/// and both endpoints of every atom.
double kernel_norm_1d(const BSplineBasis &basis);
/// Norms of P_n on L^1 and L^inf. The kernel is symmetric and a tensor product, so both
/// equal the product of the univariate sup norms.
OperatorNorms operator_norms(const TensorFiltration &f, const std::vector<int> &orders, std::size_t n);

/// Geometric-decay maximal function on a fixed grid.
class MaximalEvaluator {
public:
  /// `grid` must refine F_last in every direction; last_step defaults to all steps.
  MaximalEvaluator(const TensorFiltration &f, double rho, EvalGrid grid,
                   std::size_t last_step = static_cast<std::size_t>(-1));
  double rho() const { return rho_; }
  const EvalGrid &grid() const { return grid_; }
  std::size_t last_step() const { return last_; }
  /// M f on the grid from values of f on the grid.
  std::vector<double> operator()(std::span<const double> values) const;
  /// Sum over atoms of F_n only (no sup over n).
  std::vector<double> step_term(std::size_t n, std::span<const double> values) const;

private:
  struct DirKernel {
    Eigen::MatrixXd k;
    std::vector<std::size_t> stage_of_fine;
  };
  DirKernel kernel(std::size_t n, std::size_t dir) const;
  void add_term(const std::vector<DirKernel> &ks, const std::vector<double> &integrals,
                std::vector<double> &out, bool take_max) const;

  TensorFiltration f_;
  double rho_;
  EvalGrid grid_;
  std::size_t last_;
};

struct DominationReport {
  double max_ratio = 0.0;
  std::size_t argmax = 0;
  bool finite = true;
};

/// sup over the grid of |p| / M f.
DominationReport check_domination(std::span<const double> p_values, std::span<const double> maximal);

struct WeakTypePoint {
  double lambda = 0.0;
  double measure = 0.0;
  double ratio = 0.0;
};

/// lambda |{|v| > lambda}| / norm for every lambda.
std::vector<WeakTypePoint> weak_type_profile(const EvalGrid &g, std::span<const double> v, double norm,
                                             std::span<const double> lambdas);

} // namespace osp
