#pragma once

#include "core/linalg.hpp"
#include "core/partition.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace osp {

/// Clamped B-spline basis of order k (degree k-1, smoothness k-2) on a partition.
class BSplineBasis {
public:
  BSplineBasis(Partition1D partition, int order);

  int order() const { return k_; }
  std::size_t dimension() const { return partition_.atom_count() + k_ - 1; }
  const Partition1D &partition() const { return partition_; }
  const std::vector<double> &knots() const { return knots_; }

  double eval(std::size_t i, double x) const;
  /// Writes the k B-splines that may be nonzero on atom `atom` at x and returns the first index.
  /// x may be any point of the closed atom; the polynomial piece of that atom is used.
  std::size_t eval_on_atom(std::size_t atom, double x, double *out) const;
  /// Same as eval_on_atom for the atom containing x.
  std::size_t eval_nonzero(double x, double *out) const;

  /// Atom range [first, last] of supp N_i.
  std::pair<std::size_t, std::size_t> support_atoms(std::size_t i) const;
  Interval support(std::size_t i) const;
  /// Largest atom inside supp N_i, leftmost on ties.
  std::size_t largest_atom(std::size_t i) const;

  /// Index of the knot interval t_mu <= x < t_{mu+1} of atom `atom`.
  std::size_t knot_span(std::size_t atom) const { return atom + k_ - 1; }

  bool operator==(const BSplineBasis &o) const { return k_ == o.k_ && partition_ == o.partition_; }

private:
  Partition1D partition_;
  int k_;
  std::vector<double> knots_;
};

/// A spline g = sum_j a_j N_j.
struct Spline {
  BSplineBasis basis;
  Eigen::VectorXd coeffs;

  Spline(BSplineBasis b, Eigen::VectorXd c);
  double operator()(double x) const;
  double eval_on_atom(std::size_t atom, double x) const;
};

/// Exact inner product on the common refinement of both partitions.
double inner_product(const Spline &f, const Spline &g);

/// L^p norm for 1 <= p <= inf (p = infinity for the sup norm).
double lp_norm(const Spline &f, double p);
/// L^p norm restricted to atom `atom` of the spline's partition.
double lp_norm_on_atom(const Spline &f, std::size_t atom, double p);
/// Sup of |f| over the closed atom.
double max_abs_on_atom(const Spline &f, std::size_t atom);

/// Coefficients after inserting x as a new simple knot (x strictly inside an atom).
Eigen::VectorXd insert_knot(const BSplineBasis &basis, const Eigen::VectorXd &coeffs, double x);
/// Boehm weights alpha_i for inserting x into atom `atom`; size dimension() + 1 (new indices).
std::vector<double> insertion_alphas(const BSplineBasis &basis, std::size_t atom, double x);
/// Matrix T with coeffs_fine = T * coeffs_coarse; `fine` must refine `coarse`.
Eigen::MatrixXd insertion_matrix(const BSplineBasis &coarse, const BSplineBasis &fine);
/// Re-expresses f on a finer basis of the same order.
Spline refine_to(const Spline &f, const BSplineBasis &fine);

/// True if every breakpoint of `coarse` is a breakpoint of `fine` on the same interval.
bool is_refinement(const Partition1D &coarse, const Partition1D &fine);
/// Union of the breakpoints of two partitions of the same interval.
Partition1D common_refinement(const Partition1D &a, const Partition1D &b);

/// Tensor product spline with row-major coefficients (last direction fastest).
struct TensorSpline {
  std::vector<BSplineBasis> bases;
  std::vector<double> coeffs;

  explicit TensorSpline(std::vector<BSplineBasis> b);
  TensorSpline(std::vector<BSplineBasis> b, std::vector<double> c);
  Shape shape() const;
  double operator()(std::span<const double> x) const;
};

/// Values of all basis functions on the given points: rows = points, cols = basis index.
Eigen::MatrixXd collocation_matrix(const BSplineBasis &basis, std::span<const double> points);
/// Same, but point p is evaluated on the polynomial piece of atom atoms[p].
Eigen::MatrixXd collocation_matrix(const BSplineBasis &basis, std::span<const double> points,
                                   std::span<const std::size_t> atoms);

} // namespace osp
