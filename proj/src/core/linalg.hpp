#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace osp {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);

/// Symmetric banded matrix; only the lower band is stored.
class BandedSymmetric {
public:
  BandedSymmetric() = default;
  BandedSymmetric(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  /// Entry (i, j); zero outside the band.
  double operator()(std::size_t i, std::size_t j) const;
  /// Reference to the stored entry, requires |i - j| <= bandwidth.
  double &at(std::size_t i, std::size_t j);

  Eigen::MatrixXd dense() const;

private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

/// Cholesky factorization L L^T of a banded SPD matrix.
class BandedCholesky {
public:
  explicit BandedCholesky(const BandedSymmetric &a);

  std::size_t size() const { return n_; }
  /// In-place solve of A x = b along a strided fiber.
  void solve(double *x, std::size_t stride = 1) const;
  Eigen::VectorXd solve(const Eigen::VectorXd &b) const;
  /// Crude condition estimate (max L_ii / min L_ii)^2.
  double condition_estimate() const;

private:
  std::size_t n_;
  std::size_t bw_;
  std::vector<double> l_;
  double &l(std::size_t i, std::size_t j) { return l_[i * (bw_ + 1) + (j + bw_ - i)]; }
  double l(std::size_t i, std::size_t j) const { return l_[i * (bw_ + 1) + (j + bw_ - i)]; }
};

/// Mode-`mode` product: contracts tensor index `mode` against the columns of `m`.
std::vector<double> mode_product(std::span<const double> tensor, const Shape &shape,
                                 std::size_t mode, const Eigen::MatrixXd &m, Shape &out_shape);

/// Applies `m` along every mode in turn (Kronecker product action).
std::vector<double> kronecker_apply(std::span<const double> tensor, Shape shape,
                                    const std::vector<Eigen::MatrixXd> &factors, Shape &out_shape);

/// Solves (A_1 (x) ... (x) A_d) x = b in place, one banded solve per fiber.
void kronecker_solve(std::vector<double> &tensor, const Shape &shape,
                     const std::vector<const BandedCholesky *> &factors);

} // namespace osp

namespace osp {

/// <tensor, v_1 (x) ... (x) v_d>.
double contract_rank1(std::span<const double> tensor, const Shape &shape,
                      const std::vector<const double *> &vecs);

/// tensor += coef * v_1 (x) ... (x) v_d.
void add_rank1(std::span<double> tensor, const Shape &shape, double coef,
               const std::vector<const double *> &vecs);

} // namespace osp
