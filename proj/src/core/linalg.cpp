#include "core/linalg.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace osp {

std::size_t shape_size(const Shape &shape) {
  std::size_t n = 1;
  for (auto s : shape)
    n *= s;
  return n;
}

BandedSymmetric::BandedSymmetric(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

double BandedSymmetric::operator()(std::size_t i, std::size_t j) const {
  if (i < j)
    std::swap(i, j);
  if (i - j > bw_)
    return 0.0;
  return data_[i * (bw_ + 1) + (j + bw_ - i)];
}

double &BandedSymmetric::at(std::size_t i, std::size_t j) {
  if (i < j)
    std::swap(i, j);
  require(i - j <= bw_, ErrorCode::Index, "BandedSymmetric: entry outside band");
  return data_[i * (bw_ + 1) + (j + bw_ - i)];
}

Eigen::MatrixXd BandedSymmetric::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = (i > bw_ ? i - bw_ : 0); j <= i; ++j) {
      m(i, j) = (*this)(i, j);
      m(j, i) = m(i, j);
    }
  return m;
}

BandedCholesky::BandedCholesky(const BandedSymmetric &a)
    : n_(a.size()), bw_(a.bandwidth()), l_(a.size() * (a.bandwidth() + 1), 0.0) {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j <= i; ++j) {
      double sum = a(i, j);
      const std::size_t k0 = std::max(j0, j > bw_ ? j - bw_ : 0);
      for (std::size_t k = k0; k < j; ++k)
        sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(sum > 0.0)) {
          std::ostringstream os;
          os << "banded Cholesky: matrix not positive definite at pivot " << i;
          throw ConditioningError(os.str(), std::numeric_limits<double>::infinity());
        }
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
}

void BandedCholesky::solve(double *x, std::size_t stride) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = x[i * stride];
    const std::size_t k0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t k = k0; k < i; ++k)
      sum -= l(i, k) * x[k * stride];
    x[i * stride] = sum / l(i, i);
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    double sum = x[ii * stride];
    const std::size_t k1 = std::min(n_ - 1, ii + bw_);
    for (std::size_t k = ii + 1; k <= k1; ++k)
      sum -= l(k, ii) * x[k * stride];
    x[ii * stride] = sum / l(ii, ii);
  }
}

Eigen::VectorXd BandedCholesky::solve(const Eigen::VectorXd &b) const {
  Eigen::VectorXd x = b;
  solve(x.data(), 1);
  return x;
}

double BandedCholesky::condition_estimate() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    lo = std::min(lo, l(i, i));
    hi = std::max(hi, l(i, i));
  }
  return (hi / lo) * (hi / lo);
}

std::vector<double> mode_product(std::span<const double> tensor, const Shape &shape,
                                 std::size_t mode, const Eigen::MatrixXd &m, Shape &out_shape) {
  require(mode < shape.size(), ErrorCode::Index, "mode_product: mode out of range");
  require(static_cast<std::size_t>(m.cols()) == shape[mode], ErrorCode::InvalidArgument,
          "mode_product: matrix columns do not match tensor extent");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < mode; ++i)
    outer *= shape[i];
  for (std::size_t i = mode + 1; i < shape.size(); ++i)
    inner *= shape[i];
  const std::size_t n = shape[mode];
  const std::size_t r = static_cast<std::size_t>(m.rows());
  out_shape = shape;
  out_shape[mode] = r;
  std::vector<double> out(outer * r * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    const double *src = tensor.data() + o * n * inner;
    double *dst = out.data() + o * r * inner;
    for (std::size_t row = 0; row < r; ++row) {
      double *d = dst + row * inner;
      for (std::size_t j = 0; j < n; ++j) {
        const double c = m(row, j);
        if (c == 0.0)
          continue;
        const double *s = src + j * inner;
        for (std::size_t i = 0; i < inner; ++i)
          d[i] += c * s[i];
      }
    }
  }
  return out;
}

std::vector<double> kronecker_apply(std::span<const double> tensor, Shape shape,
                                    const std::vector<Eigen::MatrixXd> &factors, Shape &out_shape) {
  require(factors.size() == shape.size(), ErrorCode::InvalidArgument,
          "kronecker_apply: factor count mismatch");
  std::vector<double> cur(tensor.begin(), tensor.end());
  for (std::size_t mode = 0; mode < factors.size(); ++mode) {
    Shape next;
    cur = mode_product(cur, shape, mode, factors[mode], next);
    shape = next;
  }
  out_shape = shape;
  return cur;
}

void kronecker_solve(std::vector<double> &tensor, const Shape &shape,
                     const std::vector<const BandedCholesky *> &factors) {
  require(factors.size() == shape.size(), ErrorCode::InvalidArgument,
          "kronecker_solve: factor count mismatch");
  for (std::size_t mode = 0; mode < shape.size(); ++mode) {
    require(factors[mode]->size() == shape[mode], ErrorCode::InvalidArgument,
            "kronecker_solve: extent mismatch");
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < mode; ++i)
      outer *= shape[i];
    for (std::size_t i = mode + 1; i < shape.size(); ++i)
      inner *= shape[i];
    const std::size_t n = shape[mode];
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i)
        factors[mode]->solve(tensor.data() + o * n * inner + i, inner);
  }
}

} // namespace osp

namespace osp {

double contract_rank1(std::span<const double> tensor, const Shape &shape,
                      const std::vector<const double *> &vecs) {
  require(vecs.size() == shape.size() && tensor.size() == shape_size(shape), ErrorCode::Size,
          "contract_rank1: shape mismatch");
  std::vector<double> cur(tensor.begin(), tensor.end()), next;
  for (std::size_t mode = shape.size(); mode-- > 0;) {
    const std::size_t n = shape[mode], outer = cur.size() / n;
    next.assign(outer, 0.0);
    const double *v = vecs[mode];
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      const double *row = cur.data() + o * n;
      for (std::size_t j = 0; j < n; ++j)
        s += row[j] * v[j];
      next[o] = s;
    }
    cur.swap(next);
  }
  return cur.empty() ? 0.0 : cur[0];
}

void add_rank1(std::span<double> tensor, const Shape &shape, double coef,
               const std::vector<const double *> &vecs) {
  require(vecs.size() == shape.size() && tensor.size() == shape_size(shape), ErrorCode::Size,
          "add_rank1: shape mismatch");
  std::vector<double> cur{coef}, next;
  for (std::size_t mode = 0; mode < shape.size(); ++mode) {
    const std::size_t n = shape[mode];
    next.resize(cur.size() * n);
    for (std::size_t o = 0; o < cur.size(); ++o)
      for (std::size_t j = 0; j < n; ++j)
        next[o * n + j] = cur[o] * vecs[mode][j];
    cur.swap(next);
  }
  for (std::size_t i = 0; i < cur.size(); ++i)
    tensor[i] += cur[i];
}

} // namespace osp
