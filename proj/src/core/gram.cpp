#include "core/gram.hpp"

#include "core/error.hpp"
#include "core/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace osp {

BandedSymmetric gram_matrix(const BSplineBasis &basis) {
  const int k = basis.order();
  const Partition1D &p = basis.partition();
  BandedSymmetric g(basis.dimension(), static_cast<std::size_t>(k - 1));
  std::vector<double> nodes, weights;
  double v[33];
  for (std::size_t a = 0; a < p.atom_count(); ++a) {
    const Interval iv = p.atom(a);
    nodes.clear();
    weights.clear();
    gauss_on_interval(k, iv.lo, iv.hi, nodes, weights);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const std::size_t first = basis.eval_on_atom(a, nodes[q], v);
      for (int r = 0; r < k; ++r)
        for (int s = 0; s <= r; ++s)
          g.at(first + r, first + s) += weights[q] * v[r] * v[s];
    }
  }
  return g;
}

DualSystem dual_coefficients(const BandedSymmetric &g, std::vector<std::size_t> subset,
                             const DualOptions &opts) {
  const std::size_t n = g.size();
  if (subset.empty()) {
    subset.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      subset[i] = i;
  }
  std::sort(subset.begin(), subset.end());
  require(std::adjacent_find(subset.begin(), subset.end()) == subset.end() && subset.back() < n,
          ErrorCode::Index, "dual_coefficients: subset must hold distinct indices < n");
  const std::size_t m = subset.size();
  Eigen::MatrixXd sub(m, m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c)
      sub(r, c) = g(subset[r], subset[c]);

  DualSystem ds;
  ds.subset = subset;
  if (m <= opts.dense_limit) {
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("dual_coefficients: Gram submatrix is not numerically SPD",
                              std::numeric_limits<double>::infinity());
    ds.a = llt.solve(Eigen::MatrixXd::Identity(m, m));
  } else {
    // Sorted subsets of a banded matrix keep the bandwidth.
    BandedSymmetric band(m, g.bandwidth());
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = (r > g.bandwidth() ? r - g.bandwidth() : 0); c <= r; ++c)
        band.at(r, c) = sub(r, c);
    BandedCholesky chol(band);
    ds.a = Eigen::MatrixXd::Identity(m, m);
    for (std::size_t c = 0; c < m; ++c)
      chol.solve(ds.a.col(c).data());
  }
  ds.a = 0.5 * (ds.a + ds.a.transpose()).eval();
  ds.residual = (ds.a * sub - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().rowwise().sum().maxCoeff();
  if (!(ds.residual <= opts.residual_tol)) {
    const double cond = ds.a.cwiseAbs().rowwise().sum().maxCoeff() *
                        sub.cwiseAbs().rowwise().sum().maxCoeff();
    std::ostringstream os;
    os << "dual_coefficients: residual " << ds.residual << " exceeds tolerance; condition estimate "
       << cond;
    throw ConditioningError(os.str(), cond);
  }
  return ds;
}

Eigen::VectorXd dual_function_coeffs(const DualSystem &ds, std::size_t n, std::size_t i) {
  auto it = std::lower_bound(ds.subset.begin(), ds.subset.end(), i);
  require(it != ds.subset.end() && *it == i, ErrorCode::Index, "dual_function_coeffs: index not in subset");
  const auto r = static_cast<Eigen::Index>(it - ds.subset.begin());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < ds.subset.size(); ++s)
    c[static_cast<Eigen::Index>(ds.subset[s])] = ds.a(r, static_cast<Eigen::Index>(s));
  return c;
}

Eigen::MatrixXd inverse_delete_update(const Eigen::MatrixXd &d_inv, std::size_t l, double pivot_tol) {
  const auto n = d_inv.rows();
  require(d_inv.cols() == n && n >= 1, ErrorCode::Size, "inverse_delete_update: need a square matrix");
  require(static_cast<Eigen::Index>(l) < n, ErrorCode::Index, "inverse_delete_update: index out of range");
  const auto li = static_cast<Eigen::Index>(l);
  const double piv = d_inv(li, li);
  if (!(std::abs(piv) > pivot_tol * std::max(1.0, d_inv.cwiseAbs().maxCoeff()))) {
    std::ostringstream os;
    os << "inverse_delete_update: pivot " << piv << " too small";
    fail(ErrorCode::Pivot, os.str());
  }
  Eigen::MatrixXd e(n - 1, n - 1);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == li)
      continue;
    for (Eigen::Index j = 0, c = 0; j < n; ++j) {
      if (j == li)
        continue;
      e(r, c++) = d_inv(i, j) - d_inv(i, li) * d_inv(li, j) / piv;
    }
    ++r;
  }
  return e;
}

TotalPositivityReport certify_total_positivity(const Eigen::MatrixXd &m, int max_order, double tol) {
  const auto nr = static_cast<std::size_t>(m.rows()), nc = static_cast<std::size_t>(m.cols());
  require(nr <= 12 && nc <= 12, ErrorCode::Size, "certify_total_positivity: matrix larger than 12");
  require(max_order >= 1, ErrorCode::InvalidArgument, "certify_total_positivity: max_order must be >= 1");
  TotalPositivityReport rep;
  rep.min_minor = std::numeric_limits<double>::infinity();
  const std::size_t top = std::min<std::size_t>({static_cast<std::size_t>(max_order), nr, nc});
  std::vector<std::size_t> rows, cols;
  std::function<void(std::size_t, std::size_t, std::size_t)> choose_cols;
  std::function<void(std::size_t, std::size_t)> choose_rows;
  auto evaluate = [&]() {
    const auto s = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd sub(s, s);
    for (Eigen::Index r = 0; r < s; ++r)
      for (Eigen::Index c = 0; c < s; ++c)
        sub(r, c) = m(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    const double det = s == 1 ? sub(0, 0) : sub.partialPivLu().determinant();
    ++rep.minors_checked;
    if (det < rep.min_minor) {
      rep.min_minor = det;
      rep.rows = rows;
      rep.cols = cols;
    }
  };
  choose_cols = [&](std::size_t start, std::size_t left, std::size_t order) {
    if (left == 0) {
      evaluate();
      return;
    }
    for (std::size_t c = start; c + left <= nc; ++c) {
      cols.push_back(c);
      choose_cols(c + 1, left - 1, order);
      cols.pop_back();
    }
  };
  choose_rows = [&](std::size_t start, std::size_t left) {
    if (left == 0) {
      choose_cols(0, rows.size(), rows.size());
      return;
    }
    for (std::size_t r = start; r + left <= nr; ++r) {
      rows.push_back(r);
      choose_rows(r + 1, left - 1);
      rows.pop_back();
    }
  };
  for (std::size_t order = 1; order <= top; ++order)
    choose_rows(0, order);
  rep.passed = rep.min_minor >= -tol;
  return rep;
}

double checkerboard_min(const Eigen::MatrixXd &a) {
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::min(worst, ((i + j) % 2 == 0 ? 1.0 : -1.0) * a(i, j));
  return worst;
}

DecayFit fit_decay(const std::vector<DecayPoint> &points, double floor) {
  DecayFit fit;
  double top = 0.0;
  for (const auto &p : points)
    top = std::max(top, std::abs(p.value));
  if (top == 0.0)
    return fit;
  std::map<std::size_t, double> env;
  for (const auto &p : points) {
    const double v = std::abs(p.value);
    if (v > floor * top) {
      auto [it, inserted] = env.emplace(p.distance, v);
      if (!inserted)
        it->second = std::max(it->second, v);
    }
  }
  fit.distances = env.size();
  // Nonzero values only at distances 0 and 1: finitely supported, no geometric rate to fit.
  if (env.rbegin()->first <= 1) {
    fit.q_fit = 0.0;
    for (const auto &e : env)
      fit.c_fit = std::max(fit.c_fit, e.second);
    return fit;
  }
  double slope = 0.0;
  if (env.size() == 1) {
    // A single nonzero distance: the envelope through (0, C) is undetermined; use the
    // geometric rate implied by C = value at that distance.
    slope = 0.0;
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(env.size());
    for (const auto &[dist, v] : env) {
      const double x = static_cast<double>(dist), y = std::log(v);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }
  fit.q_fit = std::exp(slope);
  double logc = -std::numeric_limits<double>::infinity();
  for (const auto &[dist, v] : env)
    logc = std::max(logc, std::log(v) - slope * static_cast<double>(dist));
  fit.c_fit = std::exp(logc);
  return fit;
}

DecayFit fit_decay(const DualSystem &ds, const BSplineBasis &basis) {
  std::vector<DecayPoint> pts;
  const std::size_t m = ds.subset.size();
  pts.reserve(m * m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = ds.subset[r], j = ds.subset[c];
      const Interval fi = basis.support(i), fj = basis.support(j);
      const double conv = std::max(fi.hi, fj.hi) - std::min(fi.lo, fj.lo);
      pts.push_back({i > j ? i - j : j - i,
                     ds.a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * conv});
    }
  return fit_decay(pts);
}

} // namespace osp

namespace osp {

Eigen::VectorXd dual_vector(const BandedSymmetric &g, const std::vector<std::size_t> &subset,
                            std::size_t i, double residual_tol) {
  const std::size_t m = subset.size();
  require(m > 0 && std::is_sorted(subset.begin(), subset.end()), ErrorCode::InvalidArgument,
          "dual_vector: subset must be sorted and nonempty");
  auto it = std::lower_bound(subset.begin(), subset.end(), i);
  require(it != subset.end() && *it == i, ErrorCode::Index, "dual_vector: index not in subset");
  BandedSymmetric band(m, g.bandwidth());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = (r > g.bandwidth() ? r - g.bandwidth() : 0); c <= r; ++c)
      band.at(r, c) = g(subset[r], subset[c]);
  BandedCholesky chol(band);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  const auto pos = static_cast<Eigen::Index>(it - subset.begin());
  e[pos] = 1.0;
  Eigen::VectorXd x = chol.solve(e);
  // Residual of G(m,m) x = e in the max norm.
  double res = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double s = -e[static_cast<Eigen::Index>(r)];
    for (std::size_t c = (r > g.bandwidth() ? r - g.bandwidth() : 0); c < std::min(m, r + g.bandwidth() + 1); ++c)
      s += band(r, c) * x[static_cast<Eigen::Index>(c)];
    res = std::max(res, std::abs(s));
  }
  if (!(res <= residual_tol * std::max(1.0, x.cwiseAbs().maxCoeff() * band(pos, pos))))
    throw ConditioningError("dual_vector: residual above tolerance", chol.condition_estimate());
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (std::size_t r = 0; r < m; ++r)
    full[static_cast<Eigen::Index>(subset[r])] = x[static_cast<Eigen::Index>(r)];
  return full;
}

} // namespace osp
