#pragma once

#include "core/bspline.hpp"
#include "core/linalg.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace osp {

/// Banded Gram matrix (<N_i, N_j>), bandwidth k-1.
BandedSymmetric gram_matrix(const BSplineBasis &basis);

struct DualSystem {
  /// Inverse of G(m, m); row/col r corresponds to subset[r].
  Eigen::MatrixXd a;
  std::vector<std::size_t> subset;
  double residual = 0.0;
};

struct DualOptions {
  double residual_tol = 1e-8;
  /// Dense Cholesky up to this size, banded solves beyond.
  std::size_t dense_limit = 512;
};

/// Inverse of the principal submatrix G(m, m). An empty subset means all indices.
DualSystem dual_coefficients(const BandedSymmetric &g, std::vector<std::size_t> subset = {},
                             const DualOptions &opts = {});

/// Coefficients (on the full basis) of the dual function N_i^{m*}; i must belong to m.
Eigen::VectorXd dual_function_coeffs(const DualSystem &ds, std::size_t n, std::size_t i);

/// Inverse of D with row/column l removed, computed from D^{-1}.
Eigen::MatrixXd inverse_delete_update(const Eigen::MatrixXd &d_inv, std::size_t l,
                                      double pivot_tol = 1e-14);

struct TotalPositivityReport {
  bool passed = false;
  double min_minor = 0.0;
  std::vector<std::size_t> rows, cols;
  std::size_t minors_checked = 0;
};

/// Enumerates all minors up to `max_order` (n <= 12).
TotalPositivityReport certify_total_positivity(const Eigen::MatrixXd &m, int max_order,
                                               double tol = 1e-10);

/// Worst violation of the checkerboard pattern: min over (i,j) of (-1)^{i+j} a_ij.
double checkerboard_min(const Eigen::MatrixXd &a);

struct DecayPoint {
  std::size_t distance = 0;
  double value = 0.0;
};

struct DecayFit {
  double c_fit = 0.0;
  double q_fit = 0.0;
  std::size_t distances = 0;
};

/// Envelope fit value <= C q^distance. Per-distance maxima are regressed on the distance in
/// log scale, then C is raised until the envelope covers every point. Values below
/// `floor` times the overall maximum are treated as zero. When nothing is left beyond
/// distance 1 the fit reports q = 0 and C = the largest value.
DecayFit fit_decay(const std::vector<DecayPoint> &points, double floor = 1e-13);

/// Decay of |a_ij^m| |conv(F_i, F_j)| in |i - j|.
DecayFit fit_decay(const DualSystem &ds, const BSplineBasis &basis);

} // namespace osp

namespace osp {

/// Full-length coefficients of N_i^{m*} via one banded solve on G(m, m); `subset` sorted.
Eigen::VectorXd dual_vector(const BandedSymmetric &g, const std::vector<std::size_t> &subset,
                            std::size_t i, double residual_tol = 1e-8);

} // namespace osp
