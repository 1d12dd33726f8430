#pragma once

#include "core/bspline.hpp"
#include "core/linalg.hpp"
#include "core/partition.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace osp {

class OrthoSystem;

/// Midpoint grid: every finest atom is cut into `subcells` equal cells per direction.
struct EvalGrid {
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> weights;
  /// Cell boundaries per axis (points.size() + 1 entries).
  std::vector<std::vector<double>> edges;
  /// Finest atom holding each axis point.
  std::vector<std::vector<std::size_t>> atom;
  std::vector<Partition1D> finest;

  std::size_t dim() const { return points.size(); }
  Shape shape() const;
  std::size_t size() const { return shape_size(shape()); }
  /// Cell volumes, flat row-major.
  std::vector<double> volumes() const;
  double total_volume() const;
  /// Flat index -> per-axis indices.
  void unravel(std::size_t flat, std::vector<std::size_t> &idx) const;
};

EvalGrid make_eval_grid(const std::vector<Partition1D> &finest, std::size_t subcells);
EvalGrid make_eval_grid(const TensorFiltration &f, std::size_t subcells);

std::vector<double> sample_on_grid(const EvalGrid &g, const std::function<double(std::span<const double>)> &f);
std::vector<double> spline_on_grid(const EvalGrid &g, const TensorSpline &s);
/// Per-axis values of all pool functions: rows = axis points, cols = pool ids.
std::vector<Eigen::MatrixXd> pool_on_grid(const OrthoSystem &sys, const EvalGrid &g);

/// (sum_cells vol |v|^p)^{1/p}; p = infinity gives max |v|.
double grid_norm(const EvalGrid &g, std::span<const double> v, double p);
/// Grid measure of {|v| > lambda}.
double superlevel_measure(const EvalGrid &g, std::span<const double> v, double lambda);
/// Integrals of |v| over the finest atoms (tensor with the finest atom counts as shape).
std::vector<double> finest_abs_integrals(const EvalGrid &g, std::span<const double> v);

} // namespace osp
