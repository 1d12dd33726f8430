#include "core/grid.hpp"

#include "core/error.hpp"
#include "core/tensor_ortho.hpp"

#include <algorithm>
#include <cmath>

namespace osp {

Shape EvalGrid::shape() const {
  Shape s;
  for (const auto &p : points)
    s.push_back(p.size());
  return s;
}

std::vector<double> EvalGrid::volumes() const {
  std::vector<double> v{1.0}, next;
  for (const auto &w : weights) {
    next.resize(v.size() * w.size());
    for (std::size_t o = 0; o < v.size(); ++o)
      for (std::size_t j = 0; j < w.size(); ++j)
        next[o * w.size() + j] = v[o] * w[j];
    v.swap(next);
  }
  return v;
}

double EvalGrid::total_volume() const {
  double v = 1.0;
  for (const auto &p : finest)
    v *= p.length();
  return v;
}

void EvalGrid::unravel(std::size_t flat, std::vector<std::size_t> &idx) const {
  idx.resize(dim());
  for (std::size_t d = dim(); d-- > 0;) {
    idx[d] = flat % points[d].size();
    flat /= points[d].size();
  }
}

EvalGrid make_eval_grid(const std::vector<Partition1D> &finest, std::size_t subcells) {
  require(subcells >= 1, ErrorCode::InvalidArgument, "make_eval_grid: subcells must be >= 1");
  EvalGrid g;
  g.finest = finest;
  for (const auto &p : finest) {
    std::vector<double> pts, w, edges{p.left()};
    std::vector<std::size_t> atoms;
    for (std::size_t a = 0; a < p.atom_count(); ++a) {
      const Interval iv = p.atom(a);
      const double h = iv.length() / static_cast<double>(subcells);
      for (std::size_t s = 0; s < subcells; ++s) {
        const double lo = iv.lo + h * static_cast<double>(s);
        const double hi = s + 1 == subcells ? iv.hi : iv.lo + h * static_cast<double>(s + 1);
        pts.push_back(0.5 * (lo + hi));
        w.push_back(hi - lo);
        edges.push_back(hi);
        atoms.push_back(a);
      }
    }
    g.points.push_back(std::move(pts));
    g.weights.push_back(std::move(w));
    g.edges.push_back(std::move(edges));
    g.atom.push_back(std::move(atoms));
  }
  return g;
}

EvalGrid make_eval_grid(const TensorFiltration &f, std::size_t subcells) {
  std::vector<Partition1D> finest;
  for (std::size_t d = 0; d < f.dim(); ++d)
    finest.push_back(f.partition(f.steps(), d));
  return make_eval_grid(finest, subcells);
}

std::vector<double> sample_on_grid(const EvalGrid &g, const std::function<double(std::span<const double>)> &f) {
  std::vector<double> out(g.size());
  std::vector<std::size_t> idx;
  std::vector<double> x(g.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    g.unravel(i, idx);
    for (std::size_t d = 0; d < g.dim(); ++d)
      x[d] = g.points[d][idx[d]];
    out[i] = f(x);
  }
  return out;
}

std::vector<double> spline_on_grid(const EvalGrid &g, const TensorSpline &s) {
  require(s.bases.size() == g.dim(), ErrorCode::InvalidArgument, "spline_on_grid: dimension mismatch");
  std::vector<Eigen::MatrixXd> colloc;
  for (std::size_t d = 0; d < g.dim(); ++d)
    colloc.push_back(collocation_matrix(s.bases[d], g.points[d]));
  Shape out;
  return kronecker_apply(s.coeffs, s.shape(), colloc, out);
}

std::vector<Eigen::MatrixXd> pool_on_grid(const OrthoSystem &sys, const EvalGrid &g) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t d = 0; d < sys.dim(); ++d) {
    const BSplineBasis &b = sys.final_basis(d);
    // Atom hints are only valid when the grid was cut from the system's own final partition.
    const Eigen::MatrixXd c = b.partition() == g.finest[d] ? collocation_matrix(b, g.points[d], g.atom[d])
                                                           : collocation_matrix(b, g.points[d]);
    out.push_back(c * sys.final_coeffs(d));
  }
  return out;
}

double grid_norm(const EvalGrid &g, std::span<const double> v, double p) {
  require(v.size() == g.size(), ErrorCode::Size, "grid_norm: value count mismatch");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v)
      m = std::max(m, std::abs(x));
    return m;
  }
  const auto vol = g.volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += vol[i] * std::pow(std::abs(v[i]), p);
  return std::pow(s, 1.0 / p);
}

double superlevel_measure(const EvalGrid &g, std::span<const double> v, double lambda) {
  require(v.size() == g.size(), ErrorCode::Size, "superlevel_measure: value count mismatch");
  const auto vol = g.volumes();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > lambda)
      s += vol[i];
  return s;
}

std::vector<double> finest_abs_integrals(const EvalGrid &g, std::span<const double> v) {
  require(v.size() == g.size(), ErrorCode::Size, "finest_abs_integrals: value count mismatch");
  Shape fs;
  for (const auto &p : g.finest)
    fs.push_back(p.atom_count());
  std::vector<double> out(shape_size(fs), 0.0);
  const auto vol = g.volumes();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i) {
    g.unravel(i, idx);
    std::size_t flat = 0;
    for (std::size_t d = 0; d < g.dim(); ++d)
      flat = flat * fs[d] + g.atom[d][idx[d]];
    out[flat] += vol[i] * std::abs(v[i]);
  }
  return out;
}

} // namespace osp
