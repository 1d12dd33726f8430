#include "core/projection.hpp"

#include "core/error.hpp"
#include "core/gram.hpp"
#include "core/quadrature.hpp"
#include "core/tensor_ortho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osp {

Shape TensorQuadrature::shape() const {
  Shape s;
  for (const auto &n : nodes)
    s.push_back(n.size());
  return s;
}

TensorQuadrature make_quadrature(const std::vector<Partition1D> &parts, const std::vector<int> &per_atom) {
  require(parts.size() == per_atom.size(), ErrorCode::InvalidArgument, "make_quadrature: size mismatch");
  TensorQuadrature q;
  for (std::size_t d = 0; d < parts.size(); ++d) {
    std::vector<double> x, w;
    for (std::size_t a = 0; a < parts[d].atom_count(); ++a) {
      const Interval iv = parts[d].atom(a);
      gauss_on_interval(per_atom[d], iv.lo, iv.hi, x, w);
    }
    q.nodes.push_back(std::move(x));
    q.weights.push_back(std::move(w));
  }
  return q;
}

namespace {

template <class F> std::vector<double> sample_points(const TensorQuadrature &q, F &&f) {
  const Shape shape = q.shape();
  std::vector<double> out(shape_size(shape));
  std::vector<std::size_t> idx(shape.size(), 0);
  std::vector<double> x(shape.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t d = 0; d < shape.size(); ++d)
      x[d] = q.nodes[d][idx[d]];
    out[i] = f(std::span<const double>(x));
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d])
        break;
      idx[d] = 0;
    }
  }
  return out;
}

Partition1D subdivide(const Partition1D &p, int halvings) {
  if (halvings == 0)
    return p;
  const std::size_t parts = std::size_t{1} << halvings;
  std::vector<double> bp;
  for (std::size_t a = 0; a < p.atom_count(); ++a) {
    const Interval iv = p.atom(a);
    if (a > 0)
      bp.push_back(iv.lo);
    for (std::size_t s = 1; s < parts; ++s)
      bp.push_back(iv.lo + iv.length() * static_cast<double>(s) / static_cast<double>(parts));
  }
  return Partition1D(p.left(), p.right(), std::move(bp));
}

std::vector<double> loads_on(const std::vector<BSplineBasis> &bases, const std::vector<Partition1D> &parts,
                             const std::vector<int> &per_atom, const Integrand &f) {
  const TensorQuadrature q = make_quadrature(parts, per_atom);
  const std::vector<double> vals = f.sample(q);
  std::vector<Eigen::MatrixXd> w;
  for (std::size_t d = 0; d < bases.size(); ++d) {
    Eigen::MatrixXd c = collocation_matrix(bases[d], q.nodes[d]).transpose();
    for (std::size_t j = 0; j < q.weights[d].size(); ++j)
      c.col(static_cast<Eigen::Index>(j)) *= q.weights[d][j];
    w.push_back(std::move(c));
  }
  Shape out;
  return kronecker_apply(vals, q.shape(), w, out);
}

double max_abs(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

} // namespace

std::vector<double> PointIntegrand::sample(const TensorQuadrature &q) const {
  require(q.nodes.size() == dim_, ErrorCode::InvalidArgument, "PointIntegrand: dimension mismatch");
  return sample_points(q, fn_);
}

std::vector<double> SplineIntegrand::sample(const TensorQuadrature &q) const {
  require(q.nodes.size() == dim(), ErrorCode::InvalidArgument, "SplineIntegrand: dimension mismatch");
  std::vector<Eigen::MatrixXd> c;
  for (std::size_t d = 0; d < dim(); ++d)
    c.push_back(collocation_matrix(s_.bases[d], q.nodes[d]));
  Shape out;
  return kronecker_apply(s_.coeffs, s_.shape(), c, out);
}

GridIntegrand::GridIntegrand(const EvalGrid &grid, std::vector<double> values)
    : shape_(grid.shape()), values_(std::move(values)) {
  require(values_.size() == grid.size(), ErrorCode::Size, "GridIntegrand: value count mismatch");
  for (const auto &e : grid.edges)
    cells_.emplace_back(e.front(), e.back(), std::vector<double>(e.begin() + 1, e.end() - 1));
}

std::vector<double> GridIntegrand::sample(const TensorQuadrature &q) const {
  require(q.nodes.size() == dim(), ErrorCode::InvalidArgument, "GridIntegrand: dimension mismatch");
  std::vector<std::vector<std::size_t>> cell(dim());
  for (std::size_t d = 0; d < dim(); ++d)
    for (double x : q.nodes[d])
      cell[d].push_back(cells_[d].atom_of(x));
  const Shape shape = q.shape();
  std::vector<double> out(shape_size(shape));
  std::vector<std::size_t> idx(dim(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dim(); ++d)
      flat = flat * shape_[d] + cell[d][idx[d]];
    out[i] = values_[flat];
    for (std::size_t d = dim(); d-- > 0;) {
      if (++idx[d] < shape[d])
        break;
      idx[d] = 0;
    }
  }
  return out;
}

Projector::Projector(const TensorFiltration &filtration, std::vector<int> orders, QuadratureOptions qopts)
    : filtration_(filtration), orders_(std::move(orders)), qopts_(qopts) {
  require(orders_.size() == filtration_.dim(), ErrorCode::InvalidArgument, "Projector: one order per direction");
}

std::vector<BSplineBasis> Projector::bases(std::size_t n) const {
  require(n <= filtration_.steps(), ErrorCode::Index, "Projector: step out of range");
  std::vector<BSplineBasis> b;
  for (std::size_t d = 0; d < orders_.size(); ++d)
    b.emplace_back(filtration_.partition(n, d), orders_[d]);
  return b;
}

const BandedCholesky &Projector::cholesky(std::size_t dir, std::size_t stage) const {
  auto &slot = chol_[{dir, stage}];
  if (!slot)
    slot = std::make_unique<BandedCholesky>(
        gram_matrix(BSplineBasis(filtration_.factor(dir).stage(stage), orders_[dir])));
  return *slot;
}

std::vector<double> Projector::loads(std::size_t n, const Integrand &f, double *error) const {
  require(f.dim() == orders_.size(), ErrorCode::InvalidArgument, "Projector: integrand dimension mismatch");
  const auto b = bases(n);
  std::vector<Partition1D> parts;
  std::vector<int> exact;
  bool all_exact = true;
  for (std::size_t d = 0; d < b.size(); ++d) {
    const Partition1D *pc = f.pieces(d);
    parts.push_back(pc ? common_refinement(b[d].partition(), *pc) : b[d].partition());
    exact.push_back(f.exact_nodes(d, orders_[d]));
    all_exact = all_exact && exact.back() > 0;
  }
  if (all_exact) {
    for (auto &e : exact)
      e = std::max(e, 1);
    if (error)
      *error = 0.0;
    return loads_on(b, parts, exact, f);
  }
  std::vector<int> lo, hi;
  for (int k : orders_) {
    lo.push_back(k + 3);
    hi.push_back(2 * k + 6);
  }
  double est = std::numeric_limits<double>::infinity();
  std::vector<double> best;
  for (int h = 0; h <= qopts_.max_halvings; ++h) {
    std::vector<Partition1D> sub;
    for (const auto &p : parts)
      sub.push_back(subdivide(p, h));
    const auto a = loads_on(b, sub, lo, f);
    best = loads_on(b, sub, hi, f);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      diff = std::max(diff, std::abs(a[i] - best[i]));
    const double scale = max_abs(best);
    est = scale > 0.0 ? diff / scale : diff;
    if (est <= qopts_.tol)
      break;
  }
  if (error)
    *error = est;
  return best;
}

TensorSpline Projector::solve(std::size_t n, std::vector<double> loads) const {
  auto b = bases(n);
  TensorSpline s(std::move(b));
  require(loads.size() == s.coeffs.size(), ErrorCode::Size, "Projector::solve: load count mismatch");
  std::vector<const BandedCholesky *> f;
  for (std::size_t d = 0; d < orders_.size(); ++d)
    f.push_back(&cholesky(d, filtration_.factor_step(n, d)));
  kronecker_solve(loads, s.shape(), f);
  s.coeffs = std::move(loads);
  return s;
}

TensorSpline Projector::project(std::size_t n, const Integrand &f, double *error) const {
  return solve(n, loads(n, f, error));
}

std::vector<double> coarsen_loads(const TensorFiltration &f, const std::vector<int> &orders, std::size_t n,
                                  const std::vector<double> &loads) {
  require(n >= 1 && n <= f.steps(), ErrorCode::Index, "coarsen_loads: step out of range");
  const std::size_t dir = f.entry(n).dir;
  Shape shape;
  for (std::size_t d = 0; d < f.dim(); ++d)
    shape.push_back(f.partition(n, d).atom_count() + static_cast<std::size_t>(orders[d]) - 1);
  const BSplineBasis coarse(f.partition(n - 1, dir), orders[dir]);
  const BSplineBasis fine(f.partition(n, dir), orders[dir]);
  Shape out;
  return mode_product(loads, shape, dir, insertion_matrix(coarse, fine).transpose(), out);
}

TensorSpline project_partial_loads(const OrthoSystem &sys, const Projector &proj, std::size_t n,
                                   std::size_t m, const std::vector<double> &loads) {
  require(n < sys.blocks(), ErrorCode::Index, "project_partial: block not built");
  const std::size_t mn = sys.block_end(n) - sys.block_begin(n);
  require(m <= mn, ErrorCode::Index, "project_partial: m exceeds the block size");
  const TensorFiltration &f = sys.filtration();
  TensorSpline out(proj.bases(n));
  require(loads.size() == out.coeffs.size(), ErrorCode::Size, "project_partial: load count mismatch");
  if (n > 0) {
    const TensorSpline prev = proj.solve(n - 1, coarsen_loads(f, sys.orders(), n, loads));
    const std::size_t dir = f.entry(n).dir;
    Shape s;
    out.coeffs = mode_product(prev.coeffs, prev.shape(), dir,
                              insertion_matrix(prev.bases[dir], out.bases[dir]), s);
  }
  const Shape shape = out.shape();
  std::map<std::pair<std::size_t, std::size_t>, Eigen::VectorXd> lifted;
  auto vec = [&](std::size_t dir, std::size_t id) -> const Eigen::VectorXd & {
    auto it = lifted.find({dir, id});
    if (it != lifted.end())
      return it->second;
    const FactorFunction &ff = sys.pool(dir)[id];
    Eigen::MatrixXd c = sys.lift(dir, ff.coeffs, ff.stage, f.factor_step(n, dir));
    return lifted.emplace(std::make_pair(dir, id), Eigen::VectorXd(c.col(0))).first->second;
  };
  std::vector<const double *> vecs(sys.dim());
  for (std::size_t mu = 0; mu < m; ++mu) {
    const auto &fn = sys.function(sys.block_begin(n) + mu);
    for (std::size_t d = 0; d < sys.dim(); ++d)
      vecs[d] = vec(d, fn.factors[d]).data();
    const double c = contract_rank1(loads, shape, vecs);
    add_rank1(out.coeffs, shape, c, vecs);
  }
  return out;
}

TensorSpline project_partial(const OrthoSystem &sys, const Projector &proj, std::size_t n, std::size_t m,
                             const Integrand &f) {
  return project_partial_loads(sys, proj, n, m, proj.loads(n, f));
}

double kernel_norm_1d(const BSplineBasis &basis) {
  const Eigen::MatrixXd g = gram_matrix(basis).dense();
  const Eigen::MatrixXd a = g.llt().solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  const int k = basis.order();
  const auto &gl = gauss_legendre(k + 2);
  std::vector<double> vals(static_cast<std::size_t>(k));
  double best = 0.0;
  const Partition1D &p = basis.partition();
  for (std::size_t at = 0; at < p.atom_count(); ++at) {
    const Interval iv = p.atom(at);
    std::vector<double> xs{iv.lo, iv.hi};
    for (double t : gl.nodes)
      xs.push_back(iv.lo + 0.5 * (t + 1.0) * iv.length());
    for (double x : xs) {
      const std::size_t i0 = basis.eval_on_atom(at, x, vals.data());
      Eigen::VectorXd c = Eigen::VectorXd::Zero(a.rows());
      for (int j = 0; j < k; ++j)
        c += vals[static_cast<std::size_t>(j)] * a.col(static_cast<Eigen::Index>(i0) + j);
      best = std::max(best, lp_norm(Spline(basis, c), 1.0));
    }
  }
  return best;
}

OperatorNorms operator_norms(const TensorFiltration &f, const std::vector<int> &orders, std::size_t n) {
  require(orders.size() == f.dim(), ErrorCode::InvalidArgument, "operator_norms: one order per direction");
  require(n <= f.steps(), ErrorCode::Index, "operator_norms: step out of range");
  OperatorNorms r;
  double prod = 1.0;
  for (std::size_t d = 0; d < f.dim(); ++d) {
    r.per_direction.push_back(kernel_norm_1d(BSplineBasis(f.partition(n, d), orders[d])));
    prod *= r.per_direction.back();
  }
  r.l1 = r.linf = prod;
  return r;
}

MaximalEvaluator::MaximalEvaluator(const TensorFiltration &f, double rho, EvalGrid grid, std::size_t last_step)
    : f_(f), rho_(rho), grid_(std::move(grid)), last_(std::min(last_step, f.steps())) {
  require(rho >= 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "MaximalEvaluator: rho must lie in [0, 1)");
  require(grid_.dim() == f.dim(), ErrorCode::InvalidArgument, "MaximalEvaluator: dimension mismatch");
  for (std::size_t d = 0; d < f.dim(); ++d)
    require(is_refinement(f.partition(last_, d), grid_.finest[d]), ErrorCode::InvalidArgument,
            "MaximalEvaluator: grid does not refine the filtration");
}

MaximalEvaluator::DirKernel MaximalEvaluator::kernel(std::size_t n, std::size_t dir) const {
  const Partition1D &p = f_.partition(n, dir);
  const Partition1D &fine = grid_.finest[dir];
  DirKernel dk;
  dk.k.resize(static_cast<Eigen::Index>(p.atom_count()), static_cast<Eigen::Index>(fine.atom_count()));
  for (std::size_t j = 0; j < fine.atom_count(); ++j) {
    const Interval fj = fine.atom(j);
    const std::size_t s = p.atom_of(0.5 * (fj.lo + fj.hi));
    dk.stage_of_fine.push_back(s);
    const Interval bs = p.atom(s);
    for (std::size_t a = 0; a < p.atom_count(); ++a) {
      const Interval ia = p.atom(a);
      const double conv = std::max(ia.hi, bs.hi) - std::min(ia.lo, bs.lo);
      const double dist = a > s ? static_cast<double>(a - s) : static_cast<double>(s - a);
      dk.k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = std::pow(rho_, dist) / conv;
    }
  }
  return dk;
}

void MaximalEvaluator::add_term(const std::vector<DirKernel> &ks, const std::vector<double> &integrals,
                                std::vector<double> &out, bool take_max) const {
  Shape fs;
  for (const auto &p : grid_.finest)
    fs.push_back(p.atom_count());
  std::vector<Eigen::MatrixXd> mats;
  for (const auto &k : ks)
    mats.push_back(k.k);
  Shape rs;
  const auto r = kronecker_apply(integrals, fs, mats, rs);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    grid_.unravel(i, idx);
    std::size_t flat = 0;
    for (std::size_t d = 0; d < rs.size(); ++d)
      flat = flat * rs[d] + ks[d].stage_of_fine[grid_.atom[d][idx[d]]];
    out[i] = take_max ? std::max(out[i], r[flat]) : r[flat];
  }
}

std::vector<double> MaximalEvaluator::operator()(std::span<const double> values) const {
  const auto integrals = finest_abs_integrals(grid_, values);
  std::vector<double> out(grid_.size(), 0.0);
  std::vector<DirKernel> ks;
  std::vector<std::size_t> stage;
  for (std::size_t d = 0; d < f_.dim(); ++d) {
    ks.push_back(kernel(0, d));
    stage.push_back(0);
  }
  for (std::size_t n = 0; n <= last_; ++n) {
    for (std::size_t d = 0; d < f_.dim(); ++d)
      if (f_.factor_step(n, d) != stage[d]) {
        ks[d] = kernel(n, d);
        stage[d] = f_.factor_step(n, d);
      }
    add_term(ks, integrals, out, true);
  }
  return out;
}

std::vector<double> MaximalEvaluator::step_term(std::size_t n, std::span<const double> values) const {
  require(n <= last_, ErrorCode::Index, "MaximalEvaluator: step out of range");
  std::vector<DirKernel> ks;
  for (std::size_t d = 0; d < f_.dim(); ++d)
    ks.push_back(kernel(n, d));
  std::vector<double> out(grid_.size(), 0.0);
  add_term(ks, finest_abs_integrals(grid_, values), out, false);
  return out;
}

DominationReport check_domination(std::span<const double> p_values, std::span<const double> maximal) {
  require(p_values.size() == maximal.size(), ErrorCode::Size, "check_domination: size mismatch");
  DominationReport r;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    const double a = std::abs(p_values[i]);
    double ratio = 0.0;
    if (maximal[i] > 0.0)
      ratio = a / maximal[i];
    else if (a > 0.0)
      ratio = std::numeric_limits<double>::infinity();
    if (ratio > r.max_ratio) {
      r.max_ratio = ratio;
      r.argmax = i;
    }
  }
  r.finite = std::isfinite(r.max_ratio);
  return r;
}

std::vector<WeakTypePoint> weak_type_profile(const EvalGrid &g, std::span<const double> v, double norm,
                                             std::span<const double> lambdas) {
  require(norm > 0.0, ErrorCode::Degenerate, "weak_type_profile: zero norm");
  std::vector<WeakTypePoint> out;
  for (double l : lambdas) {
    const double m = superlevel_measure(g, v, l);
    out.push_back({l, m, l * m / norm});
  }
  return out;
}

} // namespace osp
