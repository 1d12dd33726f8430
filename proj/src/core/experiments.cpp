#include "core/experiments.hpp"

#include "core/error.hpp"
#include "core/tensor_ortho.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace osp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<const double *> factor_columns(const OrthoSystem &sys, const std::vector<Eigen::MatrixXd> &pool,
                                           std::size_t l) {
  std::vector<const double *> v;
  const auto &fn = sys.function(l);
  for (std::size_t d = 0; d < sys.dim(); ++d)
    v.push_back(pool[d].col(static_cast<Eigen::Index>(fn.factors[d])).data());
  return v;
}

/// Calls visit(flat_global, flat_local) for the sub-box [lo_d, hi_d) of a tensor grid.
template <class F> void for_subgrid(const Shape &shape, const std::vector<std::size_t> &lo,
                                    const std::vector<std::size_t> &hi, F &&visit) {
  const std::size_t d = shape.size();
  std::vector<std::size_t> idx(lo);
  std::size_t local = 0;
  for (std::size_t i = 0; i < d; ++i)
    if (hi[i] <= lo[i])
      return;
  for (;;) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < d; ++i)
      flat = flat * shape[i] + idx[i];
    visit(flat, local++);
    std::size_t i = d;
    while (i-- > 0) {
      if (++idx[i] < hi[i])
        break;
      idx[i] = lo[i];
    }
    if (i == static_cast<std::size_t>(-1))
      return;
  }
}

/// Prefix sums with one leading zero slab per axis.
struct SummedTable {
  Shape shape;
  std::vector<double> s;

  SummedTable(const Shape &grid, const std::vector<double> &v) {
    for (std::size_t n : grid)
      shape.push_back(n + 1);
    s.assign(shape_size(shape), 0.0);
    std::vector<std::size_t> idx(grid.size(), 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t flat = 0;
      for (std::size_t d = 0; d < grid.size(); ++d)
        flat = flat * shape[d] + idx[d] + 1;
      s[flat] = v[i];
      for (std::size_t d = grid.size(); d-- > 0;) {
        if (++idx[d] < grid[d])
          break;
        idx[d] = 0;
      }
    }
    std::size_t stride = 1;
    for (std::size_t d = shape.size(); d-- > 0;) {
      for (std::size_t i = 0; i < s.size(); ++i)
        if ((i / stride) % shape[d] != 0)
          s[i] += s[i - stride];
      stride *= shape[d];
    }
  }

  double box(const std::vector<std::size_t> &lo, const std::vector<std::size_t> &hi) const {
    const std::size_t d = shape.size();
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      std::size_t flat = 0;
      int sign = 1;
      for (std::size_t i = 0; i < d; ++i) {
        const bool low = (mask >> i) & 1U;
        flat = flat * shape[i] + (low ? lo[i] : hi[i]);
        if (low)
          sign = -sign;
      }
      total += sign * s[flat];
    }
    return total;
  }
};

std::size_t edge_index(const std::vector<double> &edges, double x) {
  auto it = std::lower_bound(edges.begin(), edges.end(), x);
  require(it != edges.end() && *it == x, ErrorCode::InvalidArgument, "grid does not resolve a partition point");
  return static_cast<std::size_t>(it - edges.begin());
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

} // namespace

PointIntegrand::Fn target_function(const std::string &name, const TensorFiltration &f) {
  std::vector<Interval> dom;
  for (std::size_t d = 0; d < f.dim(); ++d)
    dom.push_back(f.domain(d));
  auto unit = [dom](std::span<const double> x, std::size_t d) { return (x[d] - dom[d].lo) / dom[d].length(); };
  if (name == "sin")
    return [=](std::span<const double> x) {
      double p = 1.0;
      for (std::size_t d = 0; d < x.size(); ++d)
        p *= std::sin(kPi * unit(x, d));
      return p;
    };
  if (name == "abs")
    return [=](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d)
        s += std::abs(unit(x, d) - 0.37);
      return s;
    };
  if (name == "jump")
    return [=](std::span<const double> x) { return unit(x, 0) < 0.41 ? 1.0 : 0.0; };
  if (name == "bump")
    return [=](std::span<const double> x) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d)
        r2 += (unit(x, d) - 0.5) * (unit(x, d) - 0.5);
      return std::exp(-50.0 * r2);
    };
  if (name == "poly")
    return [=](std::span<const double> x) {
      double p = 1.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double t = unit(x, d);
        p *= 1.0 + t - 2.0 * t * t;
      }
      return p;
    };
  fail(ErrorCode::InvalidArgument, "unknown target function '" + name + "'");
}

std::vector<std::vector<int>> make_sign_vectors(const std::string &model, std::size_t len, std::size_t count,
                                                std::mt19937_64 &rng) {
  std::vector<std::vector<int>> out;
  if (model == "identity")
    return {std::vector<int>(len, 1)};
  if (model == "all_flip")
    return {std::vector<int>(len, -1)};
  if (model == "enumerate" && len <= 16) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << len); ++mask) {
      std::vector<int> s(len);
      for (std::size_t i = 0; i < len; ++i)
        s[i] = (mask >> i) & 1U ? -1 : 1;
      out.push_back(std::move(s));
    }
    return out;
  }
  require(model == "random" || model == "enumerate", ErrorCode::InvalidArgument, "unknown sign model '" + model + "'");
  out.emplace_back(len, 1);
  std::bernoulli_distribution coin(0.5);
  while (out.size() < count) {
    std::vector<int> s(len);
    for (auto &e : s)
      e = coin(rng) ? 1 : -1;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> expansion_coefficients(const OrthoSystem &sys, const PointIntegrand::Fn &f, std::size_t count) {
  const Projector proj(sys.filtration(), sys.orders());
  const PointIntegrand in(sys.dim(), f);
  const auto loads = proj.loads(sys.filtration().steps(), in);
  return expand_loads(sys, loads, count == 0 ? sys.size() : std::min(count, sys.size()));
}

WeakTypeResult sign_flip_experiment(const OrthoSystem &sys, std::span<const double> coeffs,
                                    const std::vector<std::vector<int>> &signs, std::span<const double> lambdas,
                                    bool relative, const EvalGrid &grid) {
  require(coeffs.size() <= sys.size(), ErrorCode::Size, "sign_flip: more coefficients than functions");
  const auto pool = pool_on_grid(sys, grid);
  const Shape shape = grid.shape();
  const auto vol = grid.volumes();
  WeakTypeResult r;
  std::vector<double> s(grid.size(), 0.0);
  for (std::size_t l = 0; l < coeffs.size(); ++l) {
    add_rank1(s, shape, coeffs[l], factor_columns(sys, pool, l));
    double n1 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      n1 += vol[i] * std::abs(s[i]);
    r.l1_sup = std::max(r.l1_sup, n1);
  }
  require(r.l1_sup > 1e-300, ErrorCode::Degenerate, "sign_flip: ||f||_1 vanishes");
  const double scale = relative ? r.l1_sup / grid.total_volume() : 1.0;
  std::vector<double> env(grid.size());
  for (std::size_t sv = 0; sv < signs.size(); ++sv) {
    require(signs[sv].size() >= coeffs.size(), ErrorCode::Size, "sign_flip: sign vector too short");
    std::fill(s.begin(), s.end(), 0.0);
    std::fill(env.begin(), env.end(), 0.0);
    for (std::size_t l = 0; l < coeffs.size(); ++l) {
      add_rank1(s, shape, signs[sv][l] * coeffs[l], factor_columns(sys, pool, l));
      for (std::size_t i = 0; i < s.size(); ++i)
        env[i] = std::max(env[i], std::abs(s[i]));
    }
    double best = 0.0;
    for (double lf : lambdas) {
      const double lambda = lf * scale;
      const double m = superlevel_measure(grid, env, lambda);
      const double ratio = lambda * m / r.l1_sup;
      r.rows.push_back({sv, lambda, m, ratio});
      best = std::max(best, ratio);
    }
    r.max_ratio_per_sign.push_back(best);
    r.max_ratio = std::max(r.max_ratio, best);
  }
  return r;
}

AeSweepResult ae_convergence_sweep(const OrthoSystem &sys, const PointIntegrand::Fn &f, std::size_t subcells) {
  AeSweepResult r;
  r.grid = make_eval_grid(sys.filtration(), subcells);
  r.reference = sample_on_grid(r.grid, f);
  const auto coeffs = expansion_coefficients(sys, f);
  const auto pool = pool_on_grid(sys, r.grid);
  const Shape shape = r.grid.shape();
  std::vector<double> s(r.grid.size(), 0.0), err(r.grid.size());
  std::size_t block = 0;
  for (std::size_t l = 0; l < coeffs.size(); ++l) {
    add_rank1(s, shape, coeffs[l], factor_columns(sys, pool, l));
    while (block < sys.blocks() && sys.block_end(block) < l + 1)
      ++block;
    if (block < sys.blocks() && sys.block_end(block) == l + 1) {
      double sup = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        err[i] = std::abs(r.reference[i] - s[i]);
        sup = std::max(sup, err[i]);
      }
      r.rows.push_back({l + 1, sup, median(err)});
    }
  }
  r.final_error = err;
  return r;
}

std::vector<AtomRange> valid_runs(const Partition1D &p, int k, double gamma) {
  const std::size_t m = p.atom_count();
  const std::size_t kk = static_cast<std::size_t>(k);
  const double c = 1.0 / (3.0 * k * gamma);
  std::vector<AtomRange> out;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t len = 1; len <= 3 * kk && a + len <= m; ++len) {
      const std::size_t b = a + len - 1;
      if (!(len >= kk || a == 0 || b + 1 == m))
        continue;
      const double u = p.point(b + 1) - p.point(a);
      const double ends = std::min(p.atom(a).length(), p.atom(b).length());
      if (ends >= c * u * (1.0 - 1e-12))
        out.emplace_back(a, b);
    }
  return out;
}

namespace {

bool covered(const TensorFiltration &ext, std::size_t a, const TensorFiltration &f, const std::vector<int> &k,
             double gamma) {
  for (std::size_t d = 0; d < f.dim(); ++d) {
    const Partition1D &p = ext.partition(a, d);
    std::vector<Interval> runs;
    for (const auto &r : valid_runs(p, k[d], gamma))
      runs.push_back({p.point(r.first), p.point(r.second + 1)});
    std::sort(runs.begin(), runs.end(), [](const Interval &x, const Interval &y) { return x.lo < y.lo; });
    const Partition1D &base = f.partition(f.steps(), d);
    for (std::size_t i = 0; i < base.atom_count(); ++i) {
      const Interval A = base.atom(i);
      double reach = A.lo;
      for (const auto &r : runs)
        if (A.contains(r) && r.lo <= reach)
          reach = std::max(reach, r.hi);
      if (reach < A.hi)
        return false;
    }
  }
  return true;
}

void add_dyadic_level(TensorFiltration &f) {
  for (std::size_t d = 0; d < f.dim(); ++d) {
    const std::size_t m = f.partition(f.steps(), d).atom_count();
    for (std::size_t j = 0; j < m; ++j) {
      const Interval iv = f.partition(f.steps(), d).atom(2 * j);
      f.split(d, 2 * j, 0.5 * (iv.lo + iv.hi));
    }
  }
}

} // namespace

Collection build_collection_C(const TensorFiltration &f, const std::vector<int> &k, double gamma,
                              std::size_t max_levels) {
  require(k.size() == f.dim(), ErrorCode::InvalidArgument, "build_collection_C: one order per direction");
  require(gamma >= 1.0, ErrorCode::InvalidArgument, "build_collection_C: gamma must be >= 1");
  Collection c;
  c.filtration = f;
  c.base_steps = f.steps();
  c.gamma = gamma;
  c.orders = k;
  while (!covered(c.filtration, c.filtration.steps(), f, k, gamma)) {
    require(c.extension_levels < max_levels, ErrorCode::InvalidArgument,
            "build_collection_C: coverage not reached within the level limit");
    add_dyadic_level(c.filtration);
    ++c.extension_levels;
  }
  const TensorFiltration &ext = c.filtration;
  c.a = ext.steps();
  const std::size_t dim = f.dim();
  std::vector<std::vector<AtomRange>> cur(dim);
  for (std::size_t d = 0; d < dim; ++d)
    cur[d] = valid_runs(ext.partition(0, d), k[d], gamma);
  auto emit = [&](std::size_t n, const std::vector<const std::vector<AtomRange> *> &sets) {
    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t d = 0; d < dim; ++d)
      if (sets[d]->empty())
        return;
    for (;;) {
      Box b;
      b.n = n;
      b.volume = 1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const AtomRange r = (*sets[d])[idx[d]];
        const Partition1D &p = ext.partition(n, d);
        b.atoms.push_back(r);
        b.sides.push_back({p.point(r.first), p.point(r.second + 1)});
        b.volume *= b.sides.back().length();
      }
      c.boxes.push_back(std::move(b));
      std::size_t d = dim;
      while (d-- > 0) {
        if (++idx[d] < sets[d]->size())
          break;
        idx[d] = 0;
      }
      if (d == static_cast<std::size_t>(-1))
        return;
    }
  };
  {
    std::vector<const std::vector<AtomRange> *> sets;
    for (auto &v : cur)
      sets.push_back(&v);
    emit(0, sets);
  }
  for (std::size_t n = 1; n <= c.a; ++n) {
    const std::size_t dir = ext.entry(n).dir;
    const Partition1D &prev = ext.partition(n - 1, dir), &now = ext.partition(n, dir);
    std::vector<std::pair<double, double>> old;
    for (const auto &r : cur[dir])
      old.emplace_back(prev.point(r.first), prev.point(r.second + 1));
    std::sort(old.begin(), old.end());
    cur[dir] = valid_runs(now, k[dir], gamma);
    std::vector<AtomRange> fresh;
    for (const auto &r : cur[dir])
      if (!std::binary_search(old.begin(), old.end(), std::make_pair(now.point(r.first), now.point(r.second + 1))))
        fresh.push_back(r);
    std::vector<const std::vector<AtomRange> *> sets;
    for (std::size_t d = 0; d < dim; ++d)
      sets.push_back(d == dir ? &fresh : &cur[d]);
    emit(n, sets);
  }
  return c;
}

CZResult cz_decompose(const EvalGrid &grid, std::span<const double> f, double lambda, const Collection &c) {
  require(!c.boxes.empty(), ErrorCode::InvalidArgument, "cz_decompose: empty collection");
  require(lambda > 0.0, ErrorCode::InvalidArgument, "cz_decompose: lambda must be positive");
  require(f.size() == grid.size(), ErrorCode::Size, "cz_decompose: value count mismatch");
  const std::size_t dim = grid.dim();
  require(dim == c.filtration.dim(), ErrorCode::InvalidArgument, "cz_decompose: dimension mismatch");
  for (std::size_t d = 0; d < dim; ++d) {
    const Partition1D &fin = c.filtration.partition(c.a, d);
    require(is_refinement(fin, grid.finest[d]), ErrorCode::InvalidArgument,
            "cz_decompose: grid does not refine the collection's filtration");
    std::vector<std::size_t> per_atom(fin.atom_count(), 0);
    for (double x : grid.points[d])
      ++per_atom[fin.atom_of(x)];
    for (std::size_t n : per_atom)
      require(n >= static_cast<std::size_t>(c.orders[d]), ErrorCode::InvalidArgument,
              "cz_decompose: need at least k grid cells per atom");
  }
  const Shape shape = grid.shape();
  const auto vol = grid.volumes();
  std::vector<double> mass(f.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mass[i] = vol[i] * std::abs(f[i]);
    l1 += mass[i];
  }
  CZResult r;
  r.lambda = lambda;
  r.overlap_ceiling = 1.0;
  for (int k : c.orders)
    r.overlap_ceiling *= 3.0 * k * (3.0 * k + 1.0) / 2.0;
  const SummedTable table(shape, mass);
  auto range = [&](const Box &b, std::vector<std::size_t> &lo, std::vector<std::size_t> &hi) {
    lo.resize(dim);
    hi.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = edge_index(grid.edges[d], b.sides[d].lo);
      hi[d] = edge_index(grid.edges[d], b.sides[d].hi);
    }
  };
  std::vector<std::size_t> lo, hi, over;
  for (std::size_t i = 0; i < c.boxes.size(); ++i) {
    range(c.boxes[i], lo, hi);
    const double avg = table.box(lo, hi) / c.boxes[i].volume;
    r.max_average = std::max(r.max_average, avg);
    if (avg > lambda)
      over.push_back(i);
  }
  r.owner.assign(f.size(), -1);
  r.h.assign(f.begin(), f.end());
  r.g.assign(f.size(), 0.0);
  auto finish = [&]() {
    double h2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      h2 += vol[i] * r.h[i] * r.h[i];
      r.h_sup = std::max(r.h_sup, std::abs(r.h[i]));
      r.reconstruction_error = std::max(r.reconstruction_error, std::abs(f[i] - r.h[i] - r.g[i]));
    }
    r.h_ratio = l1 > 0.0 ? h2 / (lambda * l1) : 0.0;
  };
  if (l1 > lambda * grid.total_volume() / 2.0) {
    r.trivial = true;
    finish();
    return r;
  }
  std::stable_sort(over.begin(), over.end(),
                   [&](std::size_t a, std::size_t b) { return c.boxes[a].volume > c.boxes[b].volume; });
  std::vector<std::size_t> maximal;
  for (std::size_t i : over) {
    const Box &b = c.boxes[i];
    bool inside = false;
    for (std::size_t j : maximal) {
      bool all = true;
      for (std::size_t d = 0; all && d < dim; ++d)
        all = c.boxes[j].sides[d].contains(b.sides[d]);
      if (all) {
        inside = true;
        break;
      }
    }
    if (!inside)
      maximal.push_back(i);
  }
  std::sort(maximal.begin(), maximal.end(), [&](std::size_t a, std::size_t b) {
    const Box &x = c.boxes[a], &y = c.boxes[b];
    if (x.n != y.n)
      return x.n < y.n;
    return x.atoms < y.atoms;
  });
  r.e = maximal;

  std::vector<std::size_t> count(f.size(), 0);
  for (std::size_t j = 0; j < r.e.size(); ++j) {
    range(c.boxes[r.e[j]], lo, hi);
    for_subgrid(shape, lo, hi, [&](std::size_t flat, std::size_t) {
      ++count[flat];
      if (r.owner[flat] < 0)
        r.owner[flat] = static_cast<std::ptrdiff_t>(j);
    });
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    r.overlap_max = std::max(r.overlap_max, count[i]);
    if (r.owner[i] >= 0)
      r.h[i] = 0.0;
  }
  for (std::size_t j = 0; j < r.e.size(); ++j) {
    const Box &b = c.boxes[r.e[j]];
    range(b, lo, hi);
    Shape sub;
    std::vector<Eigen::MatrixXd> fwd, inv, back;
    for (std::size_t d = 0; d < dim; ++d) {
      sub.push_back(hi[d] - lo[d]);
      const Partition1D &p = c.filtration.partition(b.n, d);
      std::vector<double> inner;
      for (std::size_t a = b.atoms[d].first + 1; a <= b.atoms[d].second; ++a)
        inner.push_back(p.point(a));
      const BSplineBasis basis(Partition1D(b.sides[d].lo, b.sides[d].hi, inner), c.orders[d]);
      std::vector<double> pts(grid.points[d].begin() + static_cast<std::ptrdiff_t>(lo[d]),
                              grid.points[d].begin() + static_cast<std::ptrdiff_t>(hi[d]));
      const Eigen::MatrixXd bm = collocation_matrix(basis, pts);
      Eigen::MatrixXd bw = bm.transpose();
      for (std::size_t q = 0; q < pts.size(); ++q)
        bw.col(static_cast<Eigen::Index>(q)) *= grid.weights[d][lo[d] + q];
      const Eigen::MatrixXd gram = bw * bm;
      Eigen::LLT<Eigen::MatrixXd> llt(gram);
      require(llt.info() == Eigen::Success, ErrorCode::Conditioning, "cz_decompose: singular local Gram matrix");
      inv.push_back(llt.solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols())));
      fwd.push_back(std::move(bw));
      back.push_back(bm);
    }
    std::vector<double> v(shape_size(sub), 0.0);
    for_subgrid(shape, lo, hi, [&](std::size_t flat, std::size_t local) {
      if (r.owner[flat] == static_cast<std::ptrdiff_t>(j))
        v[local] = f[flat];
    });
    Shape s1, s2, s3;
    const auto loads = kronecker_apply(v, sub, fwd, s1);
    const auto coef = kronecker_apply(loads, s1, inv, s2);
    const auto q = kronecker_apply(coef, s2, back, s3);
    double q2 = 0.0;
    for_subgrid(shape, lo, hi, [&](std::size_t flat, std::size_t local) {
      q2 += vol[flat] * q[local] * q[local];
      r.h[flat] += q[local];
      r.g[flat] += v[local] - q[local];
    });
    r.local_projection_max = std::max(r.local_projection_max, q2 / (lambda * lambda * b.volume));
  }
  finish();
  return r;
}

double Polynomial::operator()(const double *x) const {
  double pw[3][16];
  for (std::size_t d = 0; d < dim; ++d) {
    pw[d][0] = 1.0;
    for (int e = 1; e <= degree; ++e)
      pw[d][e] = pw[d][e - 1] * x[d];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    double t = coeffs[i];
    for (std::size_t d = 0; d < dim; ++d)
      t *= pw[d][exponents[i][d]];
    s += t;
  }
  return s;
}

Polynomial random_polynomial(std::size_t dim, int degree, std::mt19937_64 &rng) {
  require(dim >= 1 && dim <= 3, ErrorCode::InvalidArgument, "random_polynomial: dim must lie in 1..3");
  require(degree >= 0 && degree <= 15, ErrorCode::InvalidArgument, "random_polynomial: degree must lie in 0..15");
  Polynomial p;
  p.dim = dim;
  p.degree = degree;
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<int> e(dim, 0);
  for (;;) {
    if (std::accumulate(e.begin(), e.end(), 0) <= degree) {
      p.exponents.push_back(e);
      p.coeffs.push_back(g(rng));
    }
    std::size_t d = dim;
    while (d-- > 0) {
      if (++e[d] <= degree)
        break;
      e[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1))
      break;
  }
  return p;
}

double sup_on_box(const Polynomial &p, const std::vector<Interval> &box) {
  const std::size_t dim = p.dim;
  const std::size_t g = static_cast<std::size_t>(2 * p.degree + 5);
  std::vector<std::pair<double, std::vector<double>>> top;
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  for (;;) {
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = box[d].lo + box[d].length() * static_cast<double>(idx[d]) / static_cast<double>(g - 1);
    const double v = std::abs(p(x.data()));
    top.emplace_back(v, x);
    std::size_t d = dim;
    while (d-- > 0) {
      if (++idx[d] < g)
        break;
      idx[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1))
      break;
  }
  const std::size_t keep = std::min<std::size_t>(4, top.size());
  std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(keep), top.end(),
                    [](const auto &a, const auto &b) { return a.first > b.first; });
  double best = top.front().first;
  for (std::size_t t = 0; t < keep; ++t) {
    std::vector<double> y = top[t].second;
    double val = top[t].first;
    std::vector<double> h(dim);
    for (std::size_t d = 0; d < dim; ++d)
      h[d] = box[d].length() / static_cast<double>(g - 1);
    for (int iter = 0; iter < 200; ++iter) {
      bool moved = false;
      for (std::size_t d = 0; d < dim; ++d)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> z = y;
          z[d] = std::clamp(z[d] + sgn * h[d], box[d].lo, box[d].hi);
          const double v = std::abs(p(z.data()));
          if (v > val) {
            val = v;
            y = z;
            moved = true;
          }
        }
      if (!moved) {
        double hmax = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          h[d] *= 0.5;
          hmax = std::max(hmax, h[d] / box[d].length());
        }
        if (hmax < 1e-10)
          break;
      }
    }
    best = std::max(best, val);
  }
  return best;
}

double remez_fraction(const Polynomial &p, const std::vector<Interval> &box, double threshold, std::size_t samples,
                      std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(p.dim);
  std::size_t hit = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t d = 0; d < p.dim; ++d)
      x[d] = box[d].lo + u(rng) * box[d].length();
    if (std::abs(p(x.data())) >= threshold)
      ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(samples);
}

RemezReport remez_check(int degree, std::size_t dim, std::size_t trials, std::size_t samples, std::uint64_t seed) {
  require(degree >= 0 && degree <= 6, ErrorCode::InvalidArgument, "remez_check: degree must lie in 0..6");
  require(dim >= 1 && dim <= 3, ErrorCode::InvalidArgument, "remez_check: dim must lie in 1..3");
  require(samples >= 1, ErrorCode::InvalidArgument, "remez_check: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> corner(-2.0, 2.0), side(0.1, 3.0);
  RemezReport r;
  r.trials = trials;
  r.samples = samples;
  r.sigma = 0.5 / std::sqrt(static_cast<double>(samples));
  const double factor = std::pow(8.0 * static_cast<double>(dim), -degree);
  for (std::size_t t = 0; t < trials; ++t) {
    const Polynomial p = random_polynomial(dim, degree, rng);
    std::vector<Interval> box;
    for (std::size_t d = 0; d < dim; ++d) {
      const double lo = corner(rng);
      box.push_back({lo, lo + side(rng)});
    }
    const double frac = remez_fraction(p, box, factor * sup_on_box(p, box), samples, rng);
    r.min_fraction = std::min(r.min_fraction, frac);
    if (frac < 0.5 - 3.0 * r.sigma)
      ++r.violations;
  }
  return r;
}

namespace {

std::vector<int> config_orders(const ExperimentConfig &c, std::size_t dim) {
  if (c.orders.empty())
    return std::vector<int>(dim, 2);
  require(c.orders.size() == dim, ErrorCode::InvalidArgument, "config: one order per direction");
  return c.orders;
}

std::vector<double> config_coefficients(const ExperimentConfig &c, const OrthoSystem &sys, std::mt19937_64 &rng) {
  const std::size_t count = c.coefficient_count == 0 ? sys.size() : std::min(c.coefficient_count, sys.size());
  if (c.coefficient_model == "target")
    return expansion_coefficients(sys, target_function(c.target, sys.filtration()), count);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(count);
  for (auto &x : a)
    x = g(rng);
  return a;
}

} // namespace

nlohmann::json run_experiment(const std::string &kind, const ExperimentConfig &c) {
  nlohmann::json out;
  out["format_version"] = 1;
  out["kind"] = kind;
  out["seed"] = c.seed;
  if (kind == "remez") {
    const auto r = remez_check(c.remez_degree, c.remez_dim, c.remez_trials, c.remez_samples, c.seed);
    out["trials"] = r.trials;
    out["samples"] = r.samples;
    out["violations"] = r.violations;
    out["min_fraction"] = r.min_fraction;
    out["sigma"] = r.sigma;
    out["passed"] = r.violations == 0;
    return out;
  }
  const TensorFiltration f = config_filtration(c);
  const auto k = config_orders(c, f.dim());
  std::mt19937_64 rng(c.seed);
  if (kind == "weak-type") {
    const OrthoSystem sys = build_system(f, k);
    const auto a = config_coefficients(c, sys, rng);
    const auto signs = make_sign_vectors(c.sign_model, a.size(), c.sign_vectors, rng);
    const EvalGrid grid = make_eval_grid(f, c.grid_subcells);
    WeakTypeResult r = sign_flip_experiment(sys, a, signs, c.lambda_grid, c.lambda_relative, grid);
    const auto g = regularity_parameter(f, k);
    const auto b = direction_regularity_parameter(f, k, c.beta_cap);
    out["rows"] = nlohmann::json::array();
    for (const auto &row : r.rows)
      out["rows"].push_back(
          {{"sign_vector", row.sign_vector}, {"lambda", row.lambda}, {"measure", row.measure}, {"ratio", row.ratio}});
    out["max_ratio"] = r.max_ratio;
    out["max_ratio_per_sign"] = r.max_ratio_per_sign;
    out["l1_sup"] = r.l1_sup;
    out["gamma"] = g.gamma;
    if (b.cap_exceeded)
      out["beta"] = "cap_exceeded";
    else
      out["beta"] = b.beta;
    out["q_fit"] = fit_tensor_decay(sys).fit.q_fit;
    out["functions"] = a.size();
    out["passed"] = std::isfinite(r.max_ratio);
    return out;
  }
  if (kind == "ae-sweep") {
    const OrthoSystem sys = build_system(f, k);
    const auto r = ae_convergence_sweep(sys, target_function(c.target, f), c.grid_subcells);
    out["target"] = c.target;
    out["rows"] = nlohmann::json::array();
    bool finite = true;
    for (const auto &row : r.rows) {
      out["rows"].push_back(
          {{"terms", row.terms}, {"sup_error", row.sup_error}, {"median_error", row.median_error}});
      finite = finite && std::isfinite(row.sup_error);
    }
    out["passed"] = finite;
    return out;
  }
  if (kind == "cz") {
    const OrthoSystem sys = build_system(f, k);
    const auto a = config_coefficients(c, sys, rng);
    const double gamma = regularity_parameter(f, k).gamma;
    const Collection col = build_collection_C(f, k, gamma);
    std::size_t sub = c.grid_subcells;
    for (int kk : k)
      sub = std::max(sub, static_cast<std::size_t>(kk));
    const EvalGrid grid = make_eval_grid(col.filtration, sub);
    const auto pool = pool_on_grid(sys, grid);
    std::vector<double> fv(grid.size(), 0.0);
    for (std::size_t l = 0; l < a.size(); ++l)
      add_rank1(fv, grid.shape(), a[l], factor_columns(sys, pool, l));
    const double scale = c.lambda_relative ? grid_norm(grid, fv, 1.0) / grid.total_volume() : 1.0;
    out["gamma"] = gamma;
    out["collection_size"] = col.boxes.size();
    out["extension_levels"] = col.extension_levels;
    out["rows"] = nlohmann::json::array();
    bool ok = true;
    for (double lf : c.lambda_grid) {
      const auto r = cz_decompose(grid, fv, lf * scale, col);
      out["rows"].push_back({{"lambda", r.lambda},
                             {"trivial", r.trivial},
                             {"sets", r.e.size()},
                             {"overlap_max", r.overlap_max},
                             {"overlap_ceiling", r.overlap_ceiling},
                             {"local_projection_max", r.local_projection_max},
                             {"h_ratio", r.h_ratio},
                             {"reconstruction_error", r.reconstruction_error}});
      ok = ok && r.reconstruction_error <= 1e-10 && static_cast<double>(r.overlap_max) <= r.overlap_ceiling;
    }
    out["passed"] = ok;
    return out;
  }
  fail(ErrorCode::InvalidArgument, "unknown experiment '" + kind + "'");
}

std::string experiment_csv(const std::string &kind, const nlohmann::json &result) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (kind == "weak-type") {
    os << "lambda,measure,ratio,sign_vector\n";
    for (const auto &r : result.at("rows"))
      os << r.at("lambda").get<double>() << ',' << r.at("measure").get<double>() << ','
         << r.at("ratio").get<double>() << ',' << r.at("sign_vector").get<std::size_t>() << '\n';
  } else if (kind == "ae-sweep") {
    os << "terms,sup_error,median_error\n";
    for (const auto &r : result.at("rows"))
      os << r.at("terms").get<std::size_t>() << ',' << r.at("sup_error").get<double>() << ','
         << r.at("median_error").get<double>() << '\n';
  } else if (kind == "cz") {
    os << "lambda,trivial,sets,overlap_max,overlap_ceiling,local_projection_max,h_ratio,reconstruction_error\n";
    for (const auto &r : result.at("rows"))
      os << r.at("lambda").get<double>() << ',' << (r.at("trivial").get<bool>() ? 1 : 0) << ','
         << r.at("sets").get<std::size_t>() << ',' << r.at("overlap_max").get<std::size_t>() << ','
         << r.at("overlap_ceiling").get<double>() << ',' << r.at("local_projection_max").get<double>() << ','
         << r.at("h_ratio").get<double>() << ',' << r.at("reconstruction_error").get<double>() << '\n';
  } else if (kind == "remez") {
    os << "trials,samples,violations,min_fraction,sigma\n";
    os << result.at("trials").get<std::size_t>() << ',' << result.at("samples").get<std::size_t>() << ','
       << result.at("violations").get<std::size_t>() << ',' << result.at("min_fraction").get<double>() << ','
       << result.at("sigma").get<double>() << '\n';
  } else {
    fail(ErrorCode::InvalidArgument, "no CSV layout for '" + kind + "'");
  }
  return os.str();
}

} // namespace osp
