#include "core/bspline.hpp"

#include "core/error.hpp"
#include "core/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace osp {

BSplineBasis::BSplineBasis(Partition1D partition, int order)
    : partition_(std::move(partition)), k_(order) {
  require(order >= 1 && order <= 32, ErrorCode::InvalidArgument, "BSplineBasis: order must be in 1..32");
  knots_.reserve(dimension() + k_);
  for (int i = 0; i < k_ - 1; ++i)
    knots_.push_back(partition_.left());
  for (double p : partition_.points())
    knots_.push_back(p);
  for (int i = 0; i < k_ - 1; ++i)
    knots_.push_back(partition_.right());
}

std::size_t BSplineBasis::eval_on_atom(std::size_t atom, double x, double *out) const {
  require(atom < partition_.atom_count(), ErrorCode::Index, "eval_on_atom: atom out of range");
  const std::size_t mu = knot_span(atom);
  const auto &t = knots_;
  // Cox-de Boor triangle; left/right hold x - t and t - x differences.
  double left[33], right[33];
  out[0] = 1.0;
  for (int j = 1; j < k_; ++j) {
    left[j] = x - t[mu + 1 - j];
    right[j] = t[mu + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
  return atom;
}

std::size_t BSplineBasis::eval_nonzero(double x, double *out) const {
  return eval_on_atom(partition_.atom_of(x), x, out);
}

double BSplineBasis::eval(std::size_t i, double x) const {
  require(i < dimension(), ErrorCode::Index, "BSplineBasis::eval: index out of range");
  double v[33];
  const std::size_t first = eval_nonzero(x, v);
  if (i < first || i >= first + static_cast<std::size_t>(k_))
    return 0.0;
  return v[i - first];
}

std::pair<std::size_t, std::size_t> BSplineBasis::support_atoms(std::size_t i) const {
  require(i < dimension(), ErrorCode::Index, "BSplineBasis::support: index out of range");
  const std::size_t m = partition_.atom_count();
  const std::size_t lo = i + 1 >= static_cast<std::size_t>(k_) ? i + 1 - k_ : 0;
  const std::size_t hi = std::min(m - 1, i);
  return {lo, hi};
}

Interval BSplineBasis::support(std::size_t i) const {
  const auto [lo, hi] = support_atoms(i);
  return {partition_.point(lo), partition_.point(hi + 1)};
}

std::size_t BSplineBasis::largest_atom(std::size_t i) const {
  const auto [lo, hi] = support_atoms(i);
  std::size_t best = lo;
  for (std::size_t a = lo + 1; a <= hi; ++a)
    if (partition_.atom(a).length() > partition_.atom(best).length())
      best = a;
  return best;
}

Spline::Spline(BSplineBasis b, Eigen::VectorXd c) : basis(std::move(b)), coeffs(std::move(c)) {
  require(static_cast<std::size_t>(coeffs.size()) == basis.dimension(), ErrorCode::Size,
          "Spline: coefficient count does not match basis dimension");
}

double Spline::eval_on_atom(std::size_t atom, double x) const {
  double v[33];
  const std::size_t first = basis.eval_on_atom(atom, x, v);
  double s = 0.0;
  for (int r = 0; r < basis.order(); ++r)
    s += coeffs[first + r] * v[r];
  return s;
}

double Spline::operator()(double x) const { return eval_on_atom(basis.partition().atom_of(x), x); }

bool is_refinement(const Partition1D &coarse, const Partition1D &fine) {
  if (coarse.left() != fine.left() || coarse.right() != fine.right())
    return false;
  const auto &fb = fine.breakpoints();
  return std::all_of(coarse.breakpoints().begin(), coarse.breakpoints().end(),
                     [&](double b) { return std::binary_search(fb.begin(), fb.end(), b); });
}

Partition1D common_refinement(const Partition1D &a, const Partition1D &b) {
  require(a.left() == b.left() && a.right() == b.right(), ErrorCode::InvalidArgument,
          "common_refinement: partitions live on different intervals");
  std::vector<double> u;
  std::set_union(a.breakpoints().begin(), a.breakpoints().end(), b.breakpoints().begin(),
                 b.breakpoints().end(), std::back_inserter(u));
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return Partition1D(a.left(), a.right(), std::move(u));
}

double inner_product(const Spline &f, const Spline &g) {
  const Partition1D p = common_refinement(f.basis.partition(), g.basis.partition());
  const int n = (f.basis.order() + g.basis.order()) / 2;
  std::vector<double> nodes, weights;
  double s = 0.0;
  for (std::size_t a = 0; a < p.atom_count(); ++a) {
    const Interval iv = p.atom(a);
    nodes.clear();
    weights.clear();
    gauss_on_interval(std::max(n, 1), iv.lo, iv.hi, nodes, weights);
    const double mid = 0.5 * (iv.lo + iv.hi);
    const std::size_t af = f.basis.partition().atom_of(mid);
    const std::size_t ag = g.basis.partition().atom_of(mid);
    for (std::size_t q = 0; q < nodes.size(); ++q)
      s += weights[q] * f.eval_on_atom(af, nodes[q]) * g.eval_on_atom(ag, nodes[q]);
  }
  return s;
}

namespace {

// Golden-section maximization of |f| on [a, b] within one polynomial piece.
double refine_max(const Spline &f, std::size_t atom, double a, double b) {
  constexpr double invphi = 0.6180339887498949;
  const double tol = 1e-13 * (b - a) + 1e-300;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = std::abs(f.eval_on_atom(atom, c));
  double fd = std::abs(f.eval_on_atom(atom, d));
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = std::abs(f.eval_on_atom(atom, c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = std::abs(f.eval_on_atom(atom, d));
    }
  }
  return std::max(fc, fd);
}

double gauss_piece(const Spline &f, std::size_t atom, double a, double b, double p, int n) {
  const GaussRule &rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (int q = 0; q < n; ++q)
    s += rule.weights[q] * std::pow(std::abs(f.eval_on_atom(atom, mid + half * rule.nodes[q])), p);
  return s * half;
}

// Adaptive Gauss on a root-free piece; exact after one level when |f|^p is a polynomial.
double adaptive_piece(const Spline &f, std::size_t atom, double a, double b, double p, int n,
                      double whole, int depth) {
  const double coarse = gauss_piece(f, atom, a, b, p, n);
  const double m = 0.5 * (a + b);
  const double fine = gauss_piece(f, atom, a, m, p, n) + gauss_piece(f, atom, m, b, p, n);
  if (depth >= 40 || std::abs(fine - coarse) <= 1e-14 * std::max(whole, std::abs(fine)))
    return fine;
  return adaptive_piece(f, atom, a, m, p, n, whole, depth + 1) +
         adaptive_piece(f, atom, m, b, p, n, whole, depth + 1);
}

double bisect_root(const Spline &f, std::size_t atom, double a, double b, double fa) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b)
      break;
    const double fm = f.eval_on_atom(atom, m);
    if (fm == 0.0)
      return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

} // namespace

double max_abs_on_atom(const Spline &f, std::size_t atom) {
  const Interval iv = f.basis.partition().atom(atom);
  const int samples = 8 * f.basis.order() + 1;
  std::vector<double> xs(samples), vs(samples);
  for (int i = 0; i < samples; ++i) {
    xs[i] = iv.lo + iv.length() * i / (samples - 1);
    vs[i] = std::abs(f.eval_on_atom(atom, xs[i]));
  }
  double best = *std::max_element(vs.begin(), vs.end());
  if (f.basis.order() <= 2)
    return best; // piecewise linear: the max sits at a sample (endpoint)
  for (int i = 1; i + 1 < samples; ++i)
    if (vs[i] >= vs[i - 1] && vs[i] >= vs[i + 1])
      best = std::max(best, refine_max(f, atom, xs[i - 1], xs[i + 1]));
  return best;
}

double lp_norm_on_atom(const Spline &f, std::size_t atom, double p) {
  require(p >= 1.0, ErrorCode::InvalidArgument, "lp_norm: p must be >= 1");
  if (std::isinf(p))
    return max_abs_on_atom(f, atom);
  const int k = f.basis.order();
  const Interval iv = f.basis.partition().atom(atom);
  if (p == 2.0)
    return std::sqrt(gauss_piece(f, atom, iv.lo, iv.hi, 2.0, k));
  // Split at sign changes so that each piece carries a smooth integrand.
  const int samples = 8 * k + 1;
  std::vector<double> cuts{iv.lo};
  double xa = iv.lo, fa = f.eval_on_atom(atom, xa);
  for (int i = 1; i < samples; ++i) {
    const double xb = iv.lo + iv.length() * i / (samples - 1);
    const double fb = f.eval_on_atom(atom, xb);
    if (fa != 0.0 && fb != 0.0 && (fa > 0) != (fb > 0))
      cuts.push_back(bisect_root(f, atom, xa, xb, fa));
    xa = xb;
    fa = fb;
  }
  cuts.push_back(iv.hi);
  const double pint = std::round(p);
  const int n = std::max(4, static_cast<int>(std::ceil((pint * (k - 1) + 1) / 2.0)) + 1);
  double whole = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
    whole += gauss_piece(f, atom, cuts[c], cuts[c + 1], p, n);
  double s = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
    if (cuts[c + 1] > cuts[c])
      s += adaptive_piece(f, atom, cuts[c], cuts[c + 1], p, n, whole, 0);
  return std::pow(s, 1.0 / p);
}

double lp_norm(const Spline &f, double p) {
  require(p >= 1.0, ErrorCode::InvalidArgument, "lp_norm: p must be >= 1");
  const std::size_t m = f.basis.partition().atom_count();
  if (std::isinf(p)) {
    double best = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      best = std::max(best, max_abs_on_atom(f, a));
    return best;
  }
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    s += std::pow(lp_norm_on_atom(f, a, p), p);
  return std::pow(s, 1.0 / p);
}

std::vector<double> insertion_alphas(const BSplineBasis &basis, std::size_t atom, double x) {
  const int k = basis.order();
  const std::size_t mu = basis.knot_span(atom);
  const auto &t = basis.knots();
  std::vector<double> alpha(basis.dimension() + 1, 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i + k <= mu + 1)
      alpha[i] = 1.0;
    else if (i <= mu)
      alpha[i] = (x - t[i]) / (t[i + k - 1] - t[i]);
  }
  return alpha;
}

namespace {

// Applies one knot insertion to the rows of `m` (rows indexed by basis functions).
Eigen::MatrixXd insert_rows(const BSplineBasis &basis, const Eigen::MatrixXd &m, double x,
                            std::size_t atom) {
  const auto alpha = insertion_alphas(basis, atom, x);
  const Eigen::Index n = static_cast<Eigen::Index>(basis.dimension());
  Eigen::MatrixXd out(n + 1, m.cols());
  for (Eigen::Index i = 0; i <= n; ++i) {
    const double a = alpha[i];
    if (a == 1.0)
      out.row(i) = m.row(i);
    else if (a == 0.0)
      out.row(i) = m.row(i - 1);
    else
      out.row(i) = a * m.row(i) + (1.0 - a) * m.row(i - 1);
  }
  return out;
}

std::vector<double> new_points(const Partition1D &coarse, const Partition1D &fine) {
  require(is_refinement(coarse, fine), ErrorCode::InvalidArgument,
          "knot insertion: target partition does not refine the source");
  std::vector<double> pts;
  std::set_difference(fine.breakpoints().begin(), fine.breakpoints().end(), coarse.breakpoints().begin(),
                      coarse.breakpoints().end(), std::back_inserter(pts));
  return pts;
}

} // namespace

Eigen::VectorXd insert_knot(const BSplineBasis &basis, const Eigen::VectorXd &coeffs, double x) {
  const std::size_t atom = basis.partition().atom_of(x);
  (void)refine(basis.partition(), atom, x); // validates the split
  return insert_rows(basis, coeffs, x, atom);
}

Eigen::MatrixXd insertion_matrix(const BSplineBasis &coarse, const BSplineBasis &fine) {
  require(coarse.order() == fine.order(), ErrorCode::InvalidArgument, "insertion_matrix: order mismatch");
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(coarse.dimension(), coarse.dimension());
  BSplineBasis cur = coarse;
  for (double x : new_points(coarse.partition(), fine.partition())) {
    const std::size_t atom = cur.partition().atom_of(x);
    t = insert_rows(cur, t, x, atom);
    cur = BSplineBasis(refine(cur.partition(), atom, x), cur.order());
  }
  return t;
}

Spline refine_to(const Spline &f, const BSplineBasis &fine) {
  require(f.basis.order() == fine.order(), ErrorCode::InvalidArgument, "refine_to: order mismatch");
  Eigen::MatrixXd c = f.coeffs;
  BSplineBasis cur = f.basis;
  for (double x : new_points(f.basis.partition(), fine.partition())) {
    const std::size_t atom = cur.partition().atom_of(x);
    c = insert_rows(cur, c, x, atom);
    cur = BSplineBasis(refine(cur.partition(), atom, x), cur.order());
  }
  return Spline(fine, c.col(0));
}

TensorSpline::TensorSpline(std::vector<BSplineBasis> b) : bases(std::move(b)) {
  coeffs.assign(shape_size(shape()), 0.0);
}

TensorSpline::TensorSpline(std::vector<BSplineBasis> b, std::vector<double> c)
    : bases(std::move(b)), coeffs(std::move(c)) {
  require(coeffs.size() == shape_size(shape()), ErrorCode::Size,
          "TensorSpline: coefficient tensor does not match basis dimensions");
}

Shape TensorSpline::shape() const {
  Shape s;
  for (const auto &b : bases)
    s.push_back(b.dimension());
  return s;
}

double TensorSpline::operator()(std::span<const double> x) const {
  const std::size_t d = bases.size();
  require(x.size() == d, ErrorCode::InvalidArgument, "TensorSpline: point dimension mismatch");
  std::vector<std::array<double, 33>> vals(d);
  std::vector<std::size_t> first(d), strides(d, 1);
  const Shape sh = shape();
  for (std::size_t j = d; j-- > 1;)
    strides[j - 1] = strides[j] * sh[j];
  for (std::size_t j = 0; j < d; ++j)
    first[j] = bases[j].eval_nonzero(x[j], vals[j].data());
  // Odometer over the k_1 x ... x k_d active coefficients.
  std::vector<int> idx(d, 0);
  double s = 0.0;
  while (true) {
    double w = 1.0;
    std::size_t off = 0;
    for (std::size_t j = 0; j < d; ++j) {
      w *= vals[j][idx[j]];
      off += (first[j] + idx[j]) * strides[j];
    }
    s += w * coeffs[off];
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++idx[j] < bases[j].order())
        break;
      idx[j] = 0;
      if (j == 0)
        return s;
    }
    if (d == 0)
      return s;
  }
}

Eigen::MatrixXd collocation_matrix(const BSplineBasis &basis, std::span<const double> points) {
  std::vector<std::size_t> atoms(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    atoms[p] = basis.partition().atom_of(points[p]);
  return collocation_matrix(basis, points, atoms);
}

Eigen::MatrixXd collocation_matrix(const BSplineBasis &basis, std::span<const double> points,
                                   std::span<const std::size_t> atoms) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(points.size(), basis.dimension());
  double v[33];
  for (std::size_t p = 0; p < points.size(); ++p) {
    const std::size_t first = basis.eval_on_atom(atoms[p], points[p], v);
    for (int r = 0; r < basis.order(); ++r)
      m(p, first + r) = v[r];
  }
  return m;
}

} // namespace osp
