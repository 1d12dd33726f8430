#include "core/partition.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace osp {

Partition1D::Partition1D(double left, double right, std::vector<double> breakpoints)
    : left_(left), right_(right), breakpoints_(std::move(breakpoints)) {
  require(std::isfinite(left) && std::isfinite(right) && left < right,
          ErrorCode::InvalidArgument, "Partition1D: need finite left < right");
  const double min_len = kMinRelativeAtom * (right - left);
  double prev = left;
  for (double b : breakpoints_) {
    require(std::isfinite(b) && b > prev && b < right, ErrorCode::InvalidArgument,
            "Partition1D: breakpoints must be strictly increasing inside (left, right)");
    require(b - prev >= min_len, ErrorCode::InvalidArgument, "Partition1D: atom below minimum length");
    prev = b;
  }
  require(right - prev >= min_len, ErrorCode::InvalidArgument, "Partition1D: atom below minimum length");
}

double Partition1D::point(std::size_t i) const {
  if (i == 0)
    return left_;
  if (i == atom_count())
    return right_;
  return breakpoints_.at(i - 1);
}

Interval Partition1D::atom(std::size_t i) const {
  require(i < atom_count(), ErrorCode::Index, "Partition1D: atom index out of range");
  return {point(i), point(i + 1)};
}

std::vector<double> Partition1D::points() const {
  std::vector<double> p;
  p.reserve(breakpoints_.size() + 2);
  p.push_back(left_);
  p.insert(p.end(), breakpoints_.begin(), breakpoints_.end());
  p.push_back(right_);
  return p;
}

std::size_t Partition1D::atom_of(double x) const {
  if (!(x >= left_ && x <= right_)) {
    std::ostringstream os;
    os << "atom_of: point " << x << " outside [" << left_ << ", " << right_ << "]";
    fail(ErrorCode::OutOfDomain, os.str());
  }
  if (x == right_)
    return atom_count() - 1;
  return static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) -
                                  breakpoints_.begin());
}

Partition1D refine(const Partition1D &p, std::size_t atom, double x) {
  require(atom < p.atom_count(), ErrorCode::Index, "refine: atom index out of range");
  const Interval a = p.atom(atom);
  const double min_len = Partition1D::kMinRelativeAtom * p.length();
  if (!(x > a.lo && x < a.hi) || x - a.lo < min_len || a.hi - x < min_len) {
    std::ostringstream os;
    os.precision(17);
    os << "refine: split point " << x << " not strictly inside atom [" << a.lo << ", " << a.hi << ")";
    fail(ErrorCode::InvalidSplit, os.str());
  }
  std::vector<double> bp = p.breakpoints();
  bp.insert(bp.begin() + static_cast<std::ptrdiff_t>(atom), x);
  return Partition1D(p.left(), p.right(), std::move(bp));
}

Filtration1D::Filtration1D(Partition1D base) { stages_.push_back(std::move(base)); }

void Filtration1D::push(std::size_t atom, double x) {
  stages_.push_back(refine(stages_.back(), atom, x));
  steps_.push_back({atom, x});
}

TensorFiltration::TensorFiltration(std::vector<Partition1D> bases) {
  require(!bases.empty(), ErrorCode::InvalidArgument, "TensorFiltration: need at least one direction");
  for (auto &b : bases)
    factors_.emplace_back(std::move(b));
  counts_.emplace_back(factors_.size(), 0);
}

void TensorFiltration::split(std::size_t dir, std::size_t atom, double x) {
  require(dir < dim(), ErrorCode::Index, "TensorFiltration::split: direction out of range");
  factors_[dir].push(atom, x);
  schedule_.push_back({dir, factors_[dir].step_count()});
  auto next = counts_.back();
  ++next[dir];
  counts_.push_back(std::move(next));
}

const Partition1D &TensorFiltration::partition(std::size_t n, std::size_t dir) const {
  return factors_.at(dir).stage(factor_step(n, dir));
}

std::vector<std::size_t> TensorFiltration::atom_counts(std::size_t n) const {
  std::vector<std::size_t> c(dim());
  for (std::size_t d = 0; d < dim(); ++d)
    c[d] = partition(n, d).atom_count();
  return c;
}

std::size_t TensorFiltration::atom_count(std::size_t n) const {
  std::size_t c = 1;
  for (auto a : atom_counts(n))
    c *= a;
  return c;
}

Interval TensorFiltration::domain(std::size_t dir) const {
  const auto &b = factors_.at(dir).base();
  return {b.left(), b.right()};
}

double TensorFiltration::volume() const {
  double v = 1.0;
  for (std::size_t d = 0; d < dim(); ++d)
    v *= domain(d).length();
  return v;
}

bool TensorFiltration::trivial_base() const {
  return std::all_of(factors_.begin(), factors_.end(),
                     [](const Filtration1D &f) { return f.base().atom_count() == 1; });
}

AtomRef TensorFiltration::atom_of(std::size_t n, std::span<const double> x) const {
  require(n <= steps(), ErrorCode::Index, "atom_of: step out of range");
  require(x.size() == dim(), ErrorCode::InvalidArgument, "atom_of: point dimension mismatch");
  AtomRef a{n, std::vector<std::ptrdiff_t>(dim())};
  for (std::size_t d = 0; d < dim(); ++d)
    a.index[d] = static_cast<std::ptrdiff_t>(partition(n, d).atom_of(x[d]));
  return a;
}

std::vector<Interval> TensorFiltration::atom_box(const AtomRef &a) const {
  require(a.index.size() == dim(), ErrorCode::InvalidArgument, "atom_box: dimension mismatch");
  std::vector<Interval> box(dim());
  for (std::size_t d = 0; d < dim(); ++d) {
    require(a.index[d] >= 0, ErrorCode::Index, "atom_box: negative index");
    box[d] = partition(a.step, d).atom(static_cast<std::size_t>(a.index[d]));
  }
  return box;
}

double TensorFiltration::atom_volume(const AtomRef &a) const {
  double v = 1.0;
  for (const auto &i : atom_box(a))
    v *= i.length();
  return v;
}

TensorFiltration TensorFiltration::prefix(std::size_t n) const {
  require(n <= steps(), ErrorCode::Index, "prefix: step out of range");
  std::vector<Partition1D> bases;
  for (const auto &f : factors_)
    bases.push_back(f.base());
  TensorFiltration out(std::move(bases));
  for (std::size_t s = 1; s <= n; ++s) {
    const auto &e = entry(s);
    const auto &st = factors_[e.dir].step(e.factor_step);
    out.split(e.dir, st.atom, st.x);
  }
  return out;
}

std::vector<std::ptrdiff_t> atom_distance(const TensorFiltration &f, const AtomRef &a,
                                          const AtomRef &b) {
  require(a.step == b.step, ErrorCode::InvalidArgument, "atom_distance: atoms from different time steps");
  require(a.index.size() == f.dim() && b.index.size() == f.dim(), ErrorCode::InvalidArgument,
          "atom_distance: dimension mismatch");
  const auto counts = f.atom_counts(a.step);
  std::vector<std::ptrdiff_t> d(f.dim());
  for (std::size_t i = 0; i < f.dim(); ++i) {
    const auto c = static_cast<std::ptrdiff_t>(counts[i]);
    require(a.index[i] >= 0 && a.index[i] < c && b.index[i] >= 0 && b.index[i] < c,
            ErrorCode::Index, "atom_distance: atom index out of range");
    d[i] = b.index[i] - a.index[i];
  }
  return d;
}

std::ptrdiff_t l1_norm(std::span<const std::ptrdiff_t> v) {
  std::ptrdiff_t s = 0;
  for (auto x : v)
    s += x < 0 ? -x : x;
  return s;
}

} // namespace osp
