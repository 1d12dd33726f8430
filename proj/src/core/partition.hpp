#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace osp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(const Interval &o) const { return lo <= o.lo && o.hi <= hi; }
  bool operator==(const Interval &) const = default;
};

/// Partition of [left, right] into atoms [b_i, b_{i+1}); the last atom is closed.
class Partition1D {
public:
  Partition1D(double left, double right, std::vector<double> breakpoints = {});

  double left() const { return left_; }
  double right() const { return right_; }
  double length() const { return right_ - left_; }
  const std::vector<double> &breakpoints() const { return breakpoints_; }
  std::size_t atom_count() const { return breakpoints_.size() + 1; }
  Interval atom(std::size_t i) const;
  /// Endpoint i of the atom list, 0 <= i <= atom_count().
  double point(std::size_t i) const;
  /// All atom endpoints including the interval ends.
  std::vector<double> points() const;
  /// Atom containing x: interior boundaries belong to the right atom, `right` to the last.
  std::size_t atom_of(double x) const;

  bool operator==(const Partition1D &) const = default;

  /// Smallest admissible atom length relative to |I|.
  static constexpr double kMinRelativeAtom = 1e-12;

private:
  double left_;
  double right_;
  std::vector<double> breakpoints_;
};

/// Splits atom `atom` at `x`; x must lie strictly inside the atom.
Partition1D refine(const Partition1D &p, std::size_t atom, double x);

struct SplitStep {
  std::size_t atom = 0;
  double x = 0.0;
};

/// Univariate filtration in standard form: each step splits one atom in two.
class Filtration1D {
public:
  explicit Filtration1D(Partition1D base);

  void push(std::size_t atom, double x);
  std::size_t step_count() const { return steps_.size(); }
  /// Partition after `s` steps.
  const Partition1D &stage(std::size_t s) const { return stages_.at(s); }
  const Partition1D &base() const { return stages_.front(); }
  /// Split performed by step s >= 1.
  const SplitStep &step(std::size_t s) const { return steps_.at(s - 1); }
  const std::vector<SplitStep> &steps() const { return steps_; }

private:
  std::vector<SplitStep> steps_;
  std::vector<Partition1D> stages_;
};

struct ScheduleEntry {
  std::size_t dir = 0;
  /// 1-based step index inside the factor filtration.
  std::size_t factor_step = 0;
};

/// Atom of the tensor sigma-algebra at global step `step`.
struct AtomRef {
  std::size_t step = 0;
  std::vector<std::ptrdiff_t> index;
  bool operator==(const AtomRef &) const = default;
};

/// Tensor filtration F_n = F_n^1 x ... x F_n^d where every global step advances one factor.
class TensorFiltration {
public:
  explicit TensorFiltration(std::vector<Partition1D> bases);

  /// Appends a global step splitting atom `atom` of direction `dir` at `x`.
  void split(std::size_t dir, std::size_t atom, double x);

  std::size_t dim() const { return factors_.size(); }
  std::size_t steps() const { return schedule_.size(); }
  const Filtration1D &factor(std::size_t dir) const { return factors_.at(dir); }
  const ScheduleEntry &entry(std::size_t n) const { return schedule_.at(n - 1); }
  const std::vector<ScheduleEntry> &schedule() const { return schedule_; }
  /// Number of factor steps of direction `dir` applied after global step n.
  std::size_t factor_step(std::size_t n, std::size_t dir) const { return counts_.at(n).at(dir); }
  const Partition1D &partition(std::size_t n, std::size_t dir) const;
  std::vector<std::size_t> atom_counts(std::size_t n) const;
  std::size_t atom_count(std::size_t n) const;
  Interval domain(std::size_t dir) const;
  double volume() const;
  bool trivial_base() const;

  AtomRef atom_of(std::size_t n, std::span<const double> x) const;
  /// The rectangle of an atom as per-direction intervals.
  std::vector<Interval> atom_box(const AtomRef &a) const;
  double atom_volume(const AtomRef &a) const;

  /// First n global steps.
  TensorFiltration prefix(std::size_t n) const;

private:
  std::vector<Filtration1D> factors_;
  std::vector<ScheduleEntry> schedule_;
  std::vector<std::vector<std::size_t>> counts_;
};

/// Componentwise signed index difference d_n(A, B) = index(B) - index(A).
std::vector<std::ptrdiff_t> atom_distance(const TensorFiltration &f, const AtomRef &a,
                                          const AtomRef &b);

std::ptrdiff_t l1_norm(std::span<const std::ptrdiff_t> v);

} // namespace osp
