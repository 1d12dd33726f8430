#include "core/ortho1d.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <cmath>

namespace osp {

std::vector<std::size_t> characteristic_candidates(const Partition1D &p, std::size_t l_atom, int k) {
  std::vector<std::size_t> out;
  const std::size_t lo = l_atom >= static_cast<std::size_t>(k) ? l_atom - k : 0;
  const std::size_t hi = std::min(p.atom_count() - 1, l_atom + k);
  for (std::size_t a = lo; a <= hi; ++a)
    out.push_back(a);
  return out;
}

std::size_t characteristic_interval(const Partition1D &p, std::size_t l_atom, int k, JRule rule) {
  require(l_atom + 1 < p.atom_count(), ErrorCode::Index, "characteristic_interval: L_n has no right neighbour");
  if (rule == JRule::LongestInWindow) {
    std::size_t best = l_atom;
    for (std::size_t a : characteristic_candidates(p, l_atom, k))
      if (p.atom(a).length() > p.atom(best).length() || (p.atom(a).length() == p.atom(best).length() && a < best))
        best = a;
    return best;
  }
  const BSplineBasis basis(p, k);
  const double x = p.point(l_atom + 1);
  std::size_t best = basis.dimension();
  double best_len = 0.0;
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const Interval s = basis.support(i);
    if (s.lo <= x && x <= s.hi && (best == basis.dimension() || s.length() < best_len)) {
      best = i;
      best_len = s.length();
    }
  }
  return basis.largest_atom(best);
}

OrthoFunction next_ortho_function(const Filtration1D &filtration, std::size_t n, int k, JRule rule) {
  require(n >= 1 && n <= filtration.step_count(), ErrorCode::NotStandardForm,
          "next_ortho_function: step must be in 1..N");
  const Partition1D &prev = filtration.stage(n - 1);
  const Partition1D &cur = filtration.stage(n);
  const SplitStep &st = filtration.step(n);
  require(cur.atom_count() == prev.atom_count() + 1, ErrorCode::NotStandardForm,
          "next_ortho_function: step does not split exactly one atom");
  const BSplineBasis coarse(prev, k);
  const BSplineBasis fine(cur, k);
  const auto alpha = insertion_alphas(coarse, st.atom, st.x);

  // Left null vector of the insertion matrix: w_j a_j + w_{j+1} (1 - a_{j+1}) = 0.
  const std::size_t mu = coarse.knot_span(st.atom);
  const std::size_t lo = mu + 1 - k, hi = mu + 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fine.dimension()));
  w[hi] = 1.0;
  for (std::size_t j = hi; j-- > lo;)
    w[j] = -w[j + 1] * (1.0 - alpha[j + 1]) / alpha[j];

  BandedCholesky chol(gram_matrix(fine));
  Eigen::VectorXd c = chol.solve(w);
  const double norm2 = c.dot(w);
  require(norm2 > 0.0 && std::isfinite(norm2), ErrorCode::Conditioning,
          "next_ortho_function: degenerate orthogonal complement");
  c /= std::sqrt(norm2);

  std::size_t sign_index = mu + 1 - static_cast<std::size_t>((k + 1) / 2);
  if (!(std::abs(c[sign_index]) > 1e-12 * c.cwiseAbs().maxCoeff()))
    c.cwiseAbs().maxCoeff(&sign_index);
  if (c[sign_index] < 0.0)
    c = -c;

  OrthoFunction f{n, Spline(fine, c), 0, st.atom, sign_index};
  f.j_atom = characteristic_interval(cur, st.atom, k, rule);
  return f;
}

std::vector<OrthoFunction> ortho_system_1d(const Filtration1D &filtration, int k, JRule rule) {
  std::vector<OrthoFunction> out;
  out.reserve(filtration.step_count());
  for (std::size_t n = 1; n <= filtration.step_count(); ++n)
    out.push_back(next_ortho_function(filtration, n, k, rule));
  return out;
}

std::vector<DecayPoint> franklin_decay_points(const OrthoFunction &f, std::size_t j_atom) {
  const Partition1D &p = f.spline.basis.partition();
  const Interval j = p.atom(j_atom);
  std::vector<DecayPoint> pts;
  for (std::size_t a = 0; a < p.atom_count(); ++a) {
    const Interval at = p.atom(a);
    const double conv = std::max(at.hi, j.hi) - std::min(at.lo, j.lo);
    pts.push_back({a > j_atom ? a - j_atom : j_atom - a,
                   max_abs_on_atom(f.spline, a) * conv / std::sqrt(j.length())});
  }
  return pts;
}

DecayFit fit_franklin_decay(const OrthoFunction &f) { return fit_decay(franklin_decay_points(f, f.j_atom)); }

double candidate_score(const OrthoFunction &f, std::size_t atom) {
  return fit_decay(franklin_decay_points(f, atom)).c_fit;
}

} // namespace osp
