#include "oracles.hpp"
#include "support.hpp"

#include "core/error.hpp"
#include "core/generators.hpp"
#include "core/ortho1d.hpp"
#include "core/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace osp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Filtration1D random_1d(std::size_t steps, std::uint64_t seed, double min_fraction = 0.1) {
  return random_filtration(1, steps, seed, min_fraction).factor(0);
}

Eigen::MatrixXd sample(const oracle::Quad &q, const std::vector<Spline> &fs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(q.x[0].size()), static_cast<Eigen::Index>(fs.size()));
  for (std::size_t c = 0; c < fs.size(); ++c)
    for (std::size_t r = 0; r < q.x[0].size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = fs[c](q.x[0][r]);
  return m;
}

Eigen::VectorXd weights(const oracle::Quad &q) {
  return Eigen::Map<const Eigen::VectorXd>(q.w[0].data(), static_cast<Eigen::Index>(q.w[0].size()));
}

} // namespace

TEST_CASE("order 1 gives the normalized generalized Haar function") {
  const Filtration1D f = random_1d(60, 3);
  const auto sys = ortho_system_1d(f, 1);
  double worst = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::mt19937_64 rng(4);
  for (std::size_t n = 1; n <= f.step_count(); ++n) {
    const SplitStep &s = f.step(n);
    const Interval iv = f.stage(n - 1).atom(s.atom);
    for (int t = 0; t < 50; ++t) {
      const double x = u(rng);
      worst = std::max(worst, std::abs(sys[n - 1].spline(x) - oracle::haar(iv.lo, s.x, iv.hi, x)));
    }
    // J_n is the shorter of L_n and R_n.
    const bool left_shorter = s.x - iv.lo <= iv.hi - s.x;
    CHECK(sys[n - 1].j_atom == (left_shorter ? s.atom : s.atom + 1));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("f_n is a unit vector orthogonal to the previous space") {
  for (int k = 1; k <= 4; ++k) {
    const Filtration1D f = random_1d(25, 10 + static_cast<std::uint64_t>(k));
    for (std::size_t n = 1; n <= f.step_count(); ++n) {
      const OrthoFunction g = next_ortho_function(f, n, k);
      CHECK(std::abs(inner_product(g.spline, g.spline) - 1.0) <= 1e-10);
      const BSplineBasis prev(f.stage(n - 1), k);
      double worst = 0.0;
      for (std::size_t i = 0; i < prev.dimension(); ++i) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prev.dimension()));
        c[static_cast<Eigen::Index>(i)] = 1.0;
        worst = std::max(worst, std::abs(inner_product(g.spline, Spline(prev, c))));
      }
      CHECK(worst <= 1e-8);
      CHECK(g.spline.coeffs[static_cast<Eigen::Index>(g.sign_index)] > 0.0);
    }
  }
  CHECK_THROWS_AS(next_ortho_function(random_1d(3, 1), 0, 2), Error);
  CHECK_THROWS_AS(next_ortho_function(random_1d(3, 1), 4, 2), Error);
}

TEST_CASE("order 2 with splits at 1/2 and 1/4 matches Gram-Schmidt") {
  Filtration1D f(Partition1D(0.0, 1.0));
  f.push(0, 0.5);
  f.push(0, 0.25);
  const OrthoFunction g = next_ortho_function(f, 2, 2);
  const auto q = oracle::tensor_quad({f.stage(2)}, 4);
  const Eigen::VectorXd w = weights(q);
  const Eigen::MatrixXd coarse = oracle::orthonormal_columns(oracle::tensor_basis({f.stage(1)}, {2}, q), w);
  const Eigen::MatrixXd fine = oracle::tensor_basis({f.stage(2)}, {2}, q);
  // Remove the coarse span from the fine basis; what remains is one direction.
  const Eigen::MatrixXd rest = fine - coarse * (coarse.transpose() * w.asDiagonal() * fine);
  const Eigen::MatrixXd comp = oracle::orthonormal_columns(rest, w, 1e-8);
  REQUIRE(comp.cols() == 1);
  Eigen::VectorXd ref = comp.col(0);
  const Eigen::VectorXd got = sample(q, {g.spline}).col(0);
  if (ref.dot(got) < 0.0)
    ref = -ref;
  CHECK((ref - got).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("orthonormal system and completeness") {
  for (int k = 1; k <= 4; ++k) {
    const Filtration1D f = random_1d(200, 20 + static_cast<std::uint64_t>(k), 0.2);
    const auto sys = ortho_system_1d(f, k);
    double worst = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i)
      for (std::size_t j = i; j < sys.size(); ++j)
        worst = std::max(worst, std::abs(inner_product(sys[i].spline, sys[j].spline) - (i == j ? 1.0 : 0.0)));
    CHECK(worst <= 1e-8);

    // Legendre polynomials up to degree k-1 together with f_1..f_n span S_k(F_n).
    const std::size_t n = 40;
    const auto q = oracle::tensor_quad({f.stage(n)}, k + 1);
    const Eigen::VectorXd w = weights(q);
    std::vector<Spline> fs;
    for (std::size_t i = 0; i < n; ++i)
      fs.push_back(sys[i].spline);
    Eigen::MatrixXd ours = sample(q, fs);
    ours.conservativeResize(Eigen::NoChange, ours.cols() + k);
    for (int j = 0; j < k; ++j)
      for (Eigen::Index r = 0; r < ours.rows(); ++r)
        ours(r, static_cast<Eigen::Index>(n) + j) = legendre_orthonormal(j, q.x[0][static_cast<std::size_t>(r)], 0.0, 1.0);
    const Eigen::MatrixXd ref = oracle::tensor_basis({f.stage(n)}, {k}, q);
    CHECK(ours.cols() == ref.cols());
    CHECK(oracle::mutual_projection_residual(ours, ref, w) <= 1e-8);
  }
}

TEST_CASE("characteristic intervals") {
  for (int k = 1; k <= 4; ++k) {
    const Filtration1D f = random_1d(120, 40 + static_cast<std::uint64_t>(k), 0.02);
    double ratio = 0.0;
    for (std::size_t n = 1; n <= f.step_count(); ++n) {
      const OrthoFunction g = next_ortho_function(f, n, k);
      const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(g.j_atom) - static_cast<std::ptrdiff_t>(g.l_atom);
      CHECK(std::abs(d) <= k);
      // Some support containing J has length comparable to |J|.
      const BSplineBasis b(f.stage(n), k);
      double best = kInf;
      for (std::size_t i = 0; i < b.dimension(); ++i)
        if (b.support(i).contains(f.stage(n).atom(g.j_atom)))
          best = std::min(best, b.support(i).length());
      ratio = std::max(ratio, best / f.stage(n).atom(g.j_atom).length());
      const auto cands = characteristic_candidates(f.stage(n), g.l_atom, k);
      CHECK(std::find(cands.begin(), cands.end(), g.j_atom) != cands.end());
      CHECK(cands.size() <= static_cast<std::size_t>(2 * k + 1));
    }
    CHECK(ratio <= static_cast<double>(k));
  }
}

TEST_CASE("LongestInWindow picks the leftmost longest candidate") {
  const Partition1D p(0.0, 1.0, {0.2, 0.4, 0.5, 0.7});
  CHECK(characteristic_interval(p, 2, 1, JRule::LongestInWindow) == 1);
  CHECK(characteristic_interval(p, 2, 2, JRule::LongestInWindow) == 4);
  CHECK(characteristic_interval(p, 1, 1, JRule::LongestInWindow) == 0);
}

TEST_CASE("decay constant at a pinned rate does not grow with the step count") {
  // Per-instance regression trades q against C on graded meshes, so compare envelopes at one q.
  const double q = 0.6;
  auto envelope = [q](const std::vector<DecayPoint> &pts) {
    double c = 0.0;
    for (const auto &p : pts)
      c = std::max(c, std::abs(p.value) / std::pow(q, static_cast<double>(p.distance)));
    return c;
  };
  for (int k = 2; k <= 3; ++k) {
    double c[2] = {0.0, 0.0};
    const std::size_t sizes[2] = {40, 160};
    for (int which = 0; which < 2; ++which)
      for (int rep = 0; rep < 5; ++rep) {
        const Filtration1D f = random_1d(sizes[which], 500 + static_cast<std::uint64_t>(10 * k + rep), 0.05);
        for (std::size_t n = 1; n <= f.step_count(); n += 3) {
          const OrthoFunction g = next_ortho_function(f, n, k);
          c[which] = std::max(c[which], envelope(franklin_decay_points(g, g.j_atom)));
        }
      }
    MESSAGE("k=" << k << " C(0.6) " << c[0] << " -> " << c[1]);
    CHECK(c[1] <= 1.5 * c[0]);
  }
}

TEST_CASE("Franklin decay and norm equivalence") {
  SUBCASE("order 1") {
    const Filtration1D f = random_1d(30, 70);
    for (const auto &g : ortho_system_1d(f, 1))
      CHECK(fit_franklin_decay(g).q_fit == 0.0);
  }
  double qmax = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Filtration1D f = random_1d(30, 100 + static_cast<std::uint64_t>(rep), 0.05);
    const OrthoFunction g = next_ortho_function(f, f.step_count(), 2);
    qmax = std::max(qmax, fit_franklin_decay(g).q_fit);
  }
  CHECK(qmax < 1.0);
  for (int k = 1; k <= 4; ++k) {
    double lo = kInf, hi = 0.0;
    const Filtration1D f = random_1d(100, 200 + static_cast<std::uint64_t>(k), 0.02);
    for (const auto &g : ortho_system_1d(f, k)) {
      const double j = g.spline.basis.partition().atom(g.j_atom).length();
      for (double p : {1.0, 2.0, 4.0, kInf}) {
        const double r = lp_norm(g.spline, p) / std::pow(j, (std::isinf(p) ? 0.0 : 1.0 / p) - 0.5);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
    MESSAGE("k=" << k << " norm ratios in [" << lo << ", " << hi << "]");
    CHECK(lo > 0.05);
    CHECK(hi < 20.0);
  }
}

TEST_CASE("characteristic intervals rarely pile up in one interval") {
  for (int k = 1; k <= 3; ++k) {
    std::size_t worst = 0;
    const Filtration1D f = random_1d(100, 300 + static_cast<std::uint64_t>(k), 0.05);
    const auto sys = ortho_system_1d(f, k);
    const Partition1D &fin = f.stage(f.step_count());
    for (std::size_t a = 0; a < fin.atom_count(); ++a)
      for (std::size_t b = a + 1; b <= fin.atom_count(); ++b) {
        const Interval v{fin.point(a), fin.point(b)};
        std::size_t count = 0;
        for (const auto &g : sys) {
          const Interval j = g.spline.basis.partition().atom(g.j_atom);
          if (v.contains(j) && j.length() >= 0.5 * v.length())
            ++count;
        }
        worst = std::max(worst, count);
      }
    MESSAGE("k=" << k << " max count " << worst);
    CHECK(worst <= static_cast<std::size_t>(4 * k + 2));
  }
}
