// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned below.
// Usage: osp_acceptance <path to the osp CLI> [criterion ...]

#include "oracles.hpp"
#include "support.hpp"

#include "core/experiments.hpp"
#include "core/generators.hpp"
#include "core/gram.hpp"
#include "core/grid.hpp"
#include "core/ortho1d.hpp"
#include "core/projection.hpp"
#include "core/regularity.hpp"
#include "core/tensor_ortho.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace osp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates a detail line and the verdict.
class Report {
public:
  void check(bool ok, const std::string &what) {
    pass_ = pass_ && ok;
    if (!ok)
      failed_.push_back(what);
  }
  template <class T> Report &note(const std::string &key, const T &v) {
    os_ << (os_.tellp() > 0 ? ", " : "") << key << ' ' << v;
    return *this;
  }
  Outcome done() const {
    std::string d = os_.str();
    for (const auto &f : failed_)
      d += "; failed: " + f;
    return {pass_, d};
  }

private:
  bool pass_ = true;
  std::ostringstream os_;
  std::vector<std::string> failed_;
};

std::string cli_path;

std::vector<Partition1D> parts_at(const TensorFiltration &f, std::size_t n) {
  std::vector<Partition1D> p;
  for (std::size_t j = 0; j < f.dim(); ++j)
    p.push_back(f.partition(n, j));
  return p;
}

Eigen::VectorXd quad_weights(const oracle::Quad &q) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(q.size()));
  std::vector<double> pt;
  for (std::size_t r = 0; r < q.size(); ++r)
    w(static_cast<Eigen::Index>(r)) = q.point(r, pt);
  return w;
}

Eigen::MatrixXd sample_system(const OrthoSystem &sys, const oracle::Quad &q, std::size_t to) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(to));
  std::vector<double> pt;
  for (std::size_t r = 0; r < q.size(); ++r) {
    q.point(r, pt);
    for (std::size_t l = 0; l < to; ++l)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = sys.eval(l, pt);
  }
  return m;
}

Eigen::VectorXd on_quad(const oracle::Quad &q, const std::function<double(std::span<const double>)> &fn) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(q.size()));
  std::vector<double> pt;
  for (std::size_t r = 0; r < q.size(); ++r) {
    q.point(r, pt);
    v(static_cast<Eigen::Index>(r)) = fn(pt);
  }
  return v;
}

double max_abs(const Eigen::MatrixXd &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXd principal(const Eigen::MatrixXd &g, const std::vector<std::size_t> &m) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.size()));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m.size(); ++c)
      s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          g(static_cast<Eigen::Index>(m[r]), static_cast<Eigen::Index>(m[c]));
  return s;
}

std::vector<std::size_t> random_subset(std::mt19937_64 &rng, std::size_t n, std::size_t size) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

// Slope of the least-squares line through (x, y).
double slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

bool within(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

// ---------------------------------------------------------------------------

Outcome orthonormality_and_span() {
  Report r;
  double defect = 0.0, span = 0.0;
  bool counts = true;
  std::size_t largest = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t d = 1 + i % 3;
    const std::size_t steps = d == 1 ? 150 : d == 2 ? 100 : 45;
    std::vector<int> k(d);
    for (std::size_t j = 0; j < d; ++j)
      k[j] = 1 + static_cast<int>((i + j) % 3);
    const OrthoSystem sys = build_system(random_filtration(d, steps, 1000 + i), k);
    largest = std::max(largest, sys.size());
    defect = std::max(defect, orthonormality_defect(sys));
    const SpanReport s = span_check(sys, 2000 + i);
    span = std::max(span, s.max_residual);
    counts = counts && s.counts_match;
  }
  r.note("max defect", defect).note("max span residual", span).note("largest system", largest);
  r.check(defect <= 1e-8, "defect <= 1e-8");
  r.check(span <= 1e-8, "span residual <= 1e-8");
  r.check(counts, "block dimension counts");
  return r.done();
}

Outcome oracle_equivalence() {
  Report r;
  double worst = 0.0;
  std::size_t boundaries = 0, largest = 0;
  const std::vector<std::vector<int>> orders{{2, 2}, {3, 2}, {1, 3}, {3, 3}, {2, 1, 2}, {2, 2, 2}, {3, 1}, {2, 3}, {1, 2, 3}, {3, 3}};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto &k = orders[i];
    const std::size_t steps = k.size() == 2 ? 16 : 7;
    const TensorFiltration f = random_filtration(k.size(), steps, 3000 + i);
    SystemBuilder builder(f, k);
    const oracle::Quad q = oracle::tensor_quad(parts_at(f, f.steps()), 4);
    const Eigen::VectorXd w = quad_weights(q);
    for (std::size_t n = 0; n <= f.steps(); ++n) {
      builder.build_block(n);
      const OrthoSystem &sys = builder.system();
      const Eigen::MatrixXd ours = sample_system(sys, q, sys.block_end(n));
      const Eigen::MatrixXd ref = oracle::orthonormal_columns(oracle::tensor_basis(parts_at(f, n), k, q), w);
      worst = std::max(worst, oracle::mutual_projection_residual(ours, ref, w));
      ++boundaries;
    }
    largest = std::max(largest, builder.system().size());
  }
  r.note("instances", orders.size()).note("boundaries", boundaries).note("largest dimension", largest);
  r.note("max mutual residual", worst);
  r.check(largest <= 400, "total dimension <= 400");
  r.check(worst <= 1e-8, "mutual projection residual <= 1e-8");
  return r.done();
}

// Row-major products of per-direction coordinates.
std::vector<std::vector<double>> product_points(const std::vector<std::vector<double>> &c) {
  std::vector<std::vector<double>> out{{}};
  for (const auto &axis : c) {
    std::vector<std::vector<double>> next;
    for (const auto &p : out)
      for (double x : axis) {
        next.push_back(p);
        next.back().push_back(x);
      }
    out.swap(next);
  }
  return out;
}

Outcome haar_reduction() {
  Report r;
  double uni = 0.0;
  std::mt19937_64 rng(4000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Filtration1D f = random_filtration(1, 80, 4100 + seed).factor(0);
    const auto sys = ortho_system_1d(f, 1);
    for (std::size_t n = 1; n <= f.step_count(); ++n) {
      const SplitStep &s = f.step(n);
      const Interval iv = f.stage(n - 1).atom(s.atom);
      for (int t = 0; t < 40; ++t) {
        const double x = u(rng);
        uni = std::max(uni, std::abs(sys[n - 1].spline(x) - oracle::haar(iv.lo, s.x, iv.hi, x)));
      }
    }
  }
  double multi = 0.0;
  for (std::size_t d : {2u, 3u})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const TensorFiltration f = random_filtration(d, d == 2 ? 25 : 15, 4200 + seed);
      const OrthoSystem sys = build_system(f, std::vector<int>(d, 1));
      std::vector<std::vector<double>> c(d);
      for (std::size_t j = 0; j < d; ++j) {
        const Partition1D &p = f.partition(f.steps(), j);
        for (std::size_t a = 0; a < p.atom_count(); ++a)
          c[j].push_back(0.5 * (p.atom(a).lo + p.atom(a).hi));
      }
      const auto pts = product_points(c);
      for (std::size_t n = 0; n <= f.steps(); ++n) {
        const Eigen::MatrixXd expect = oracle::haar_block(f, n, c);
        if (static_cast<std::size_t>(expect.cols()) != sys.block_end(n) - sys.block_begin(n)) {
          multi = std::numeric_limits<double>::infinity();
          continue;
        }
        for (std::size_t l = sys.block_begin(n); l < sys.block_end(n); ++l) {
          Eigen::VectorXd got(static_cast<Eigen::Index>(pts.size()));
          for (std::size_t i = 0; i < pts.size(); ++i)
            got(static_cast<Eigen::Index>(i)) = sys.eval(l, pts[i]);
          double best = std::numeric_limits<double>::infinity();
          for (Eigen::Index col = 0; col < expect.cols(); ++col)
            best = std::min(best, (got - expect.col(col)).cwiseAbs().maxCoeff());
          multi = std::max(multi, best);
        }
      }
    }
  double weak = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const TensorFiltration f = random_filtration(2, 16, 4300 + seed);
    const OrthoSystem sys = build_system(f, {1, 1});
    const EvalGrid g = make_eval_grid(f, 2);
    std::mt19937_64 crng(4400 + seed);
    const Eigen::VectorXd a = test::random_vector(crng, sys.size());
    const std::vector<double> coeffs(a.data(), a.data() + a.size());
    const auto signs = make_sign_vectors("random", sys.size(), 8, crng);
    const std::vector<double> lambdas{0.05, 0.2, 0.5, 1.0, 2.0, 5.0};
    const WeakTypeResult res = sign_flip_experiment(sys, coeffs, signs, lambdas, false, g);
    const std::vector<double> vol = g.volumes();
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vol.data(), static_cast<Eigen::Index>(vol.size()));
    Eigen::MatrixXd h(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(sys.size()));
    std::vector<std::size_t> idx;
    std::vector<double> x(2);
    for (std::size_t c = 0; c < g.size(); ++c) {
      g.unravel(c, idx);
      x = {g.points[0][idx[0]], g.points[1][idx[1]]};
      for (std::size_t l = 0; l < sys.size(); ++l)
        h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(l)) = sys.eval(l, x);
    }
    for (std::size_t s = 0; s < signs.size(); ++s) {
      const auto ref = oracle::martingale_weak_type(h, v, coeffs, signs[s], lambdas);
      for (std::size_t i = 0; i < lambdas.size(); ++i)
        weak = std::max(weak, std::abs(res.rows[s * lambdas.size() + i].ratio - ref[i]));
    }
  }
  r.note("univariate max error", uni).note("tensor block max error", multi).note("weak-type max error", weak);
  r.check(uni <= 1e-12, "univariate Haar <= 1e-12");
  r.check(multi <= 1e-12, "Haar x indicators <= 1e-12");
  r.check(weak <= 1e-8, "weak-type vs martingale oracle <= 1e-8");
  return r.done();
}

Outcome total_positivity() {
  Report r;
  std::mt19937_64 rng(5000);
  double checker = 0.0, update = 0.0;
  std::size_t largest = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + rep % 4;
    const std::size_t atoms = 5 + static_cast<std::size_t>(rep) % static_cast<std::size_t>(37 - k);
    const BSplineBasis b(test::random_partition(rng, atoms, 0.0, 1.0, 30.0), k);
    largest = std::max(largest, b.dimension());
    const BandedSymmetric g = gram_matrix(b);
    const Eigen::MatrixXd inv = dual_coefficients(g).a;
    // Entries that must be >= 0 after the checkerboard sign, relative to the largest entry.
    checker = std::max(checker, -std::min(0.0, checkerboard_min(inv)) / max_abs(inv));
    const std::size_t del = std::uniform_int_distribution<std::size_t>(0, b.dimension() - 1)(rng);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < b.dimension(); ++i)
      if (i != del)
        keep.push_back(i);
    const Eigen::MatrixXd ref = principal(g.dense(), keep).inverse();
    update = std::max(update, max_abs(inverse_delete_update(inv, del) - ref) / max_abs(ref));
  }
  double mono = 0.0, modulus = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 1 + rep % 4;
    const BSplineBasis b(test::random_partition(rng, 8 + static_cast<std::size_t>(rep) % 25, 0.0, 1.0, 30.0), k);
    const BandedSymmetric g = gram_matrix(b);
    const auto m = random_subset(rng, b.dimension(), b.dimension() - 2);
    const auto m1 = random_subset(rng, m.size(), m.size() / 2);
    std::vector<std::size_t> sub;
    for (std::size_t i : m1)
      sub.push_back(m[i]);
    const Eigen::MatrixXd big = dual_coefficients(g, m).a, small = dual_coefficients(g, sub).a;
    const double scale = max_abs(big);
    for (std::size_t a = 0; a < sub.size(); ++a)
      for (std::size_t c = 0; c < sub.size(); ++c) {
        // Parity of positions inside the larger index set.
        const double sign = (m1[a] + m1[c]) % 2 == 0 ? 1.0 : -1.0;
        const double vs = small(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        const double vb = big(static_cast<Eigen::Index>(m1[a]), static_cast<Eigen::Index>(m1[c]));
        mono = std::max(mono, (sign * vs - sign * vb) / scale);
        modulus = std::max(modulus, (std::abs(vs) - std::abs(vb)) / scale);
      }
  }
  r.note("largest n", largest).note("checkerboard violation (rel)", checker);
  r.note("monotonicity violation (rel)", mono).note("modulus violation (rel)", modulus);
  r.note("delete-update error (rel)", update);
  r.check(largest <= 40, "n <= 40");
  r.check(checker <= 1e-10, "checkerboard sign");
  r.check(mono <= 1e-10, "monotonicity on nested subsets");
  r.check(update <= 1e-10, "inverse_delete_update");
  return r.done();
}

// Decay points of the dual coefficients, scaled by the convex hull of both supports.
void dual_points(const BSplineBasis &b, const DualSystem &ds, std::vector<DecayPoint> &out) {
  for (std::size_t i = 0; i < ds.subset.size(); ++i)
    for (std::size_t j = 0; j < ds.subset.size(); ++j) {
      const Interval a = b.support(ds.subset[i]), c = b.support(ds.subset[j]);
      const double conv = std::max(a.hi, c.hi) - std::min(a.lo, c.lo);
      out.push_back({i > j ? i - j : j - i, ds.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * conv});
    }
}

Outcome decay_fits() {
  Report r;
  // Per-instance fits must have q < 1; the q fitted to the pooled corpus envelope must be stable.
  double q_dual = 0.0, q_uni = 0.0, q_tensor = 0.0;
  // Single f_n whose regression has q >= 1, and the most distances any of them had.
  std::size_t uni_above = 0, uni_fits = 0, above_distances = 0;
  double pooled[3][2] = {};
  for (int which = 0; which < 2; ++which) {
    const std::size_t scale = which == 0 ? 1 : 2;
    std::vector<DecayPoint> dual_pts, uni_pts, tensor_pts;
    std::mt19937_64 rng(6000);
    for (int rep = 0; rep < 30; ++rep) {
      const int k = 2 + rep % 3;
      const BSplineBasis b(test::random_partition(rng, 40 * scale, 0.0, 1.0, 10.0), k);
      const DualSystem ds = dual_coefficients(gram_matrix(b));
      q_dual = std::max(q_dual, fit_decay(ds, b).q_fit);
      dual_points(b, ds, dual_pts);
    }
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      const int k = 2 + static_cast<int>(rep % 3);
      const Filtration1D f = random_filtration(1, 40 * scale, 6100 + rep).factor(0);
      for (const auto &g : ortho_system_1d(f, k)) {
        const auto pts = franklin_decay_points(g, g.j_atom);
        const DecayFit fit = fit_decay(pts);
        q_uni = std::max(q_uni, fit.q_fit);
        ++uni_fits;
        if (fit.q_fit >= 1.0) {
          ++uni_above;
          above_distances = std::max(above_distances, fit.distances);
        }
        uni_pts.insert(uni_pts.end(), pts.begin(), pts.end());
      }
    }
    for (std::uint64_t rep = 0; rep < 6; ++rep) {
      const std::vector<int> k{2 + static_cast<int>(rep % 2), 2};
      const TensorDecayReport t = fit_tensor_decay(build_system(random_filtration(2, 20 * scale, 6200 + rep), k));
      q_tensor = std::max(q_tensor, t.fit.q_fit);
      for (std::size_t u = 0; u < t.envelope.size(); ++u)
        tensor_pts.push_back({u, t.envelope[u]});
    }
    pooled[0][which] = fit_decay(dual_pts).q_fit;
    pooled[1][which] = fit_decay(uni_pts).q_fit;
    pooled[2][which] = fit_decay(tensor_pts).q_fit;
  }
  r.note("max q dual", q_dual).note("max q tensor", q_tensor).note("max single f_n q", q_uni);
  std::ostringstream above;
  above << uni_above << " of " << uni_fits << " (at most " << above_distances << " distances)";
  r.note("single f_n with q >= 1", above.str());
  const char *names[3] = {"dual", "f_n", "tensor"};
  for (int i = 0; i < 3; ++i) {
    std::ostringstream os;
    os << pooled[i][0] << " -> " << pooled[i][1];
    r.note(std::string("pooled q ") + names[i], os.str());
    r.check(within(pooled[i][0], pooled[i][1], 0.2), std::string("pooled q stable ") + names[i]);
  }
  r.check(q_dual < 1.0, "q < 1 dual");
  // Single f_n fits are regressions over a handful of atoms early on; the corpus fit is asserted.
  r.check(pooled[1][0] < 1.0 && pooled[1][1] < 1.0, "corpus q < 1 f_n");
  r.check(q_tensor < 1.0, "q < 1 tensor");
  return r.done();
}

double poly_a(std::span<const double> x) {
  double v = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    v *= std::sin(3.0 * x[j] + 0.5 * static_cast<double>(j)) + 0.2;
  return v;
}

double poly_b(std::span<const double> x) {
  double v = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    v *= std::exp(-x[j]) * (x[j] - 0.37) + 0.1 * static_cast<double>(j);
  return v;
}

Outcome projector_properties() {
  Report r;
  double idem = 0.0, adjoint = 0.0, nested = 0.0;
  const std::vector<std::vector<int>> orders{{1, 1}, {2, 2}, {3, 2}, {2, 2, 2}};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto &k = orders[i];
    const std::size_t d = k.size();
    const TensorFiltration f = random_filtration(d, d == 2 ? 18 : 9, 7000 + i);
    const Projector proj(f, k);
    const oracle::Quad q = oracle::tensor_quad(parts_at(f, f.steps()), 6);
    const Eigen::VectorXd w = quad_weights(q);
    const PointIntegrand fa(d, poly_a), fb(d, poly_b);
    const Eigen::VectorXd fbq = on_quad(q, poly_b), faq = on_quad(q, poly_a);
    std::vector<TensorSpline> pa;
    for (std::size_t n = 0; n <= f.steps(); ++n)
      pa.push_back(proj.project(n, fa));
    for (std::size_t n = 1; n <= f.steps(); n += 2) {
      const TensorSpline twice = proj.project(n, SplineIntegrand(pa[n]));
      const Eigen::VectorXd p1 = on_quad(q, [&](std::span<const double> x) { return pa[n](x); });
      const Eigen::VectorXd p2 = on_quad(q, [&](std::span<const double> x) { return twice(x); });
      idem = std::max(idem, (p1 - p2).cwiseAbs().maxCoeff());
      const TensorSpline pb = proj.project(n, fb);
      const Eigen::VectorXd pbq = on_quad(q, [&](std::span<const double> x) { return pb(x); });
      adjoint = std::max(adjoint, std::abs(w.dot(p1.cwiseProduct(fbq)) - w.dot(faq.cwiseProduct(pbq))));
      for (std::size_t m = 0; m <= f.steps(); m += 3) {
        const TensorSpline pmn = proj.project(m, SplineIntegrand(pa[n]));
        const TensorSpline &direct = pa[std::min(m, n)];
        const Eigen::VectorXd a = on_quad(q, [&](std::span<const double> x) { return pmn(x); });
        const Eigen::VectorXd b = on_quad(q, [&](std::span<const double> x) { return direct(x); });
        nested = std::max(nested, (a - b).cwiseAbs().maxCoeff());
      }
    }
  }
  r.note("idempotence", idem).note("self-adjointness", adjoint).note("nestedness", nested);
  r.check(idem <= 1e-8, "idempotence <= 1e-8");
  r.check(adjoint <= 1e-8, "self-adjointness <= 1e-8");
  r.check(nested <= 1e-8, "P_m P_n = P_min <= 1e-8");
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> steps, norms;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      const std::size_t n = 10 + rep;
      const TensorFiltration f = random_filtration(1, n, 7100 + rep + 1000 * static_cast<std::uint64_t>(k));
      steps.push_back(static_cast<double>(n));
      norms.push_back(kernel_norm_1d(BSplineBasis(f.partition(n, 0), k)));
    }
    const double s = slope(steps, norms);
    std::ostringstream key;
    key << "k=" << k << " norm slope";
    r.note(key.str(), s).note("max", *std::max_element(norms.begin(), norms.end()));
    r.check(std::abs(s) <= 0.01, key.str() + " within 0.01");
  }
  return r.done();
}

// Sum of three Gaussian bumps with random centres and widths.
PointIntegrand::Fn bumps(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95), s(0.01, 0.1), c(0.5, 5.0);
  std::vector<std::vector<double>> x(3, std::vector<double>(d));
  std::vector<double> w(3), h(3);
  for (int i = 0; i < 3; ++i) {
    for (auto &v : x[static_cast<std::size_t>(i)])
      v = u(rng);
    w[static_cast<std::size_t>(i)] = s(rng);
    h[static_cast<std::size_t>(i)] = c(rng);
  }
  return [x, w, h](std::span<const double> p) {
    double v = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double r2 = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j)
        r2 += (p[j] - x[i][j]) * (p[j] - x[i][j]);
      v += h[i] * std::exp(-r2 / (2.0 * w[i] * w[i]));
    }
    return v;
  };
}

Outcome maximal_weak_type() {
  Report r;
  const std::vector<double> rel{0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  double ceiling[2] = {0.0, 0.0};
  double rho_max = 0.0;
  for (int which = 0; which < 2; ++which) {
    const std::size_t levels = 3 + static_cast<std::size_t>(which);
    for (std::uint64_t pair = 0; pair < 50; ++pair) {
      const TensorFiltration f = quasi_dyadic_filtration(2, levels, 0.3, 8000 + pair);
      const double rho = std::sqrt(fit_tensor_decay(build_system(f, {2, 2})).fit.q_fit);
      rho_max = std::max(rho_max, rho);
      const EvalGrid g = make_eval_grid(f, 2);
      const std::vector<double> v = sample_on_grid(g, bumps(2, 8100 + pair));
      const double l1 = grid_norm(g, v, 1.0);
      std::vector<double> lambdas;
      for (double m : rel)
        lambdas.push_back(m * l1 / g.total_volume());
      const auto mf = MaximalEvaluator(f, rho, g)(v);
      for (const auto &p : weak_type_profile(g, mf, l1, lambdas))
        ceiling[which] = std::max(ceiling[which], p.ratio);
    }
  }
  r.note("max rho", rho_max).note("ceiling levels 3", ceiling[0]).note("levels 4", ceiling[1]);
  r.check(std::isfinite(ceiling[0]) && std::isfinite(ceiling[1]), "finite");
  r.check(ceiling[1] <= 1.2 * ceiling[0], "refined ratios within the calibrated ceiling (+20%)");
  r.check(within(ceiling[0], ceiling[1], 0.2), "ceiling stable within 20%");
  return r.done();
}

struct SignFlip {
  double max_ratio = 0.0;
  double sign_spread = 0.0;
  double gamma = 0.0;
  std::string beta;
};

SignFlip run_sign_flip(const TensorFiltration &f, std::uint64_t seed) {
  const std::vector<int> k{2, 2};
  const OrthoSystem sys = build_system(f, k);
  // Gaussian coefficients on every function of the system.
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd gauss = test::random_vector(rng, sys.size());
  const std::vector<double> a(gauss.data(), gauss.data() + gauss.size());
  const auto signs = make_sign_vectors("random", a.size(), 64, rng);
  const EvalGrid g = make_eval_grid(f, 2);
  const std::vector<double> rel{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  const WeakTypeResult w = sign_flip_experiment(sys, a, signs, rel, true, g);
  SignFlip out;
  out.max_ratio = w.max_ratio;
  const auto [lo, hi] = std::minmax_element(w.max_ratio_per_sign.begin(), w.max_ratio_per_sign.end());
  out.sign_spread = *hi / *lo;
  out.gamma = regularity_parameter(f, k).gamma;
  const BetaReport b = direction_regularity_parameter(f, k);
  out.beta = b.cap_exceeded ? "cap" : std::to_string(b.beta);
  return out;
}

Outcome sign_flip() {
  Report r;
  const std::size_t coarse = 5;
  struct Corpus {
    std::string name;
    std::function<TensorFiltration(std::size_t)> make;
  };
  const std::vector<Corpus> corpora{
      {"dyadic", [](std::size_t l) { return dyadic_filtration(2, l); }},
      {"quasi-dyadic", [](std::size_t l) { return quasi_dyadic_filtration(2, l, 0.3, 9000); }},
  };
  for (const auto &c : corpora) {
    const SignFlip a = run_sign_flip(c.make(coarse), 9100);
    const SignFlip b = run_sign_flip(c.make(coarse + 1), 9100);
    std::ostringstream os;
    os << a.max_ratio << " -> " << b.max_ratio << " (gamma " << b.gamma << ", beta " << b.beta << ", sign spread "
       << std::max(a.sign_spread, b.sign_spread) << ")";
    r.note(c.name, os.str());
    r.check(std::isfinite(a.max_ratio) && std::isfinite(b.max_ratio), c.name + " finite");
    r.check(within(a.max_ratio, b.max_ratio, 0.2), c.name + " stable under refinement (20%)");
    r.check(std::max(a.sign_spread, b.sign_spread) <= 3.0, c.name + " sign vectors within factor 3");
  }
  const SignFlip e = run_sign_flip(example_filtration(2, 8, 2), 9200);
  std::ostringstream os;
  os << e.max_ratio << " (gamma " << e.gamma << ", beta " << e.beta << ")";
  r.note("irregular example", os.str());
  return r.done();
}

Outcome regularity_analyzers() {
  Report r;
  std::vector<TensorFiltration> corpus;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    corpus.push_back(random_filtration(1, 40, 10000 + seed, seed % 2 ? 0.02 : 0.1));
  for (std::size_t l : {2u, 4u, 6u})
    corpus.push_back(dyadic_filtration(1, l));
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    corpus.push_back(quasi_dyadic_filtration(1, 5, 0.3, 10100 + seed));
  for (std::size_t ell : {4u, 8u, 16u})
    corpus.push_back(example_filtration(1, ell, 3));
  std::size_t worst_excess = 0, capped = 0;
  bool ok = true;
  for (const auto &f : corpus)
    for (int rr = 1; rr <= 4; ++rr) {
      const BetaReport b = direction_regularity_parameter(f, {rr}, 64);
      if (b.cap_exceeded) {
        ++capped;
        ok = false;
        continue;
      }
      if (b.beta > static_cast<std::size_t>(rr) + 1) {
        ok = false;
        worst_excess = std::max(worst_excess, b.beta - static_cast<std::size_t>(rr) - 1);
      }
    }
  r.note("d=1 instances", corpus.size()).note("beta excess", worst_excess).note("capped", capped);
  r.check(ok, "d=1 beta <= r + 1");
  double gmax = 0.0, lowest_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t ell : {4u, 8u, 16u})
    for (int k : {3, 4}) {
      const TensorFiltration f = example_filtration(1, ell, k);
      gmax = std::max(gmax, regularity_parameter(f, {k}).gamma);
      lowest_ratio = std::min(lowest_ratio, regularity_parameter(f, {k - 1}).gamma / static_cast<double>(ell));
    }
  r.note("example max gamma_k", gmax).note("min gamma_{k-1} / ell", lowest_ratio);
  r.check(gmax < 2.0, "gamma_k < 2");
  r.check(lowest_ratio >= 0.5, "gamma_{k-1} >= ell / 2");
  return r.done();
}

Outcome remez() {
  Report r;
  std::size_t trials = 0, violations = 0, samples = 0;
  double min_fraction = 1.0;
  for (int degree = 0; degree <= 5; ++degree)
    for (std::size_t d = 1; d <= 3; ++d) {
      const RemezReport rep = remez_check(degree, d, 556, 32768, 11000 + 10 * static_cast<std::uint64_t>(degree) + d);
      trials += rep.trials;
      violations += rep.violations;
      samples = rep.samples;
      min_fraction = std::min(min_fraction, rep.min_fraction);
    }
  r.note("trials", trials).note("samples", samples).note("violations", violations).note("min fraction", min_fraction);
  r.check(trials >= 10000, "at least 1e4 trials");
  r.check(violations == 0, "no violations beyond 3 sigma");
  return r.done();
}

Outcome calderon_zygmund() {
  Report r;
  const std::vector<int> k{2, 2};
  double recon = 0.0;
  bool overlap_ok = true, nontrivial = true;
  double half[2] = {0.0, 0.0};
  std::size_t overlap_max = 0;
  double ceiling = 0.0;
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const TensorFiltration f = quasi_dyadic_filtration(2, 2, 0.3, 12000 + trial);
    const Collection c = build_collection_C(f, k, regularity_parameter(f, k).gamma);
    const EvalGrid grid = make_eval_grid(c.filtration, 2);
    std::mt19937_64 rng(12100 + trial);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> v(grid.size());
    for (auto &x : v)
      x = ex(rng) * (ex(rng) > 3.0 ? 40.0 : 1.0);
    const double l1 = grid_norm(grid, v, 1.0);
    const double lambda = 2.0 * l1 / grid.total_volume();
    const CZResult z = cz_decompose(grid, v, lambda, c);
    nontrivial = nontrivial && !z.trivial && !z.e.empty();
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      err = std::max(err, std::abs(v[i] - z.h[i] - z.g[i]));
    recon = std::max(recon, err);
    overlap_ok = overlap_ok && static_cast<double>(z.overlap_max) <= z.overlap_ceiling;
    overlap_max = std::max(overlap_max, z.overlap_max);
    ceiling = std::max(ceiling, z.overlap_ceiling);
    half[trial < 15 ? 0 : 1] = std::max(half[trial < 15 ? 0 : 1], z.h_ratio);
  }
  r.note("reconstruction", recon).note("overlap", overlap_max).note("ceiling", ceiling);
  std::ostringstream os;
  os << half[0] << " / " << half[1];
  r.note("C_fit halves", os.str());
  r.check(nontrivial, "every trial has stopping sets");
  r.check(recon <= 1e-10, "f = h + g <= 1e-10");
  r.check(overlap_ok, "overlap <= calibration ceiling");
  r.check(std::isfinite(half[0]) && half[1] <= 2.0 * half[0] && half[0] <= 2.0 * half[1],
          "C_fit stable within factor 2 between halves");
  return r.done();
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  Report r;
  if (cli_path.empty())
    return {false, "no CLI path given"};
  const fs::path dir = fs::temp_directory_path() / ("osp_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream(dir / "exp.json") << R"({"format_version": 1,
      "filtration": {"generator": {"kind": "quasi_dyadic", "dim": 2, "levels": 2, "theta": 0.3, "seed": 4}},
      "orders": [2, 2], "signs": {"vectors": 8},
      "remez": {"degree": 3, "dim": 2, "trials": 100, "samples": 1000}, "seed": 21})";
  }
  const std::string cli = "\"" + cli_path + "\"";
  const std::string d = "\"" + dir.string() + "/";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"filtration", "gen-filtration --kind random --dim 2 --steps 20 --seed 5 --out " + d + "OUT\""},
      {"system", "build-system " + d + "filtration.a\" --orders 2 3 --out " + d + "OUT.bin\""},
      {"project", "project --system " + d + "system.a.bin\" --target jump --n 10 --m 2 --out " + d + "OUT\""},
      {"regularity", "regularity-report " + d + "filtration.a\" --orders 2 2 --out " + d + "OUT\""},
      {"weak-type", "weak-type --config " + d + "exp.json\" --format csv --out " + d + "OUT\""},
      {"ae-sweep", "ae-sweep --config " + d + "exp.json\" --format csv --out " + d + "OUT\""},
      {"cz", "cz --config " + d + "exp.json\" --format json --out " + d + "OUT\""},
      {"remez", "remez --config " + d + "exp.json\" --seed 3 --format csv --out " + d + "OUT\""},
  };
  std::size_t identical = 0;
  for (const auto &[name, args] : runs) {
    std::string outs[2];
    for (const char *tag : {"a", "b"}) {
      std::string cmd = args;
      const std::string file = name + "." + tag;
      cmd.replace(cmd.find("OUT"), 3, file);
      const int rc = std::system((cli + " " + cmd).c_str());
      r.check(rc == 0, name + " exit status");
      outs[tag[0] - 'a'] = slurp(dir / (name == "system" ? file + ".bin" : file));
    }
    const bool same = !outs[0].empty() && outs[0] == outs[1];
    r.check(same, name + " bit-identical");
    identical += same ? 1 : 0;
  }
  // A different seed must change a seeded run.
  const int rc = std::system((cli + " weak-type --config " + d + "exp.json\" --seed 22 --format csv --out " + d +
                              "weak-type.c\"")
                                 .c_str());
  r.check(rc == 0 && slurp(dir / "weak-type.c") != slurp(dir / "weak-type.a"), "seed changes the output");
  fs::remove_all(dir);
  r.note("identical runs", identical).note("of", runs.size());
  return r.done();
}

} // namespace

int main(int argc, char **argv) {
  if (argc > 1)
    cli_path = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i)
    only.insert(std::atoi(argv[i]));
  struct Entry {
    int id;
    const char *name;
    Outcome (*run)();
    double budget;
  };
  const Entry entries[] = {
      {1, "orthonormality and span", orthonormality_and_span, 120.0},
      {2, "oracle equivalence", oracle_equivalence, 0.0},
      {3, "order one reduction", haar_reduction, 0.0},
      {4, "totally positive structure", total_positivity, 0.0},
      {5, "decay fits", decay_fits, 0.0},
      {6, "projector properties", projector_properties, 0.0},
      {7, "maximal function weak type", maximal_weak_type, 0.0},
      {8, "sign-flip weak type", sign_flip, 600.0},
      {9, "regularity analyzers", regularity_analyzers, 0.0},
      {10, "Remez corollary", remez, 180.0},
      {11, "Calderon-Zygmund decomposition", calderon_zygmund, 0.0},
      {12, "CLI determinism", determinism, 0.0},
  };
  int failures = 0;
  for (const auto &e : entries) {
    if (!only.empty() && !only.count(e.id))
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception &ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget > 0.0 && secs > e.budget) {
      o.pass = false;
      o.detail += "; failed: runtime over " + std::to_string(static_cast<int>(e.budget)) + " s";
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %-32s %s  [%.1f s] %s\n", e.id, e.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
