#include "core/regularity.hpp"

#include "core/error.hpp"
#include "core/tensor_ortho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osp {

std::vector<AtomRange> support_windows(std::size_t atoms, int r) {
  require(atoms >= 1 && r >= 1, ErrorCode::InvalidArgument, "support_windows: need atoms >= 1 and r >= 1");
  const std::size_t rr = static_cast<std::size_t>(r);
  std::vector<AtomRange> out;
  for (std::size_t i = 0; i + 1 < atoms + rr; ++i)
    out.emplace_back(i + 1 >= rr ? i + 1 - rr : 0, std::min(atoms - 1, i));
  return out;
}

double partition_gamma(const Partition1D &p, int r, AtomRange *wa, AtomRange *wb) {
  const auto w = support_windows(p.atom_count(), r);
  auto len = [&](const AtomRange &x) { return p.point(x.second + 1) - p.point(x.first); };
  double best = 1.0;
  if (wa)
    *wa = w.front();
  if (wb)
    *wb = w.front();
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size() && j <= i + static_cast<std::size_t>(r); ++j) {
      if (w[j].first > w[i].second + 1 || w[i].first > w[j].second + 1)
        continue;
      const double la = len(w[i]), lb = len(w[j]);
      const double q = std::max(la / lb, lb / la);
      if (q > best) {
        best = q;
        if (wa)
          *wa = w[i];
        if (wb)
          *wb = w[j];
      }
    }
  return best;
}

namespace {

/// global_of[t] = global step performing factor step t of direction `dir` (t >= 1).
std::vector<std::size_t> global_steps(const TensorFiltration &f, std::size_t dir) {
  std::vector<std::size_t> g{0};
  for (std::size_t n = 1; n <= f.steps(); ++n)
    if (f.entry(n).dir == dir)
      g.push_back(n);
  return g;
}

/// depth[ts][t]: deepest chain of nested atoms from factor stage ts to stage t.
std::vector<std::vector<std::size_t>> depth_table(const Filtration1D &f) {
  const std::size_t T = f.step_count();
  std::vector<std::vector<std::size_t>> d(T + 1);
  for (std::size_t ts = 0; ts <= T; ++ts) {
    std::vector<std::size_t> depth(f.stage(ts).atom_count(), 0);
    std::size_t best = 0;
    d[ts].assign(T + 1, 0);
    for (std::size_t t = ts + 1; t <= T; ++t) {
      const std::size_t a = f.step(t).atom;
      depth[a] += 1;
      depth.insert(depth.begin() + static_cast<std::ptrdiff_t>(a) + 1, depth[a]);
      best = std::max(best, depth[a]);
      d[ts][t] = best;
    }
  }
  return d;
}

struct PathEvent {
  std::size_t stage;
  Interval iv;
};

/// Deepest nested path from stage ts to stage te inside [lo, hi] (whole interval if unrestricted).
std::vector<PathEvent> deepest_path(const Filtration1D &f, std::size_t ts, std::size_t te, double lo, double hi) {
  struct Node {
    std::size_t depth;
    std::ptrdiff_t parent;
    PathEvent ev;
  };
  std::vector<Node> log;
  std::vector<std::size_t> current;
  const Partition1D &p0 = f.stage(ts);
  for (std::size_t a = 0; a < p0.atom_count(); ++a) {
    log.push_back({0, -1, {ts, p0.atom(a)}});
    current.push_back(log.size() - 1);
  }
  for (std::size_t t = ts + 1; t <= te; ++t) {
    const auto &st = f.step(t);
    const std::size_t id = current[st.atom];
    const Interval iv = log[id].ev.iv;
    const std::size_t dep = log[id].depth + 1;
    log.push_back({dep, static_cast<std::ptrdiff_t>(id), {t, {iv.lo, st.x}}});
    log.push_back({dep, static_cast<std::ptrdiff_t>(id), {t, {st.x, iv.hi}}});
    current[st.atom] = log.size() - 2;
    current.insert(current.begin() + static_cast<std::ptrdiff_t>(st.atom) + 1, log.size() - 1);
  }
  std::ptrdiff_t best = -1;
  for (std::size_t id : current) {
    const Interval iv = log[id].ev.iv;
    if (iv.lo < lo || iv.hi > hi)
      continue;
    if (best < 0 || log[id].depth > log[static_cast<std::size_t>(best)].depth)
      best = static_cast<std::ptrdiff_t>(id);
  }
  std::vector<PathEvent> path;
  for (std::ptrdiff_t id = best; id >= 0; id = log[static_cast<std::size_t>(id)].parent)
    path.push_back(log[static_cast<std::size_t>(id)].ev);
  std::reverse(path.begin(), path.end());
  return path;
}

bool is_support(const Partition1D &p, int r, double lo, double hi) {
  const auto &pts = p.points();
  auto ia = std::lower_bound(pts.begin(), pts.end(), lo);
  auto ib = std::lower_bound(pts.begin(), pts.end(), hi);
  if (ia == pts.end() || ib == pts.end() || *ia != lo || *ib != hi || ib <= ia)
    return false;
  const std::size_t first = static_cast<std::size_t>(ia - pts.begin());
  const std::size_t count = static_cast<std::size_t>(ib - ia);
  const std::size_t rr = static_cast<std::size_t>(r);
  if (count > rr)
    return false;
  return count == rr || first == 0 || first + count == p.atom_count();
}

} // namespace

GammaReport regularity_parameter(const TensorFiltration &f, const std::vector<int> &r) {
  require(r.size() == f.dim(), ErrorCode::InvalidArgument, "regularity_parameter: one order per direction");
  GammaReport rep;
  for (std::size_t d = 0; d < f.dim(); ++d) {
    const auto gs = global_steps(f, d);
    const Filtration1D &fd = f.factor(d);
    double best = 1.0;
    for (std::size_t t = 0; t <= fd.step_count(); ++t) {
      AtomRange a, b;
      const double g = partition_gamma(fd.stage(t), r[d], &a, &b);
      best = std::max(best, g);
      if (g > rep.witness.ratio)
        rep.witness = {d, gs[t], a, b, g};
    }
    rep.per_direction.push_back(best);
    rep.gamma = std::max(rep.gamma, best);
  }
  return rep;
}

BetaReport direction_regularity_parameter(const TensorFiltration &f, const std::vector<int> &r, std::size_t cap) {
  require(r.size() == f.dim(), ErrorCode::InvalidArgument, "direction_regularity_parameter: one order per direction");
  require(cap >= 2, ErrorCode::InvalidArgument, "direction_regularity_parameter: cap must be >= 2");
  const std::size_t dim = f.dim();
  std::vector<std::vector<std::size_t>> gsteps;
  std::vector<std::vector<std::vector<std::size_t>>> depth;
  for (std::size_t d = 0; d < dim; ++d) {
    gsteps.push_back(global_steps(f, d));
    depth.push_back(depth_table(f.factor(d)));
  }
  BetaReport rep;
  rep.cap = cap;
  rep.per_direction_longest.assign(dim, 1);
  struct Best {
    std::size_t len = 0, dir = 0, ts = 0, te = 0, s = 0, e = 0;
    AtomRange b{0, 0};
  } best;
  for (std::size_t delta = 0; delta < dim; ++delta) {
    const Filtration1D &fd = f.factor(delta);
    const std::size_t T = fd.step_count();
    const std::size_t rr = static_cast<std::size_t>(r[delta]);
    for (std::size_t ts = 0; ts <= T; ++ts) {
      const Partition1D &p = fd.stage(ts);
      const std::size_t s = gsteps[delta][ts];
      for (const AtomRange &w : support_windows(p.atom_count(), r[delta])) {
        const double lo = p.point(w.first), hi = p.point(w.second + 1);
        const std::size_t count = w.second - w.first + 1;
        const std::size_t allowed = rr - count;
        // Depths of the atoms inside B while B stays a support.
        std::vector<std::size_t> dep(count, 0);
        std::size_t gain = 0, used = 0, te = T, first = w.first;
        for (std::size_t t = ts + 1; t <= T; ++t) {
          const auto &st = fd.step(t);
          if (st.x < lo)
            ++first;
          if (!(st.x > lo && st.x < hi))
            continue;
          if (++used > allowed) {
            te = t - 1;
            break;
          }
          const std::size_t local = st.atom - first;
          dep[local] += 1;
          dep.insert(dep.begin() + static_cast<std::ptrdiff_t>(local) + 1, dep[local]);
          gain = std::max(gain, dep[local]);
        }
        const std::size_t e = te == T ? f.steps() : gsteps[delta][te + 1] - 1;
        std::size_t len = 1 + gain;
        for (std::size_t j = 0; j < dim; ++j)
          if (j != delta)
            len += depth[j][f.factor_step(s, j)][f.factor_step(e, j)];
        rep.per_direction_longest[delta] = std::max(rep.per_direction_longest[delta], len);
        if (len > best.len)
          best = {len, delta, ts, te, s, e, w};
      }
    }
  }
  rep.longest = best.len;
  rep.beta = best.len + 1;
  rep.cap_exceeded = best.len >= cap;

  BetaWitness &w = rep.witness;
  w.dir = best.dir;
  w.start = best.s;
  w.end = best.e;
  w.support = best.b;
  // Replay the deepest path per direction and merge the split events in global order.
  struct Ev {
    std::size_t global, dir;
    Interval iv;
  };
  std::vector<Ev> events;
  std::vector<Interval> comp(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const Filtration1D &fj = f.factor(j);
    const std::size_t ts = f.factor_step(best.s, j), te = f.factor_step(best.e, j);
    double lo = fj.base().left(), hi = fj.base().right();
    if (j == best.dir) {
      lo = fj.stage(ts).point(best.b.first);
      hi = fj.stage(ts).point(best.b.second + 1);
    }
    const auto path = deepest_path(fj, ts, te, lo, hi);
    if (path.empty()) {
      comp[j] = fj.stage(ts).atom(j == best.dir ? best.b.first : 0);
      continue;
    }
    comp[j] = path.front().iv;
    for (std::size_t i = 1; i < path.size(); ++i)
      events.push_back({gsteps[j][path[i].stage], j, path[i].iv});
  }
  std::sort(events.begin(), events.end(), [](const Ev &a, const Ev &b) { return a.global < b.global; });
  auto ref = [&](std::size_t n) {
    AtomRef a;
    a.step = n;
    for (std::size_t j = 0; j < dim; ++j)
      a.index.push_back(static_cast<std::ptrdiff_t>(f.partition(n, j).atom_of(0.5 * (comp[j].lo + comp[j].hi))));
    return a;
  };
  w.chain.push_back(ref(best.s));
  for (const Ev &ev : events) {
    comp[ev.dir] = ev.iv;
    w.chain.push_back(ref(ev.global));
  }
  return rep;
}

bool verify_beta_witness(const TensorFiltration &f, const std::vector<int> &r, const BetaWitness &w) {
  if (w.chain.empty() || w.start > w.end || w.end > f.steps() || w.dir >= f.dim())
    return false;
  if (w.chain.front().step != w.start || w.chain.back().step > w.end)
    return false;
  const Partition1D &p0 = f.partition(w.start, w.dir);
  if (w.support.second >= p0.atom_count())
    return false;
  const double lo = p0.point(w.support.first), hi = p0.point(w.support.second + 1);
  if (!is_support(p0, r[w.dir], lo, hi) || !is_support(f.partition(w.end, w.dir), r[w.dir], lo, hi))
    return false;
  auto boxes = [&](const AtomRef &a) { return f.atom_box(a); };
  const auto first = boxes(w.chain.front());
  if (first[w.dir].lo < lo || first[w.dir].hi > hi)
    return false;
  for (std::size_t i = 1; i < w.chain.size(); ++i) {
    if (w.chain[i].step <= w.chain[i - 1].step)
      return false;
    const auto a = boxes(w.chain[i - 1]), b = boxes(w.chain[i]);
    bool strict = false;
    for (std::size_t d = 0; d < f.dim(); ++d) {
      if (!a[d].contains(b[d]))
        return false;
      strict = strict || !(a[d] == b[d]);
    }
    if (!strict)
      return false;
  }
  return true;
}

TensorFiltration dyadic_extension(const std::vector<Partition1D> &base, std::size_t levels, const SplitRule &rule) {
  require(levels >= 1, ErrorCode::InvalidArgument, "dyadic_extension: levels must be >= 1");
  TensorFiltration f(base);
  for (std::size_t lv = 0; lv < levels; ++lv)
    for (std::size_t d = 0; d < f.dim(); ++d) {
      const std::size_t m = f.partition(f.steps(), d).atom_count();
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t a = 2 * j;
        const Interval iv = f.partition(f.steps(), d).atom(a);
        const double x = rule ? rule(d, iv) : 0.5 * (iv.lo + iv.hi);
        require(x > iv.lo && x < iv.hi, ErrorCode::InvalidSplit, "dyadic_extension: split point outside the atom");
        f.split(d, a, x);
      }
    }
  return f;
}

ExampleFiltration make_example_filtration(std::size_t ell, int k, int m) {
  require(ell >= 2, ErrorCode::InvalidArgument, "make_example_filtration: ell must be >= 2");
  require(m >= 1 && k >= 1, ErrorCode::InvalidArgument, "make_example_filtration: need m >= 1 and k >= 1");
  ExampleFiltration ex;
  ex.eps = 1.0 / static_cast<double>(ell);
  const double eps = ex.eps;
  std::vector<double> bp{-eps};
  for (int j = 1; j < m; ++j)
    bp.push_back(-eps + 2.0 * j * eps / m);
  bp.push_back(eps);
  ex.base = Partition1D(-1.0, 1.0, bp);
  const auto rounds = static_cast<std::size_t>(std::floor(std::abs(std::log(eps))));
  constexpr int kFractions = 64;
  Partition1D cur = ex.base;
  for (std::size_t t = 0; t < rounds; ++t)
    for (int side = 0; side < 2; ++side) {
      double best = std::numeric_limits<double>::infinity();
      SplitStep pick{};
      for (std::size_t a = 0; a < cur.atom_count(); ++a) {
        const Interval iv = cur.atom(a);
        if ((side == 0 && iv.hi > -eps) || (side == 1 && iv.lo < eps))
          continue;
        for (int q = 1; q < kFractions; ++q) {
          const double x = iv.lo + iv.length() * q / kFractions;
          const double g = partition_gamma(refine(cur, a, x), k);
          if (g < best - 1e-14) {
            best = g;
            pick = {a, x};
          }
        }
      }
      cur = refine(cur, pick.atom, pick.x);
      ex.schedule.push_back(pick);
    }
  return ex;
}

Filtration1D to_filtration(const ExampleFiltration &e) {
  Filtration1D f(e.base);
  for (const auto &s : e.schedule)
    f.push(s.atom, s.x);
  return f;
}

LemmaDirReport validate_lemma_dir(const TensorFiltration &f, const std::vector<int> &k, const std::vector<int> &m,
                                  std::size_t cap) {
  require(k.size() == f.dim() && m.size() == f.dim(), ErrorCode::InvalidArgument,
          "validate_lemma_dir: one order per direction");
  LemmaDirReport rep;
  std::vector<std::size_t> dirs;
  for (std::size_t i = 0; i < f.dim(); ++i)
    if (m[i] > k[i])
      dirs.push_back(i);
  if (dirs.empty()) {
    rep.skipped = true;
    rep.reason = "no direction with m_i > k_i";
    return rep;
  }
  rep.gamma = regularity_parameter(f, k);
  rep.beta = direction_regularity_parameter(f, m, cap);
  if (rep.beta.cap_exceeded) {
    rep.skipped = true;
    rep.reason = "direction m-regularity parameter exceeds the cap";
    return rep;
  }
  for (std::size_t i : dirs) {
    std::vector<int> mp = m;
    mp[i] -= 1;
    LemmaDirEntry e{i, direction_regularity_parameter(f, mp, cap)};
    rep.passed = rep.passed && !e.beta_prime.cap_exceeded;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

CombReport lemma_comb_audit(const OrthoSystem &sys, std::size_t radius) {
  const TensorFiltration &f = sys.filtration();
  const std::size_t dim = f.dim();
  const std::size_t L = sys.size();
  const auto R = static_cast<std::ptrdiff_t>(radius);
  CombReport rep;
  std::vector<std::ptrdiff_t> s(dim, -R);
  std::vector<std::vector<Interval>> jbox(L);
  for (std::size_t l = 0; l < L; ++l)
    jbox[l] = f.atom_box(sys.function(l).j);
  std::vector<std::vector<Interval>> cbox(L);
  std::vector<char> valid(L);
  std::vector<std::size_t> best(L);
  std::vector<std::ptrdiff_t> prev(L);
  for (;;) {
    for (std::size_t l = 0; l < L; ++l) {
      const AtomRef &j = sys.function(l).j;
      const auto counts = f.atom_counts(j.step);
      AtomRef c{j.step, j.index};
      valid[l] = 1;
      for (std::size_t d = 0; d < dim; ++d) {
        c.index[d] = j.index[d] - s[d];
        if (c.index[d] < 0 || c.index[d] >= static_cast<std::ptrdiff_t>(counts[d]))
          valid[l] = 0;
      }
      if (valid[l])
        cbox[l] = f.atom_box(c);
    }
    for (std::size_t delta = 0; delta < dim; ++delta) {
      if (std::abs(s[delta]) < static_cast<std::ptrdiff_t>(sys.orders()[delta]) + 1)
        continue;
      ++rep.configurations;
      double denom = 0.0;
      for (std::size_t j = 0; j < dim; ++j)
        if (j != delta)
          denom += 1.0 + static_cast<double>(std::abs(s[j]));
      denom = std::max(1.0, denom);
      for (std::size_t l = 0; l < L; ++l) {
        best[l] = 0;
        prev[l] = -1;
        if (!valid[l])
          continue;
        best[l] = 1;
        for (std::size_t q = 0; q < l; ++q) {
          if (!valid[q] || best[q] + 1 <= best[l])
            continue;
          bool ok = jbox[q][delta].contains(jbox[l][delta]);
          for (std::size_t d = 0; ok && d < dim; ++d)
            ok = cbox[q][d].contains(cbox[l][d]);
          if (ok) {
            best[l] = best[q] + 1;
            prev[l] = static_cast<std::ptrdiff_t>(q);
          }
        }
        const double ratio = static_cast<double>(best[l]) / denom;
        if (best[l] > rep.max_card)
          rep.max_card = best[l];
        if (ratio > rep.max_ratio) {
          rep.max_ratio = ratio;
          rep.witness.s = s;
          rep.witness.dir = delta;
          rep.witness.chain.clear();
          for (std::ptrdiff_t q = static_cast<std::ptrdiff_t>(l); q >= 0; q = prev[static_cast<std::size_t>(q)])
            rep.witness.chain.push_back(static_cast<std::size_t>(q));
          std::reverse(rep.witness.chain.begin(), rep.witness.chain.end());
        }
      }
    }
    std::size_t d = dim;
    while (d-- > 0) {
      if (++s[d] <= R)
        break;
      s[d] = -R;
    }
    if (d == static_cast<std::size_t>(-1))
      break;
  }
  return rep;
}

nlohmann::json regularity_report_json(const GammaReport &g, const BetaReport &b) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["gamma"] = g.per_direction;
  j["gamma_max"] = g.gamma;
  if (b.cap_exceeded)
    j["beta"] = "cap_exceeded";
  else
    j["beta"] = b.beta;
  j["beta_cap"] = b.cap;
  j["longest_chain"] = b.longest;
  nlohmann::json chain = nlohmann::json::array();
  for (const auto &a : b.witness.chain)
    chain.push_back({{"step", a.step}, {"index", a.index}});
  j["witness"] = {
      {"gamma", {{"dir", g.witness.dir},
                 {"step", g.witness.step},
                 {"a", {g.witness.a.first, g.witness.a.second}},
                 {"b", {g.witness.b.first, g.witness.b.second}},
                 {"ratio", g.witness.ratio}}},
      {"beta", {{"dir", b.witness.dir},
                {"start", b.witness.start},
                {"end", b.witness.end},
                {"support", {b.witness.support.first, b.witness.support.second}},
                {"chain", chain}}}};
  return j;
}

} // namespace osp
