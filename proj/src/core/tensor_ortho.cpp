#include "core/tensor_ortho.hpp"

#include "core/error.hpp"
#include "core/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace osp {

// ---------------------------------------------------------------- OrthoSystem

OrthoSystem::OrthoSystem(TensorFiltration filtration, std::vector<int> orders)
    : filtration_(std::move(filtration)), orders_(std::move(orders)) {
  require(orders_.size() == filtration_.dim(), ErrorCode::InvalidArgument,
          "OrthoSystem: one order per direction required");
  for (int k : orders_)
    require(k >= 1, ErrorCode::InvalidArgument, "OrthoSystem: orders must be positive");
  stage_bases_.resize(dim());
  pool_.resize(dim());
  final_.resize(dim());
  for (std::size_t d = 0; d < dim(); ++d) {
    const Filtration1D &f = filtration_.factor(d);
    for (std::size_t s = 0; s <= f.step_count(); ++s)
      stage_bases_[d].emplace_back(f.stage(s), orders_[d]);
    final_[d].resize(static_cast<Eigen::Index>(stage_bases_[d].back().dimension()), 0);
  }
  block_start_.push_back(0);
}

const BSplineBasis &OrthoSystem::stage_basis(std::size_t dir, std::size_t stage) const {
  return stage_bases_.at(dir).at(stage);
}

const BSplineBasis &OrthoSystem::final_basis(std::size_t dir) const { return stage_bases_.at(dir).back(); }

Eigen::MatrixXd OrthoSystem::lift(std::size_t dir, const Eigen::MatrixXd &c, std::size_t from,
                                  std::size_t to) const {
  require(from <= to && to < stage_bases_.at(dir).size(), ErrorCode::Index, "lift: invalid stages");
  Eigen::MatrixXd cur = c;
  const Filtration1D &f = filtration_.factor(dir);
  for (std::size_t s = from + 1; s <= to; ++s) {
    const BSplineBasis &b = stage_bases_[dir][s - 1];
    const auto alpha = insertion_alphas(b, f.step(s).atom, f.step(s).x);
    Eigen::MatrixXd next(cur.rows() + 1, cur.cols());
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
      const double a = alpha[static_cast<std::size_t>(i)];
      if (a == 1.0)
        next.row(i) = cur.row(i);
      else if (a == 0.0)
        next.row(i) = cur.row(i - 1);
      else
        next.row(i) = a * cur.row(i) + (1.0 - a) * cur.row(i - 1);
    }
    cur.swap(next);
  }
  return cur;
}

std::size_t OrthoSystem::add_factor(std::size_t dir, FactorFunction f) {
  require(f.stage < stage_bases_.at(dir).size(), ErrorCode::Index, "add_factor: stage out of range");
  require(static_cast<std::size_t>(f.coeffs.size()) == stage_basis(dir, f.stage).dimension(), ErrorCode::Size,
          "add_factor: coefficient length does not match the stage basis");
  require(pool_[dir].empty() || pool_[dir].back().stage <= f.stage, ErrorCode::Internal,
          "add_factor: pool entries must be added in stage order");
  const Eigen::MatrixXd lifted = lift(dir, f.coeffs, f.stage, stage_bases_[dir].size() - 1);
  Eigen::MatrixXd &fin = final_[dir];
  fin.conservativeResize(fin.rows(), fin.cols() + 1);
  fin.col(fin.cols() - 1) = lifted.col(0);
  pool_[dir].push_back(std::move(f));
  return pool_[dir].size() - 1;
}

void OrthoSystem::add_function(TensorOrthoFunction f) {
  require(f.factors.size() == dim(), ErrorCode::Size, "add_function: one factor per direction required");
  for (std::size_t d = 0; d < dim(); ++d)
    require(f.factors[d] < pool_[d].size(), ErrorCode::Index, "add_function: unknown factor id");
  functions_.push_back(std::move(f));
}

void OrthoSystem::close_block() { block_start_.push_back(functions_.size()); }

Eigen::MatrixXd OrthoSystem::pool_gram(std::size_t dir) const {
  const Eigen::MatrixXd g = gram_matrix(final_basis(dir)).dense();
  const Eigen::MatrixXd &c = final_[dir];
  return c.transpose() * g * c;
}

double OrthoSystem::eval(std::size_t l, std::span<const double> x) const {
  const auto &fn = function(l);
  require(x.size() == dim(), ErrorCode::InvalidArgument, "eval: point dimension mismatch");
  double v = 1.0;
  for (std::size_t d = 0; d < dim(); ++d) {
    const auto id = static_cast<Eigen::Index>(fn.factors[d]);
    const Spline s(final_basis(d), final_[d].col(id));
    v *= s(x[d]);
  }
  return v;
}

TensorSpline OrthoSystem::tensor_spline(std::size_t l) const {
  const auto &fn = function(l);
  std::vector<BSplineBasis> bases;
  std::vector<const double *> vecs;
  for (std::size_t d = 0; d < dim(); ++d) {
    bases.push_back(final_basis(d));
    vecs.push_back(final_[d].col(static_cast<Eigen::Index>(fn.factors[d])).data());
  }
  TensorSpline t(std::move(bases));
  add_rank1(t.coeffs, t.shape(), 1.0, vecs);
  return t;
}

std::vector<std::size_t> OrthoSystem::step_sequence() const {
  std::vector<std::size_t> seq(functions_.size());
  for (std::size_t l = 0; l < functions_.size(); ++l)
    seq[l] = functions_[l].n;
  return seq;
}

// ---------------------------------------------------------------- base block

std::vector<std::pair<Eigen::VectorXd, std::size_t>> base_orthonormal(const BSplineBasis &basis) {
  const std::size_t n = basis.dimension();
  std::vector<std::pair<Eigen::VectorXd, std::size_t>> out;
  const BandedSymmetric g = gram_matrix(basis);
  if (basis.partition().atom_count() == 1) {
    // Legendre polynomials expanded in the Bernstein-type B-spline basis: solve G c = <P_j, N_i>.
    BandedCholesky chol(g);
    const int k = basis.order();
    const double a = basis.partition().left(), b = basis.partition().right();
    std::vector<double> nodes, weights;
    gauss_on_interval(k, a, b, nodes, weights);
    const Eigen::MatrixXd colloc = collocation_matrix(basis, nodes);
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t q = 0; q < nodes.size(); ++q)
        load += weights[q] * legendre_orthonormal(j, nodes[q], a, b) * colloc.row(static_cast<Eigen::Index>(q)).transpose();
      out.emplace_back(chol.solve(load), 0);
    }
    return out;
  }
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < n; ++i) {
    subset.push_back(i);
    Eigen::VectorXd x = dual_vector(g, subset, i);
    x /= std::sqrt(x[static_cast<Eigen::Index>(i)]);
    out.emplace_back(std::move(x), basis.largest_atom(i));
  }
  return out;
}

// ---------------------------------------------------------------- builder

SystemBuilder::SystemBuilder(const TensorFiltration &filtration, std::vector<int> orders, BuildOptions opts)
    : sys_(filtration, std::move(orders)), opts_(std::move(opts)), rng_(opts_.policy.seed),
      duals_(filtration.dim()) {}

const BandedSymmetric &SystemBuilder::gram(std::size_t dir, std::size_t stage) {
  auto key = std::make_pair(dir, stage);
  auto it = grams_.find(key);
  if (it == grams_.end())
    it = grams_.emplace(key, gram_matrix(sys_.stage_basis(dir, stage))).first;
  return it->second;
}

std::size_t SystemBuilder::dual_id(std::size_t dir, std::size_t stage, const std::vector<std::size_t> &omega,
                                   std::size_t mu) {
  auto key = std::make_tuple(stage, omega, mu);
  auto &cache = duals_[dir];
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  Eigen::VectorXd x = dual_vector(gram(dir, stage), omega, mu);
  const double xm = x[static_cast<Eigen::Index>(mu)];
  require(xm > 0.0, ErrorCode::Conditioning, "dual function with non-positive norm");
  x /= std::sqrt(xm);
  const std::size_t j = sys_.stage_basis(dir, stage).largest_atom(mu);
  const std::size_t id = sys_.add_factor(dir, {FactorKind::Dual, stage, std::move(x), j});
  cache.emplace(std::move(key), id);
  return id;
}

std::size_t SystemBuilder::choose(std::size_t dir, std::size_t n, const std::vector<bool> &taken) {
  const std::size_t dim = taken.size();
  std::size_t pick = dim;
  if (opts_.policy.chooser) {
    pick = opts_.policy.chooser(dir, n, taken);
  } else {
    switch (opts_.policy.selection) {
    case SelectionKind::LeftToRight:
      for (std::size_t i = 0; i < dim && pick == dim; ++i)
        if (!taken[i])
          pick = i;
      break;
    case SelectionKind::RightToLeft:
      for (std::size_t i = dim; i-- > 0 && pick == dim;)
        if (!taken[i])
          pick = i;
      break;
    case SelectionKind::Random: {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < dim; ++i)
        if (!taken[i])
          free.push_back(i);
      if (!free.empty())
        pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng_)];
      break;
    }
    }
  }
  require(pick < dim && !taken[pick], ErrorCode::InvalidArgument,
          "selection policy chose an index outside Lambda \\ Omega");
  return pick;
}

void SystemBuilder::build_base() {
  const std::size_t d = sys_.dim();
  std::vector<std::vector<std::size_t>> ids(d);
  for (std::size_t dir = 0; dir < d; ++dir)
    for (auto &[c, j] : base_orthonormal(sys_.stage_basis(dir, 0)))
      ids[dir].push_back(sys_.add_factor(dir, {FactorKind::Base, 0, std::move(c), j}));
  std::vector<std::size_t> idx(d, 0);
  std::size_t m = 0;
  while (true) {
    TensorOrthoFunction f;
    f.n = 0;
    f.m = ++m;
    f.j = AtomRef{0, std::vector<std::ptrdiff_t>(d)};
    for (std::size_t dir = 0; dir < d; ++dir) {
      f.factors.push_back(ids[dir][idx[dir]]);
      f.j.index[dir] = static_cast<std::ptrdiff_t>(sys_.pool(dir)[ids[dir][idx[dir]]].j_atom);
    }
    sys_.add_function(std::move(f));
    std::size_t dir = d;
    while (dir > 0) {
      --dir;
      if (++idx[dir] < ids[dir].size())
        break;
      idx[dir] = 0;
      if (dir == 0) {
        sys_.close_block();
        return;
      }
    }
  }
}

std::span<const TensorOrthoFunction> SystemBuilder::build_block(std::size_t n) {
  require(n == next_, ErrorCode::InvalidArgument, "build_block: blocks must be built in filtration order");
  const TensorFiltration &tf = sys_.filtration();
  require(n <= tf.steps(), ErrorCode::Index, "build_block: step beyond the filtration");
  ++next_;
  if (n == 0) {
    build_base();
    return {sys_.functions().data() + sys_.block_begin(0), sys_.block_end(0) - sys_.block_begin(0)};
  }
  const std::size_t d = sys_.dim();
  const ScheduleEntry &e = tf.entry(n);
  const std::size_t dir0 = e.dir;
  const OrthoFunction f =
      next_ortho_function(tf.factor(dir0), e.factor_step, sys_.orders()[dir0], opts_.j_rule);
  const std::size_t f_id = sys_.add_factor(dir0, {FactorKind::Ortho, e.factor_step, f.spline.coeffs, f.j_atom});

  // Construction order of the remaining directions, slowest digit first.
  std::vector<std::size_t> order;
  for (std::size_t dir = 0; dir < d; ++dir)
    if (dir != dir0)
      order.push_back(dir);
  if (opts_.policy.permutation == PermutationKind::Reversed) {
    std::reverse(order.begin(), order.end());
  } else if (opts_.policy.permutation == PermutationKind::Random) {
    std::mt19937_64 prng(opts_.policy.seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
    std::shuffle(order.begin(), order.end(), prng);
  }

  struct State {
    std::size_t dir, stage, dim;
    std::vector<bool> taken;
    std::vector<std::size_t> omega;
    std::size_t id = 0;
  };
  std::vector<State> st;
  std::size_t total = 1;
  for (std::size_t dir : order) {
    const std::size_t stage = tf.factor_step(n, dir);
    const std::size_t dim = sys_.stage_basis(dir, stage).dimension();
    st.push_back({dir, stage, dim, std::vector<bool>(dim, false), {}, 0});
    total *= dim;
  }
  auto restart = [&](State &s) {
    std::fill(s.taken.begin(), s.taken.end(), false);
    const std::size_t nu = choose(s.dir, n, s.taken);
    s.taken[nu] = true;
    s.omega = {nu};
    s.id = dual_id(s.dir, s.stage, s.omega, nu);
  };
  auto emit = [&](std::size_t m) {
    TensorOrthoFunction fn;
    fn.n = n;
    fn.m = m;
    fn.factors.assign(d, 0);
    fn.j = AtomRef{n, std::vector<std::ptrdiff_t>(d)};
    fn.factors[dir0] = f_id;
    fn.j.index[dir0] = static_cast<std::ptrdiff_t>(f.j_atom);
    for (const State &s : st) {
      fn.factors[s.dir] = s.id;
      fn.j.index[s.dir] = static_cast<std::ptrdiff_t>(sys_.pool(s.dir)[s.id].j_atom);
    }
    sys_.add_function(std::move(fn));
  };

  for (State &s : st)
    restart(s);
  emit(1);
  for (std::size_t m = 2; m <= total; ++m) {
    std::size_t p0 = st.size();
    for (std::size_t p = st.size(); p-- > 0;)
      if (st[p].omega.size() < st[p].dim) {
        p0 = p;
        break;
      }
    require(p0 < st.size(), ErrorCode::Internal, "build_block: odometer exhausted early");
    State &s = st[p0];
    const std::size_t mu = choose(s.dir, n, s.taken);
    s.taken[mu] = true;
    s.omega.insert(std::upper_bound(s.omega.begin(), s.omega.end(), mu), mu);
    s.id = dual_id(s.dir, s.stage, s.omega, mu);
    for (std::size_t p = p0 + 1; p < st.size(); ++p)
      restart(st[p]);
    emit(m);
  }
  sys_.close_block();
  return {sys_.functions().data() + sys_.block_begin(n), sys_.block_end(n) - sys_.block_begin(n)};
}

OrthoSystem SystemBuilder::finish() {
  while (next_ <= sys_.filtration().steps())
    build_block(next_);
  return std::move(sys_);
}

OrthoSystem build_system(const TensorFiltration &filtration, std::vector<int> orders, const BuildOptions &opts) {
  SystemBuilder b(filtration, std::move(orders), opts);
  return b.finish();
}

// ---------------------------------------------------------------- checks

double orthonormality_defect(const OrthoSystem &sys) {
  std::vector<Eigen::MatrixXd> g;
  for (std::size_t d = 0; d < sys.dim(); ++d)
    g.push_back(sys.pool_gram(d));
  const auto &fns = sys.functions();
  double worst = 0.0;
  for (std::size_t a = 0; a < fns.size(); ++a)
    for (std::size_t b = a; b < fns.size(); ++b) {
      double v = 1.0;
      for (std::size_t d = 0; d < sys.dim(); ++d)
        v *= g[d](static_cast<Eigen::Index>(fns[a].factors[d]), static_cast<Eigen::Index>(fns[b].factors[d]));
      worst = std::max(worst, std::abs(v - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

SpanReport span_check(const OrthoSystem &sys, std::uint64_t seed, std::size_t samples) {
  SpanReport rep;
  const std::size_t d = sys.dim();
  const TensorFiltration &tf = sys.filtration();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  // Pool coefficients lifted to the current stage of each direction.
  std::vector<Eigen::MatrixXd> cur(d);
  std::vector<std::size_t> cur_stage(d, 0), cur_count(d, 0);
  for (std::size_t dir = 0; dir < d; ++dir)
    cur[dir].resize(static_cast<Eigen::Index>(sys.stage_basis(dir, 0).dimension()), 0);

  for (std::size_t n = 0; n < sys.blocks(); ++n) {
    Shape shape;
    std::vector<Eigen::MatrixXd> grams;
    std::size_t space_dim = 1;
    for (std::size_t dir = 0; dir < d; ++dir) {
      const std::size_t t = tf.factor_step(n, dir);
      if (t > cur_stage[dir]) {
        cur[dir] = sys.lift(dir, cur[dir], cur_stage[dir], t);
        cur_stage[dir] = t;
      }
      const auto &pool = sys.pool(dir);
      while (cur_count[dir] < pool.size() && pool[cur_count[dir]].stage <= t) {
        const auto &pf = pool[cur_count[dir]];
        const Eigen::MatrixXd c = sys.lift(dir, pf.coeffs, pf.stage, t);
        cur[dir].conservativeResize(cur[dir].rows(), cur[dir].cols() + 1);
        cur[dir].col(cur[dir].cols() - 1) = c.col(0);
        ++cur_count[dir];
      }
      const BSplineBasis &b = sys.stage_basis(dir, t);
      shape.push_back(b.dimension());
      space_dim *= b.dimension();
      grams.push_back(gram_matrix(b).dense());
    }
    const std::size_t count = sys.block_end(n);
    if (count != space_dim)
      rep.counts_match = false;
    for (std::size_t smp = 0; smp < samples; ++smp) {
      std::vector<double> s(space_dim);
      for (auto &v : s)
        v = gauss(rng);
      Shape out;
      const std::vector<double> gs = kronecker_apply(s, shape, grams, out);
      std::vector<double> r = s;
      std::vector<const double *> vecs(d);
      for (std::size_t l = 0; l < count; ++l) {
        const auto &fn = sys.function(l);
        for (std::size_t dir = 0; dir < d; ++dir) {
          require(fn.factors[dir] < cur_count[dir], ErrorCode::Internal,
                  "span_check: function uses a factor from a later stage");
          vecs[dir] = cur[dir].col(static_cast<Eigen::Index>(fn.factors[dir])).data();
        }
        const double c = contract_rank1(gs, shape, vecs);
        add_rank1(r, shape, -c, vecs);
      }
      const std::vector<double> gr = kronecker_apply(r, shape, grams, out);
      double rr = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < space_dim; ++i) {
        rr += r[i] * gr[i];
        ss += s[i] * gs[i];
      }
      const double res = std::sqrt(std::max(rr, 0.0) / ss);
      if (res > rep.max_residual) {
        rep.max_residual = res;
        rep.worst_step = n;
      }
    }
  }
  return rep;
}

namespace {

// Sup of |g| on each final atom, for every pool entry of one direction.
Eigen::MatrixXd pool_atom_sups(const OrthoSystem &sys, std::size_t dir) {
  const BSplineBasis &fb = sys.final_basis(dir);
  const Eigen::MatrixXd &c = sys.final_coeffs(dir);
  const std::size_t atoms = fb.partition().atom_count();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(atoms), c.cols());
  for (Eigen::Index p = 0; p < c.cols(); ++p) {
    const Spline s(fb, c.col(p));
    for (std::size_t a = 0; a < atoms; ++a)
      out(static_cast<Eigen::Index>(a), p) = max_abs_on_atom(s, a);
  }
  return out;
}

// Index of the stage atom containing each final atom.
std::vector<std::size_t> final_to_stage(const Partition1D &fine, const Partition1D &stage) {
  std::vector<std::size_t> map(fine.atom_count());
  for (std::size_t a = 0; a < fine.atom_count(); ++a) {
    const Interval iv = fine.atom(a);
    map[a] = stage.atom_of(0.5 * (iv.lo + iv.hi));
  }
  return map;
}

} // namespace

TensorDecayReport fit_tensor_decay(const OrthoSystem &sys) {
  TensorDecayReport rep;
  const std::size_t d = sys.dim();
  const TensorFiltration &tf = sys.filtration();
  std::vector<Eigen::MatrixXd> sups(d);
  std::vector<std::vector<std::vector<double>>> norms(d); // [dir][p][pool id]
  for (std::size_t dir = 0; dir < d; ++dir) {
    sups[dir] = pool_atom_sups(sys, dir);
    const Eigen::MatrixXd &c = sys.final_coeffs(dir);
    norms[dir].assign(rep.p_values.size(), std::vector<double>(static_cast<std::size_t>(c.cols())));
    for (Eigen::Index p = 0; p < c.cols(); ++p) {
      const Spline s(sys.final_basis(dir), c.col(p));
      for (std::size_t pi = 0; pi < rep.p_values.size(); ++pi)
        norms[dir][pi][static_cast<std::size_t>(p)] =
            std::isinf(rep.p_values[pi]) ? sups[dir].col(p).maxCoeff() : lp_norm(s, rep.p_values[pi]);
    }
  }
  rep.ratio_min.assign(rep.p_values.size(), std::numeric_limits<double>::infinity());
  rep.ratio_max.assign(rep.p_values.size(), 0.0);

  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> maps;
  std::vector<double> global_env;
  for (const auto &fn : sys.functions()) {
    // Per-direction envelope over distances, then a (max, *) convolution across directions.
    std::vector<double> env{1.0};
    for (std::size_t dir = 0; dir < d; ++dir) {
      const std::size_t t = tf.factor_step(fn.n, dir);
      const Partition1D &stage = tf.partition(fn.n, dir);
      auto key = std::make_pair(dir, t);
      auto it = maps.find(key);
      if (it == maps.end())
        it = maps.emplace(key, final_to_stage(sys.final_basis(dir).partition(), stage)).first;
      const auto &map = it->second;
      std::vector<double> atom_sup(stage.atom_count(), 0.0);
      const auto col = static_cast<Eigen::Index>(fn.factors[dir]);
      for (std::size_t a = 0; a < map.size(); ++a)
        atom_sup[map[a]] = std::max(atom_sup[map[a]], sups[dir](static_cast<Eigen::Index>(a), col));
      const auto ja = static_cast<std::size_t>(fn.j.index[dir]);
      const Interval j = stage.atom(ja);
      std::vector<double> e1(stage.atom_count(), 0.0);
      for (std::size_t a = 0; a < stage.atom_count(); ++a) {
        const Interval iv = stage.atom(a);
        const double conv = std::max(iv.hi, j.hi) - std::min(iv.lo, j.lo);
        const std::size_t dist = a > ja ? a - ja : ja - a;
        e1[dist] = std::max(e1[dist], atom_sup[a] * conv / std::sqrt(j.length()));
      }
      std::vector<double> next(env.size() + e1.size() - 1, 0.0);
      for (std::size_t u = 0; u < env.size(); ++u)
        for (std::size_t v = 0; v < e1.size(); ++v)
          next[u + v] = std::max(next[u + v], env[u] * e1[v]);
      env.swap(next);
    }
    if (global_env.size() < env.size())
      global_env.resize(env.size(), 0.0);
    for (std::size_t u = 0; u < env.size(); ++u)
      global_env[u] = std::max(global_env[u], env[u]);

    double l1inf = 1.0;
    for (std::size_t pi = 0; pi < rep.p_values.size(); ++pi) {
      double ratio = 1.0;
      for (std::size_t dir = 0; dir < d; ++dir) {
        const double jl = tf.partition(fn.n, dir).atom(static_cast<std::size_t>(fn.j.index[dir])).length();
        const double p = rep.p_values[pi];
        const double expo = (std::isinf(p) ? 0.0 : 1.0 / p) - 0.5;
        ratio *= norms[dir][pi][fn.factors[dir]] / std::pow(jl, expo);
      }
      rep.ratio_min[pi] = std::min(rep.ratio_min[pi], ratio);
      rep.ratio_max[pi] = std::max(rep.ratio_max[pi], ratio);
    }
    for (std::size_t dir = 0; dir < d; ++dir)
      l1inf *= norms[dir][0][fn.factors[dir]] * norms[dir].back()[fn.factors[dir]];
    rep.dual_product_max = std::max(rep.dual_product_max, l1inf);
  }
  std::vector<DecayPoint> pts;
  for (std::size_t u = 0; u < global_env.size(); ++u)
    pts.push_back({u, global_env[u]});
  rep.fit = fit_decay(pts);
  rep.envelope = std::move(global_env);
  return rep;
}

std::size_t max_j_multiplicity(const OrthoSystem &sys) {
  std::size_t worst = 0;
  for (std::size_t n = 1; n < sys.blocks(); ++n) {
    std::map<std::vector<std::ptrdiff_t>, std::size_t> count;
    for (std::size_t l = sys.block_begin(n); l < sys.block_end(n); ++l)
      worst = std::max(worst, ++count[sys.function(l).j.index]);
  }
  return worst;
}

std::vector<double> expand_loads(const OrthoSystem &sys, const std::vector<double> &loads, std::size_t count) {
  Shape shape;
  for (std::size_t dir = 0; dir < sys.dim(); ++dir)
    shape.push_back(sys.final_basis(dir).dimension());
  require(loads.size() == shape_size(shape), ErrorCode::Size, "expand_loads: load tensor has wrong size");
  count = std::min(count, sys.size());
  std::vector<double> out(count);
  std::vector<const double *> vecs(sys.dim());
  for (std::size_t l = 0; l < count; ++l) {
    const auto &fn = sys.function(l);
    for (std::size_t dir = 0; dir < sys.dim(); ++dir)
      vecs[dir] = sys.final_coeffs(dir).col(static_cast<Eigen::Index>(fn.factors[dir])).data();
    out[l] = contract_rank1(loads, shape, vecs);
  }
  return out;
}

std::vector<double> expand_spline(const OrthoSystem &sys, const TensorSpline &s) {
  require(s.bases.size() == sys.dim(), ErrorCode::InvalidArgument, "expand_spline: dimension mismatch");
  // Re-express s on the common refinement with the final bases when needed, then apply Gram factors.
  std::vector<Eigen::MatrixXd> cross;
  for (std::size_t dir = 0; dir < sys.dim(); ++dir) {
    const BSplineBasis &fb = sys.final_basis(dir);
    const BSplineBasis &sb = s.bases[dir];
    // cross(i, j) = <N_i^final, N_j^s>
    const Partition1D p = common_refinement(fb.partition(), sb.partition());
    const int nq = (fb.order() + sb.order()) / 2 + 1;
    std::vector<double> nodes, weights;
    for (std::size_t a = 0; a < p.atom_count(); ++a) {
      const Interval iv = p.atom(a);
      gauss_on_interval(nq, iv.lo, iv.hi, nodes, weights);
    }
    const Eigen::MatrixXd cf = collocation_matrix(fb, nodes);
    const Eigen::MatrixXd cs = collocation_matrix(sb, nodes);
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    cross.push_back(cf.transpose() * w.asDiagonal() * cs);
  }
  Shape out;
  const std::vector<double> loads = kronecker_apply(s.coeffs, s.shape(), cross, out);
  return expand_loads(sys, loads, sys.size());
}

TensorSpline synthesize(const OrthoSystem &sys, std::span<const double> c) {
  std::vector<BSplineBasis> bases;
  for (std::size_t dir = 0; dir < sys.dim(); ++dir)
    bases.push_back(sys.final_basis(dir));
  TensorSpline t(std::move(bases));
  const Shape shape = t.shape();
  require(c.size() <= sys.size(), ErrorCode::Index, "synthesize: more coefficients than functions");
  std::vector<const double *> vecs(sys.dim());
  for (std::size_t l = 0; l < c.size(); ++l) {
    if (c[l] == 0.0)
      continue;
    const auto &fn = sys.function(l);
    for (std::size_t dir = 0; dir < sys.dim(); ++dir)
      vecs[dir] = sys.final_coeffs(dir).col(static_cast<Eigen::Index>(fn.factors[dir])).data();
    add_rank1(t.coeffs, shape, c[l], vecs);
  }
  return t;
}

} // namespace osp
