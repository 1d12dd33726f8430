#include "core/generators.hpp"

#include "core/error.hpp"
#include "core/regularity.hpp"

#include <random>

namespace osp {

namespace {

std::vector<Partition1D> unit_bases(std::size_t dim) {
  require(dim >= 1, ErrorCode::InvalidArgument, "generator: dim must be >= 1");
  return std::vector<Partition1D>(dim, Partition1D(0.0, 1.0));
}

void random_split(TensorFiltration &f, std::size_t dir, std::mt19937_64 &rng, double min_fraction) {
  const Partition1D &p = f.partition(f.steps(), dir);
  std::uniform_int_distribution<std::size_t> pick(0, p.atom_count() - 1);
  std::uniform_real_distribution<double> frac(min_fraction, 1.0 - min_fraction);
  const std::size_t a = pick(rng);
  const Interval iv = p.atom(a);
  f.split(dir, a, iv.lo + frac(rng) * iv.length());
}

} // namespace

TensorFiltration random_filtration(std::size_t dim, std::size_t steps, std::uint64_t seed, double min_fraction) {
  require(min_fraction > 0.0 && min_fraction < 0.5, ErrorCode::InvalidArgument,
          "random_filtration: min_fraction must lie in (0, 0.5)");
  TensorFiltration f(unit_bases(dim));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dir(0, dim - 1);
  for (std::size_t s = 0; s < steps; ++s)
    random_split(f, dir(rng), rng, min_fraction);
  return f;
}

TensorFiltration dyadic_filtration(std::size_t dim, std::size_t levels) {
  return dyadic_extension(unit_bases(dim), levels);
}

TensorFiltration quasi_dyadic_filtration(std::size_t dim, std::size_t levels, double theta, std::uint64_t seed) {
  require(theta > 0.0 && theta <= 0.5, ErrorCode::InvalidArgument, "quasi_dyadic: theta must lie in (0, 0.5]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(theta, 1.0 - theta);
  return dyadic_extension(unit_bases(dim), levels, [&](std::size_t, const Interval &iv) {
    return theta == 0.5 ? 0.5 * (iv.lo + iv.hi) : iv.lo + frac(rng) * iv.length();
  });
}

TensorFiltration example_filtration(std::size_t dim, std::size_t ell, int k) {
  require(dim >= 1, ErrorCode::InvalidArgument, "example_filtration: dim must be >= 1");
  require(k >= 2, ErrorCode::InvalidArgument, "example_filtration: k must be >= 2");
  const ExampleFiltration ex = make_example_filtration(ell, k, k - 1);
  TensorFiltration f(std::vector<Partition1D>(dim, ex.base));
  for (const auto &s : ex.schedule)
    for (std::size_t d = 0; d < dim; ++d)
      f.split(d, s.atom, s.x);
  return f;
}

TensorFiltration single_direction_filtration(std::size_t dim, std::size_t steps, std::size_t dir, std::uint64_t seed) {
  require(dir < dim, ErrorCode::InvalidArgument, "single_direction: dir out of range");
  TensorFiltration f(unit_bases(dim));
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < steps; ++s)
    random_split(f, dir, rng, 0.25);
  return f;
}

TensorFiltration generate(const GeneratorSpec &s) {
  if (s.kind == "random")
    return random_filtration(s.dim, s.steps, s.seed, s.min_fraction);
  if (s.kind == "dyadic")
    return dyadic_filtration(s.dim, s.levels);
  if (s.kind == "quasi_dyadic")
    return quasi_dyadic_filtration(s.dim, s.levels, s.theta, s.seed);
  if (s.kind == "example")
    return example_filtration(s.dim, s.ell, s.k);
  if (s.kind == "single_direction")
    return single_direction_filtration(s.dim, s.steps, s.dir, s.seed);
  fail(ErrorCode::InvalidArgument, "unknown generator kind '" + s.kind + "'");
}

GeneratorSpec generator_from_json(const nlohmann::json &j) {
  require(j.is_object(), ErrorCode::Parse, "generator: expected an object");
  static const char *known[] = {"kind", "dim", "steps", "levels", "theta", "min_fraction", "ell", "k", "dir", "seed"};
  for (const auto &[key, v] : j.items()) {
    (void)v;
    bool ok = false;
    for (const char *k : known)
      ok = ok || key == k;
    require(ok, ErrorCode::Parse, "generator: unknown key '" + key + "'");
  }
  GeneratorSpec s;
  try {
    s.kind = j.value("kind", s.kind);
    s.dim = j.value("dim", s.dim);
    s.steps = j.value("steps", s.steps);
    s.levels = j.value("levels", s.levels);
    s.theta = j.value("theta", s.theta);
    s.min_fraction = j.value("min_fraction", s.min_fraction);
    s.ell = j.value("ell", s.ell);
    s.k = j.value("k", s.k);
    s.dir = j.value("dir", s.dir);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::Parse, std::string("generator: ") + e.what());
  }
  return s;
}

nlohmann::json generator_to_json(const GeneratorSpec &s) {
  return {{"kind", s.kind},   {"dim", s.dim}, {"steps", s.steps}, {"levels", s.levels},
          {"theta", s.theta}, {"min_fraction", s.min_fraction},   {"ell", s.ell},
          {"k", s.k},         {"dir", s.dir}, {"seed", s.seed}};
}

} // namespace osp
