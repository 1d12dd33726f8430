#pragma once

#include "core/partition.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace osp {

struct GeneratorSpec {
  /// random | dyadic | quasi_dyadic | example | single_direction
  std::string kind = "random";
  std::size_t dim = 1;
  /// Number of splits for random and single_direction.
  std::size_t steps = 20;
  /// Levels for dyadic and quasi_dyadic.
  std::size_t levels = 2;
  /// Split fractions of quasi_dyadic lie in [theta, 1 - theta].
  double theta = 0.25;
  /// Split fractions of random filtrations lie in [min_fraction, 1 - min_fraction].
  double min_fraction = 0.1;
  /// Example family parameters.
  std::size_t ell = 4;
  int k = 2;
  /// Refined direction of single_direction.
  std::size_t dir = 0;
  std::uint64_t seed = 0;
};

TensorFiltration random_filtration(std::size_t dim, std::size_t steps, std::uint64_t seed, double min_fraction = 0.1);
TensorFiltration dyadic_filtration(std::size_t dim, std::size_t levels);
TensorFiltration quasi_dyadic_filtration(std::size_t dim, std::size_t levels, double theta, std::uint64_t seed);
/// F(1/ell) with k - 1 middle atoms in every direction; the outer refinements are interleaved
/// across directions.
TensorFiltration example_filtration(std::size_t dim, std::size_t ell, int k);
/// Random splits in direction `dir` only.
TensorFiltration single_direction_filtration(std::size_t dim, std::size_t steps, std::size_t dir, std::uint64_t seed);

TensorFiltration generate(const GeneratorSpec &spec);
GeneratorSpec generator_from_json(const nlohmann::json &j);
nlohmann::json generator_to_json(const GeneratorSpec &s);

} // namespace osp
