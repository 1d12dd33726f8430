#pragma once

#include "core/generators.hpp"
#include "core/partition.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace osp {

struct ExperimentConfig {
  /// Filtration source: a JSON file or a generator.
  std::string filtration_file;
  std::optional<GeneratorSpec> generator;
  std::vector<int> orders;
  /// gaussian | target
  std::string coefficient_model = "gaussian";
  /// Number of leading functions carrying coefficients; 0 means all.
  std::size_t coefficient_count = 0;
  /// Target for the "target" model and ae-sweep: sin | abs | jump | bump | poly
  std::string target = "sin";
  /// random | identity | all_flip | enumerate
  std::string sign_model = "random";
  std::size_t sign_vectors = 16;
  std::vector<double> lambda_grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  /// relative: lambda_grid holds multiples of ||f||_1 / |I|.
  bool lambda_relative = true;
  std::size_t grid_subcells = 2;
  std::uint64_t seed = 0;
  /// Decay parameter of the maximal function; negative selects q_fit^{1/2}.
  double rho = -1.0;
  std::size_t beta_cap = 12;
  /// Remez check parameters.
  int remez_degree = 3;
  std::size_t remez_dim = 2;
  std::size_t remez_trials = 1000;
  std::size_t remez_samples = 4096;
};

ExperimentConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ExperimentConfig &c);
ExperimentConfig load_config(const std::string &path);
/// Filtration named by the config (file or generator).
TensorFiltration config_filtration(const ExperimentConfig &c);

} // namespace osp
