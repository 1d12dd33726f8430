#include "core/config.hpp"

#include "core/error.hpp"
#include "core/system_io.hpp"

#include <algorithm>
#include <set>

namespace osp {

namespace {

void check_keys(const nlohmann::json &j, const std::set<std::string> &known, const std::string &where) {
  for (const auto &[key, v] : j.items()) {
    (void)v;
    require(known.count(key) > 0, ErrorCode::Parse, where + ": unknown key '" + key + "'");
  }
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json &j) {
  require(j.is_object(), ErrorCode::Parse, "config: expected an object");
  check_keys(j,
             {"format_version", "filtration", "orders", "coefficients", "signs", "lambda_grid", "lambda_scale",
              "grid_subcells", "seed", "rho", "beta_cap", "remez"},
             "config");
  require(j.value("format_version", 0) == 1, ErrorCode::Parse, "config: format_version must be 1");
  ExperimentConfig c;
  try {
    if (j.contains("filtration")) {
      const auto &fj = j.at("filtration");
      check_keys(fj, {"file", "generator"}, "config.filtration");
      require(fj.contains("file") != fj.contains("generator"), ErrorCode::Parse,
              "config.filtration: give exactly one of 'file' and 'generator'");
      if (fj.contains("file"))
        c.filtration_file = fj.at("file").get<std::string>();
      else
        c.generator = generator_from_json(fj.at("generator"));
    }
    if (j.contains("orders"))
      c.orders = j.at("orders").get<std::vector<int>>();
    if (j.contains("coefficients")) {
      const auto &cj = j.at("coefficients");
      check_keys(cj, {"model", "count", "target"}, "config.coefficients");
      c.coefficient_model = cj.value("model", c.coefficient_model);
      c.coefficient_count = cj.value("count", c.coefficient_count);
      c.target = cj.value("target", c.target);
    }
    if (j.contains("signs")) {
      const auto &sj = j.at("signs");
      check_keys(sj, {"model", "vectors"}, "config.signs");
      c.sign_model = sj.value("model", c.sign_model);
      c.sign_vectors = sj.value("vectors", c.sign_vectors);
    }
    if (j.contains("lambda_grid"))
      c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    if (j.contains("lambda_scale")) {
      const auto s = j.at("lambda_scale").get<std::string>();
      require(s == "relative" || s == "absolute", ErrorCode::Parse,
              "config: lambda_scale must be 'relative' or 'absolute'");
      c.lambda_relative = s == "relative";
    }
    c.grid_subcells = j.value("grid_subcells", c.grid_subcells);
    c.seed = j.value("seed", c.seed);
    c.rho = j.value("rho", c.rho);
    c.beta_cap = j.value("beta_cap", c.beta_cap);
    if (j.contains("remez")) {
      const auto &rj = j.at("remez");
      check_keys(rj, {"degree", "dim", "trials", "samples"}, "config.remez");
      c.remez_degree = rj.value("degree", c.remez_degree);
      c.remez_dim = rj.value("dim", c.remez_dim);
      c.remez_trials = rj.value("trials", c.remez_trials);
      c.remez_samples = rj.value("samples", c.remez_samples);
    }
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  require(!c.lambda_grid.empty(), ErrorCode::Parse, "config: lambda_grid must not be empty");
  for (std::size_t i = 0; i < c.lambda_grid.size(); ++i) {
    require(c.lambda_grid[i] > 0.0, ErrorCode::Parse, "config: lambda_grid must be positive");
    require(i == 0 || c.lambda_grid[i] > c.lambda_grid[i - 1], ErrorCode::Parse,
            "config: lambda_grid must be increasing");
  }
  const std::set<std::string> models{"gaussian", "target"}, signs{"random", "identity", "all_flip", "enumerate"};
  require(models.count(c.coefficient_model) > 0, ErrorCode::Parse, "config: unknown coefficient model");
  require(signs.count(c.sign_model) > 0, ErrorCode::Parse, "config: unknown sign model");
  require(c.grid_subcells >= 1, ErrorCode::Parse, "config: grid_subcells must be >= 1");
  require(c.sign_vectors >= 1, ErrorCode::Parse, "config: signs.vectors must be >= 1");
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig &c) {
  nlohmann::json j;
  j["format_version"] = 1;
  if (c.generator)
    j["filtration"] = {{"generator", generator_to_json(*c.generator)}};
  else if (!c.filtration_file.empty())
    j["filtration"] = {{"file", c.filtration_file}};
  j["orders"] = c.orders;
  j["coefficients"] = {{"model", c.coefficient_model}, {"count", c.coefficient_count}, {"target", c.target}};
  j["signs"] = {{"model", c.sign_model}, {"vectors", c.sign_vectors}};
  j["lambda_grid"] = c.lambda_grid;
  j["lambda_scale"] = c.lambda_relative ? "relative" : "absolute";
  j["grid_subcells"] = c.grid_subcells;
  j["seed"] = c.seed;
  j["rho"] = c.rho;
  j["beta_cap"] = c.beta_cap;
  j["remez"] = {{"degree", c.remez_degree},
                {"dim", c.remez_dim},
                {"trials", c.remez_trials},
                {"samples", c.remez_samples}};
  return j;
}

ExperimentConfig load_config(const std::string &path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::Parse, "config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

TensorFiltration config_filtration(const ExperimentConfig &c) {
  if (c.generator)
    return generate(*c.generator);
  require(!c.filtration_file.empty(), ErrorCode::InvalidArgument, "config: no filtration source");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(c.filtration_file));
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::Parse, "filtration " + c.filtration_file + ": " + e.what());
  }
  return filtration_from_json(j);
}

} // namespace osp
