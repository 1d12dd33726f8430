#include <orthospline/orthospline.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  int code;
  std::string message;
};

void check(osp_status st) {
  if (st != OSP_OK)
    throw Failure{1, osp_last_error()};
}

std::string take(char *s) {
  std::string out(s);
  osp_string_free(s);
  return out;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Failure{1, "cannot read " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Failure{1, "cannot write " + path};
  out << text;
}

struct Filtration {
  osp_filtration *h = nullptr;
  Filtration() = default;
  Filtration(const Filtration &) = delete;
  Filtration &operator=(const Filtration &) = delete;
  ~Filtration() { osp_filtration_free(h); }
};

struct System {
  osp_system *h = nullptr;
  System() = default;
  System(const System &) = delete;
  System &operator=(const System &) = delete;
  ~System() { osp_system_free(h); }
};

struct Globals {
  std::optional<unsigned long long> seed;
  std::string out;
  std::string format = "json";
  std::string config;
};

std::vector<int> orders_or_default(std::vector<int> orders, std::size_t dim) {
  if (orders.empty())
    orders.assign(dim, 2);
  return orders;
}

// Reads the experiment config, rebases a relative filtration file onto the
// config's directory and applies the --seed override.
json experiment_config(const Globals &g) {
  json cfg = json::object();
  if (!g.config.empty()) {
    try {
      cfg = json::parse(read_file(g.config));
    } catch (const json::exception &e) {
      throw Failure{1, g.config + ": " + e.what()};
    }
    auto it = cfg.find("filtration");
    if (it != cfg.end() && it->is_object() && it->contains("file") && (*it)["file"].is_string()) {
      fs::path p = (*it)["file"].get<std::string>();
      if (p.is_relative())
        (*it)["file"] = (fs::path(g.config).parent_path() / p).string();
    }
  }
  if (!cfg.contains("format_version"))
    cfg["format_version"] = 1;
  if (g.seed)
    cfg["seed"] = *g.seed;
  return cfg;
}

int run_experiment(const std::string &kind, const Globals &g) {
  const json cfg = experiment_config(g);
  char *raw = nullptr;
  check(osp_run_experiment(kind.c_str(), cfg.dump().c_str(), &raw));
  const std::string result = take(raw);
  if (g.format == "csv") {
    char *csv = nullptr;
    check(osp_experiment_csv(kind.c_str(), result.c_str(), &csv));
    write_output(g.out, take(csv));
  } else {
    write_output(g.out, result + "\n");
  }
  const json parsed = json::parse(result);
  return parsed.value("passed", true) ? 0 : 2;
}

void load_filtration(const std::string &path, Filtration &f) {
  const std::string text = read_file(path);
  check(osp_filtration_from_json(text.c_str(), &f.h));
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Orthonormal spline systems on interval filtrations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(osp_version()));

  Globals g;
  auto add_globals = [&g](CLI::App *sub) {
    sub->add_option("--seed", g.seed, "Seed overriding the config");
    sub->add_option("--out", g.out, "Output path (stdout when omitted)");
    sub->add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--config", g.config, "Experiment config (JSON)");
  };

  // gen-filtration
  auto *gen = app.add_subcommand("gen-filtration", "Generate a filtration as JSON");
  std::string gen_kind = "random";
  std::size_t gen_dim = 1, gen_steps = 20, gen_levels = 2, gen_ell = 4, gen_dir = 0;
  int gen_k = 2;
  double gen_theta = 0.25, gen_min_fraction = 0.1;
  gen->add_option("--kind", gen_kind, "random | dyadic | quasi_dyadic | example | single_direction");
  gen->add_option("--dim", gen_dim);
  gen->add_option("--steps", gen_steps);
  gen->add_option("--levels", gen_levels);
  gen->add_option("--theta", gen_theta);
  gen->add_option("--min-fraction", gen_min_fraction);
  gen->add_option("--ell", gen_ell);
  gen->add_option("--k", gen_k);
  gen->add_option("--dir", gen_dir);
  add_globals(gen);

  // build-system
  auto *build = app.add_subcommand("build-system", "Build the orthonormal system of a filtration");
  std::string build_input;
  std::vector<int> build_orders;
  build->add_option("filtration", build_input, "Filtration JSON")->required();
  build->add_option("--orders", build_orders, "Spline order per direction (default 2)");
  add_globals(build);

  // project
  auto *project = app.add_subcommand("project", "Evaluate P_{n,m} of a target on a uniform grid");
  std::string project_system, project_target = "sin";
  std::optional<std::size_t> project_n, project_m;
  std::size_t project_points = 9;
  project->add_option("--system", project_system, "System file")->required();
  project->add_option("--target", project_target, "sin | abs | jump | bump | poly");
  project->add_option("--n", project_n, "Block (default: last)");
  project->add_option("--m", project_m, "Functions of block n (default: all)");
  project->add_option("--points", project_points, "Grid points per direction");
  add_globals(project);

  // regularity-report
  auto *reg = app.add_subcommand("regularity-report", "Regularity parameters of a filtration");
  std::string reg_input;
  std::vector<int> reg_orders;
  std::size_t reg_cap = 12;
  reg->add_option("filtration", reg_input, "Filtration JSON")->required();
  reg->add_option("--orders", reg_orders, "Orders r per direction (default 2)");
  reg->add_option("--cap", reg_cap, "Chain length cap for beta");
  add_globals(reg);

  std::vector<std::pair<CLI::App *, std::string>> experiments;
  for (const char *kind : {"weak-type", "ae-sweep", "cz", "remez"}) {
    auto *sub = app.add_subcommand(kind, std::string("Run the ") + kind + " experiment");
    add_globals(sub);
    experiments.emplace_back(sub, kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    for (const auto &[sub, kind] : experiments)
      if (sub->parsed())
        return run_experiment(kind, g);

    if (gen->parsed()) {
      json spec;
      if (!g.config.empty()) {
        spec = json::parse(read_file(g.config));
      } else {
        spec = {{"kind", gen_kind},   {"dim", gen_dim},     {"steps", gen_steps},
                {"levels", gen_levels}, {"theta", gen_theta}, {"min_fraction", gen_min_fraction},
                {"ell", gen_ell},     {"k", gen_k},         {"dir", gen_dir}};
      }
      if (g.seed)
        spec["seed"] = *g.seed;
      Filtration f;
      check(osp_filtration_generate(spec.dump().c_str(), &f.h));
      char *raw = nullptr;
      check(osp_filtration_to_json(f.h, &raw));
      write_output(g.out, take(raw) + "\n");
      return 0;
    }

    if (build->parsed()) {
      if (g.out.empty())
        throw Failure{1, "build-system: --out is required"};
      Filtration f;
      load_filtration(build_input, f);
      std::size_t dim = 0;
      check(osp_filtration_dim(f.h, &dim));
      const auto orders = orders_or_default(build_orders, dim);
      System s;
      check(osp_system_build(f.h, orders.data(), orders.size(), &s.h));
      check(osp_system_save(s.h, g.out.c_str()));
      return 0;
    }

    if (project->parsed()) {
      System s;
      check(osp_system_load(project_system.c_str(), &s.h));
      std::size_t dim = 0, blocks = 0;
      check(osp_system_dim(s.h, &dim));
      check(osp_system_blocks(s.h, &blocks));
      const std::size_t n = project_n.value_or(blocks - 1);
      if (n >= blocks)
        throw Failure{1, "project: --n out of range"};
      std::size_t m = 0;
      if (project_m) {
        m = *project_m;
      } else {
        std::size_t end = 0, prev = 0;
        check(osp_system_block_end(s.h, n, &end));
        if (n > 0)
          check(osp_system_block_end(s.h, n - 1, &prev));
        m = n == 0 ? end : end - prev;
      }
      if (project_points < 2)
        throw Failure{1, "project: --points must be at least 2"};

      Filtration f;
      check(osp_system_filtration(s.h, &f.h));
      char *fj = nullptr;
      check(osp_filtration_to_json(f.h, &fj));
      const json fjson = json::parse(take(fj));
      const json &domain = fjson.at("intervals");

      std::size_t total = 1;
      for (std::size_t d = 0; d < dim; ++d)
        total *= project_points;
      std::vector<double> pts(total * dim);
      for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i;
        for (std::size_t d = dim; d-- > 0;) {
          const std::size_t q = rest % project_points;
          rest /= project_points;
          const double a = domain.at(d).at(0).get<double>(), b = domain.at(d).at(1).get<double>();
          pts[i * dim + d] = a + (b - a) * static_cast<double>(q) / static_cast<double>(project_points - 1);
        }
      }
      std::vector<double> vals(total);
      check(osp_system_project_target(s.h, n, m, project_target.c_str(), pts.data(), total, vals.data()));

      std::ostringstream os;
      os.precision(17);
      if (g.format == "csv") {
        for (std::size_t d = 0; d < dim; ++d)
          os << 'x' << d << ',';
        os << "projection,target\n";
        for (std::size_t i = 0; i < total; ++i) {
          double t = 0.0;
          check(osp_target_eval(f.h, project_target.c_str(), &pts[i * dim], &t));
          for (std::size_t d = 0; d < dim; ++d)
            os << pts[i * dim + d] << ',';
          os << vals[i] << ',' << t << '\n';
        }
      } else {
        json out = {{"format_version", 1}, {"target", project_target}, {"n", n}, {"m", m}};
        json rows = json::array();
        for (std::size_t i = 0; i < total; ++i) {
          double t = 0.0;
          check(osp_target_eval(f.h, project_target.c_str(), &pts[i * dim], &t));
          rows.push_back({{"x", std::vector<double>(pts.begin() + i * dim, pts.begin() + (i + 1) * dim)},
                          {"projection", vals[i]},
                          {"target", t}});
        }
        out["points"] = std::move(rows);
        os << out.dump(2) << '\n';
      }
      write_output(g.out, os.str());
      return 0;
    }

    if (reg->parsed()) {
      Filtration f;
      load_filtration(reg_input, f);
      std::size_t dim = 0;
      check(osp_filtration_dim(f.h, &dim));
      const auto orders = orders_or_default(reg_orders, dim);
      char *raw = nullptr;
      check(osp_regularity_report(f.h, orders.data(), orders.size(), reg_cap, &raw));
      write_output(g.out, take(raw) + "\n");
      return 0;
    }
  } catch (const Failure &e) {
    std::cerr << "osp: " << e.message << '\n';
    return e.code;
  } catch (const std::exception &e) {
    std::cerr << "osp: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
