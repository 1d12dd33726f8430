#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <orthospline/orthospline.h>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

extern "C" int osp_c_header_probe(void);

namespace {

std::string take(char *s) {
  std::string out = s ? s : "";
  osp_string_free(s);
  return out;
}

double xy(const double *x, size_t, void *) { return x[0] * x[1]; }

double scaled(const double *x, size_t, void *user) { return *static_cast<double *>(user) * (1.0 + x[0]); }

struct Handles {
  osp_filtration *f = nullptr;
  osp_system *s = nullptr;
  ~Handles() {
    osp_system_free(s);
    osp_filtration_free(f);
  }
};

} // namespace

TEST_CASE("header compiles as C") { CHECK(osp_c_header_probe() == 0); }

TEST_CASE("filtrations through the C API") {
  Handles h;
  REQUIRE(osp_filtration_generate(R"({"kind": "random", "dim": 2, "steps": 12, "seed": 5})", &h.f) == OSP_OK);
  CHECK(std::string(osp_last_error()).empty());
  size_t dim = 0, steps = 0;
  CHECK(osp_filtration_dim(h.f, &dim) == OSP_OK);
  CHECK(osp_filtration_steps(h.f, &steps) == OSP_OK);
  CHECK(dim == 2);
  CHECK(steps == 12);

  char *text = nullptr;
  REQUIRE(osp_filtration_to_json(h.f, &text) == OSP_OK);
  const std::string json = take(text);
  osp_filtration *copy = nullptr;
  REQUIRE(osp_filtration_from_json(json.c_str(), &copy) == OSP_OK);
  size_t steps2 = 0;
  osp_filtration_steps(copy, &steps2);
  CHECK(steps2 == steps);
  char *again = nullptr;
  osp_filtration_to_json(copy, &again);
  CHECK(take(again) == json);
  osp_filtration_free(copy);

  const double x[2] = {0.3, 0.9};
  ptrdiff_t idx[2] = {-1, -1};
  CHECK(osp_filtration_atom_of(h.f, 0, x, idx) == OSP_OK);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 0);
  const double outside[2] = {1.5, 0.5};
  CHECK(osp_filtration_atom_of(h.f, 0, outside, idx) == OSP_ERR_OUT_OF_DOMAIN);
  CHECK_FALSE(std::string(osp_last_error()).empty());
  CHECK(osp_filtration_atom_of(h.f, 99, x, idx) == OSP_ERR_INDEX);
}

TEST_CASE("error codes") {
  osp_filtration *f = nullptr;
  CHECK(osp_filtration_from_json("{not json", &f) == OSP_ERR_PARSE);
  CHECK(f == nullptr);
  CHECK(osp_filtration_from_json(nullptr, &f) == OSP_ERR_INVALID_ARGUMENT);
  CHECK(osp_filtration_generate(R"({"kind": "spiral"})", &f) != OSP_OK);
  REQUIRE(osp_filtration_generate(R"({"kind": "dyadic", "dim": 1, "levels": 1})", &f) == OSP_OK);
  CHECK(osp_filtration_split(f, 0, 7, 0.1) == OSP_ERR_INDEX);
  CHECK(osp_filtration_split(f, 0, 0, 0.9) == OSP_ERR_INVALID_SPLIT);
  CHECK(osp_filtration_split(f, 0, 0, 0.25) == OSP_OK);
  const int bad_orders[1] = {0};
  osp_system *s = nullptr;
  CHECK(osp_system_build(f, bad_orders, 1, &s) == OSP_ERR_INVALID_ARGUMENT);
  const int two[2] = {2, 2};
  CHECK(osp_system_build(f, two, 2, &s) == OSP_ERR_INVALID_ARGUMENT);
  CHECK(osp_system_load("/nonexistent/osp/system.json", &s) == OSP_ERR_IO);
  size_t n = 0;
  CHECK(osp_system_size(nullptr, &n) == OSP_ERR_INVALID_ARGUMENT);
  osp_filtration_free(f);
  // Freeing null handles is a no-op.
  osp_filtration_free(nullptr);
  osp_system_free(nullptr);
  osp_string_free(nullptr);
}

TEST_CASE("systems, expansion and projection") {
  Handles h;
  REQUIRE(osp_filtration_generate(R"({"kind": "random", "dim": 2, "steps": 10, "seed": 8})", &h.f) == OSP_OK);
  const int orders[2] = {2, 2};
  REQUIRE(osp_system_build(h.f, orders, 2, &h.s) == OSP_OK);
  size_t size = 0, blocks = 0, end0 = 0;
  osp_system_size(h.s, &size);
  osp_system_blocks(h.s, &blocks);
  osp_system_block_end(h.s, 0, &end0);
  CHECK(blocks == 11);
  CHECK(end0 == 4);
  size_t last = 0;
  osp_system_block_end(h.s, blocks - 1, &last);
  CHECK(last == size);
  CHECK(osp_system_block_end(h.s, blocks, &last) == OSP_ERR_INDEX);
  double defect = 1.0;
  CHECK(osp_system_orthonormality_defect(h.s, &defect) == OSP_OK);
  CHECK(defect <= 1e-8);

  // x*y lies in the bilinear block 0; the rest of the expansion vanishes.
  std::vector<double> c(size);
  REQUIRE(osp_system_expand(h.s, xy, nullptr, c.data(), size) == OSP_OK);
  for (size_t l = end0; l < size; ++l)
    CHECK(std::abs(c[l]) <= 1e-10);

  const std::vector<double> pts{0.1, 0.2, 0.5, 0.5, 0.93, 0.07};
  std::vector<double> vals(3);
  REQUIRE(osp_system_project(h.s, 10, 0, xy, nullptr, pts.data(), 3, vals.data()) == OSP_OK);
  for (size_t i = 0; i < 3; ++i)
    CHECK(std::abs(vals[i] - pts[2 * i] * pts[2 * i + 1]) <= 1e-10);
  double factor = 3.0;
  REQUIRE(osp_system_project(h.s, 4, 2, scaled, &factor, pts.data(), 3, vals.data()) == OSP_OK);
  for (size_t i = 0; i < 3; ++i)
    CHECK(std::abs(vals[i] - 3.0 * (1.0 + pts[2 * i])) <= 1e-10);
  CHECK(osp_system_project(h.s, 4, 1000, xy, nullptr, pts.data(), 3, vals.data()) == OSP_ERR_INDEX);
  CHECK(osp_system_project_target(h.s, 10, 0, "sin", pts.data(), 3, vals.data()) == OSP_OK);
  CHECK(osp_system_project_target(h.s, 10, 0, "nope", pts.data(), 3, vals.data()) != OSP_OK);

  double v = 0.0, t = 0.0;
  CHECK(osp_target_eval(h.f, "poly", pts.data(), &t) == OSP_OK);
  CHECK(osp_system_eval(h.s, 0, pts.data(), &v) == OSP_OK);
  CHECK(osp_system_eval(h.s, size, pts.data(), &v) == OSP_ERR_INDEX);

  const std::string path = (std::filesystem::temp_directory_path() / "osp_capi_system.bin").string();
  REQUIRE(osp_system_save(h.s, path.c_str()) == OSP_OK);
  osp_system *back = nullptr;
  REQUIRE(osp_system_load(path.c_str(), &back) == OSP_OK);
  std::filesystem::remove(path);
  size_t size2 = 0;
  osp_system_size(back, &size2);
  CHECK(size2 == size);
  double w = 0.0;
  for (size_t l = 0; l < size; l += 5) {
    osp_system_eval(h.s, l, pts.data() + 2, &v);
    osp_system_eval(back, l, pts.data() + 2, &w);
    CHECK(v == w);
  }
  osp_filtration *copy = nullptr;
  CHECK(osp_system_filtration(back, &copy) == OSP_OK);
  size_t steps = 0;
  osp_filtration_steps(copy, &steps);
  CHECK(steps == 10);
  osp_filtration_free(copy);
  osp_system_free(back);
}

TEST_CASE("reports and experiments") {
  Handles h;
  REQUIRE(osp_filtration_generate(R"({"kind": "dyadic", "dim": 2, "levels": 2})", &h.f) == OSP_OK);
  const int orders[2] = {1, 1};
  char *out = nullptr;
  REQUIRE(osp_regularity_report(h.f, orders, 2, 12, &out) == OSP_OK);
  const auto rep = nlohmann::json::parse(take(out));
  CHECK(rep["gamma_max"].get<double>() == doctest::Approx(2.0));
  CHECK(rep.contains("beta"));

  const char *cfg = R"({"format_version": 1, "seed": 3, "remez": {"degree": 2, "dim": 2, "trials": 50, "samples": 500}})";
  REQUIRE(osp_run_experiment("remez", cfg, &out) == OSP_OK);
  const std::string result = take(out);
  CHECK(nlohmann::json::parse(result)["passed"] == true);
  REQUIRE(osp_experiment_csv("remez", result.c_str(), &out) == OSP_OK);
  CHECK_FALSE(take(out).empty());
  CHECK(osp_run_experiment("remez", R"({"format_version": 7})", &out) == OSP_ERR_PARSE);
  CHECK(osp_run_experiment("dance", cfg, &out) != OSP_OK);
  CHECK(std::string(osp_version()) == "0.1.0");
}
