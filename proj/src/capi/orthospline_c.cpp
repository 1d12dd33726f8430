#include <orthospline/orthospline.h>

#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/generators.hpp"
#include "core/projection.hpp"
#include "core/regularity.hpp"
#include "core/system_io.hpp"
#include "core/tensor_ortho.hpp"

#include <json.hpp>

#include <cstring>
#include <new>
#include <string>

struct osp_filtration {
  osp::TensorFiltration f;
};

struct osp_system {
  osp::OrthoSystem sys;
};

namespace {

thread_local std::string last_error;

template <class F> osp_status guard(F &&body) {
  try {
    body();
    last_error.clear();
    return OSP_OK;
  } catch (const osp::Error &e) {
    last_error = e.what();
    return static_cast<osp_status>(e.code());
  } catch (const nlohmann::json::exception &e) {
    last_error = e.what();
    return OSP_ERR_PARSE;
  } catch (const std::bad_alloc &) {
    last_error = "out of memory";
    return OSP_ERR_INTERNAL;
  } catch (const std::exception &e) {
    last_error = e.what();
    return OSP_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return OSP_ERR_INTERNAL;
  }
}

void need(const void *p, const char *what) {
  if (!p)
    osp::fail(osp::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

osp::PointIntegrand::Fn wrap(osp_function f, void *user) {
  return [f, user](std::span<const double> x) { return f(x.data(), x.size(), user); };
}

osp_status project_impl(const osp_system *s, size_t n, size_t m, const osp::PointIntegrand::Fn &fn,
                        const double *points, size_t npoints, double *values) {
  return guard([&] {
    need(s, "system");
    need(points, "points");
    need(values, "values");
    const osp::Projector proj(s->sys.filtration(), s->sys.orders());
    const osp::PointIntegrand in(s->sys.dim(), fn);
    const osp::TensorSpline p = osp::project_partial(s->sys, proj, n, m, in);
    const std::size_t d = s->sys.dim();
    for (size_t i = 0; i < npoints; ++i)
      values[i] = p(std::span<const double>(points + i * d, d));
  });
}

} // namespace

extern "C" {

const char *osp_version(void) { return "0.1.0"; }

const char *osp_last_error(void) { return last_error.c_str(); }

void osp_string_free(char *s) { std::free(s); }

osp_status osp_filtration_from_json(const char *json, osp_filtration **out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = new osp_filtration{osp::filtration_from_json(nlohmann::json::parse(json))};
  });
}

osp_status osp_filtration_generate(const char *spec_json, osp_filtration **out) {
  return guard([&] {
    need(spec_json, "spec");
    need(out, "out");
    *out = new osp_filtration{osp::generate(osp::generator_from_json(nlohmann::json::parse(spec_json)))};
  });
}

osp_status osp_filtration_to_json(const osp_filtration *f, char **out) {
  return guard([&] {
    need(f, "filtration");
    need(out, "out");
    *out = dup_string(osp::filtration_to_json(f->f).dump(2));
  });
}

void osp_filtration_free(osp_filtration *f) { delete f; }

osp_status osp_filtration_dim(const osp_filtration *f, size_t *out) {
  return guard([&] {
    need(f, "filtration");
    need(out, "out");
    *out = f->f.dim();
  });
}

osp_status osp_filtration_steps(const osp_filtration *f, size_t *out) {
  return guard([&] {
    need(f, "filtration");
    need(out, "out");
    *out = f->f.steps();
  });
}

osp_status osp_filtration_split(osp_filtration *f, size_t dir, size_t atom, double x) {
  return guard([&] {
    need(f, "filtration");
    osp::require(dir < f->f.dim(), osp::ErrorCode::Index, "split: direction out of range");
    osp::require(atom < f->f.partition(f->f.steps(), dir).atom_count(), osp::ErrorCode::Index,
                 "split: atom out of range");
    f->f.split(dir, atom, x);
  });
}

osp_status osp_filtration_atom_of(const osp_filtration *f, size_t step, const double *x, ptrdiff_t *index_out) {
  return guard([&] {
    need(f, "filtration");
    need(x, "x");
    need(index_out, "index_out");
    osp::require(step <= f->f.steps(), osp::ErrorCode::Index, "atom_of: step out of range");
    const auto a = f->f.atom_of(step, std::span<const double>(x, f->f.dim()));
    for (size_t d = 0; d < a.index.size(); ++d)
      index_out[d] = a.index[d];
  });
}

osp_status osp_system_build(const osp_filtration *f, const int *orders, size_t n_orders, osp_system **out) {
  return guard([&] {
    need(f, "filtration");
    need(orders, "orders");
    need(out, "out");
    *out = new osp_system{osp::build_system(f->f, std::vector<int>(orders, orders + n_orders))};
  });
}

osp_status osp_system_save(const osp_system *s, const char *path) {
  return guard([&] {
    need(s, "system");
    need(path, "path");
    osp::save_system(s->sys, path);
  });
}

osp_status osp_system_load(const char *path, osp_system **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new osp_system{osp::load_system(path)};
  });
}

void osp_system_free(osp_system *s) { delete s; }

osp_status osp_system_size(const osp_system *s, size_t *out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    *out = s->sys.size();
  });
}

osp_status osp_system_dim(const osp_system *s, size_t *out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    *out = s->sys.dim();
  });
}

osp_status osp_system_blocks(const osp_system *s, size_t *out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    *out = s->sys.blocks();
  });
}

osp_status osp_system_block_end(const osp_system *s, size_t n, size_t *out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    osp::require(n < s->sys.blocks(), osp::ErrorCode::Index, "block_end: block out of range");
    *out = s->sys.block_end(n);
  });
}

osp_status osp_system_eval(const osp_system *s, size_t l, const double *x, double *out) {
  return guard([&] {
    need(s, "system");
    need(x, "x");
    need(out, "out");
    osp::require(l < s->sys.size(), osp::ErrorCode::Index, "eval: function index out of range");
    *out = s->sys.eval(l, std::span<const double>(x, s->sys.dim()));
  });
}

osp_status osp_system_orthonormality_defect(const osp_system *s, double *out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    *out = osp::orthonormality_defect(s->sys);
  });
}

osp_status osp_system_filtration(const osp_system *s, osp_filtration **out) {
  return guard([&] {
    need(s, "system");
    need(out, "out");
    *out = new osp_filtration{s->sys.filtration()};
  });
}

osp_status osp_system_expand(const osp_system *s, osp_function f, void *user, double *coeffs, size_t count) {
  return guard([&] {
    need(s, "system");
    need(reinterpret_cast<const void *>(f), "function");
    need(coeffs, "coeffs");
    osp::require(count <= s->sys.size(), osp::ErrorCode::Index, "expand: count exceeds the system size");
    if (count == 0)
      return;
    const auto c = osp::expansion_coefficients(s->sys, wrap(f, user), count);
    std::copy(c.begin(), c.end(), coeffs);
  });
}

osp_status osp_system_project(const osp_system *s, size_t n, size_t m, osp_function f, void *user,
                              const double *points, size_t npoints, double *values) {
  if (!f) {
    last_error = "function is null";
    return OSP_ERR_INVALID_ARGUMENT;
  }
  return project_impl(s, n, m, wrap(f, user), points, npoints, values);
}

osp_status osp_system_project_target(const osp_system *s, size_t n, size_t m, const char *target,
                                     const double *points, size_t npoints, double *values) {
  osp::PointIntegrand::Fn fn;
  const osp_status st = guard([&] {
    need(s, "system");
    need(target, "target");
    fn = osp::target_function(target, s->sys.filtration());
  });
  if (st != OSP_OK)
    return st;
  return project_impl(s, n, m, fn, points, npoints, values);
}

osp_status osp_target_eval(const osp_filtration *f, const char *target, const double *x, double *out) {
  return guard([&] {
    need(f, "filtration");
    need(target, "target");
    need(x, "x");
    need(out, "out");
    *out = osp::target_function(target, f->f)(std::span<const double>(x, f->f.dim()));
  });
}

osp_status osp_regularity_report(const osp_filtration *f, const int *orders, size_t n_orders, size_t cap,
                                 char **json_out) {
  return guard([&] {
    need(f, "filtration");
    need(orders, "orders");
    need(json_out, "json_out");
    const std::vector<int> r(orders, orders + n_orders);
    const auto g = osp::regularity_parameter(f->f, r);
    const auto b = osp::direction_regularity_parameter(f->f, r, cap);
    *json_out = dup_string(osp::regularity_report_json(g, b).dump(2));
  });
}

osp_status osp_run_experiment(const char *kind, const char *config_json, char **result_json) {
  return guard([&] {
    need(kind, "kind");
    need(config_json, "config");
    need(result_json, "result_json");
    const auto cfg = osp::config_from_json(nlohmann::json::parse(config_json));
    *result_json = dup_string(osp::run_experiment(kind, cfg).dump(2));
  });
}

osp_status osp_experiment_csv(const char *kind, const char *result_json, char **csv_out) {
  return guard([&] {
    need(kind, "kind");
    need(result_json, "result");
    need(csv_out, "csv_out");
    *csv_out = dup_string(osp::experiment_csv(kind, nlohmann::json::parse(result_json)));
  });
}

} // extern "C"
