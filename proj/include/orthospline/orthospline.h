#ifndef ORTHOSPLINE_ORTHOSPLINE_H
#define ORTHOSPLINE_ORTHOSPLINE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(OSP_BUILDING_LIBRARY)
#define OSP_API __attribute__((visibility("default")))
#else
#define OSP_API
#endif

typedef enum osp_status {
  OSP_OK = 0,
  OSP_ERR_INVALID_ARGUMENT = 1,
  OSP_ERR_INVALID_SPLIT = 2,
  OSP_ERR_OUT_OF_DOMAIN = 3,
  OSP_ERR_INDEX = 4,
  OSP_ERR_CONDITIONING = 5,
  OSP_ERR_PIVOT = 6,
  OSP_ERR_SIZE = 7,
  OSP_ERR_DEGENERATE = 8,
  OSP_ERR_IO = 9,
  OSP_ERR_PARSE = 10,
  OSP_ERR_NOT_STANDARD_FORM = 11,
  OSP_ERR_INTERNAL = 12
} osp_status;

typedef struct osp_filtration osp_filtration;
typedef struct osp_system osp_system;

/* Pointwise function for projections: returns f(x) with x of length dim. */
typedef double (*osp_function)(const double *x, size_t dim, void *user);

OSP_API const char *osp_version(void);
/* Message of the last failed call on this thread; empty after success. */
OSP_API const char *osp_last_error(void);
/* Frees strings returned through char** out parameters. */
OSP_API void osp_string_free(char *s);

OSP_API osp_status osp_filtration_from_json(const char *json, osp_filtration **out);
/* Generator spec as JSON: {"kind": "random|dyadic|quasi_dyadic|example|single_direction", ...}. */
OSP_API osp_status osp_filtration_generate(const char *spec_json, osp_filtration **out);
OSP_API osp_status osp_filtration_to_json(const osp_filtration *f, char **out);
OSP_API void osp_filtration_free(osp_filtration *f);
OSP_API osp_status osp_filtration_dim(const osp_filtration *f, size_t *out);
OSP_API osp_status osp_filtration_steps(const osp_filtration *f, size_t *out);
OSP_API osp_status osp_filtration_split(osp_filtration *f, size_t dir, size_t atom, double x);
/* Atom indices (one per direction) of the atom of F_step containing x. */
OSP_API osp_status osp_filtration_atom_of(const osp_filtration *f, size_t step, const double *x,
                                          ptrdiff_t *index_out);

OSP_API osp_status osp_system_build(const osp_filtration *f, const int *orders, size_t n_orders,
                                    osp_system **out);
/* Paths ending in .bin use the binary layout, anything else JSON. */
OSP_API osp_status osp_system_save(const osp_system *s, const char *path);
OSP_API osp_status osp_system_load(const char *path, osp_system **out);
OSP_API void osp_system_free(osp_system *s);
OSP_API osp_status osp_system_size(const osp_system *s, size_t *out);
OSP_API osp_status osp_system_dim(const osp_system *s, size_t *out);
/* Number of blocks N + 1 and the cumulative count after block n. */
OSP_API osp_status osp_system_blocks(const osp_system *s, size_t *out);
OSP_API osp_status osp_system_block_end(const osp_system *s, size_t n, size_t *out);
OSP_API osp_status osp_system_eval(const osp_system *s, size_t l, const double *x, double *out);
OSP_API osp_status osp_system_orthonormality_defect(const osp_system *s, double *out);
/* Copy of the system's filtration. */
OSP_API osp_status osp_system_filtration(const osp_system *s, osp_filtration **out);
/* <f, f_l> for l < count. */
OSP_API osp_status osp_system_expand(const osp_system *s, osp_function f, void *user, double *coeffs,
                                     size_t count);
/* P_{n,m} f evaluated at npoints points (row-major, dim coordinates each). */
OSP_API osp_status osp_system_project(const osp_system *s, size_t n, size_t m, osp_function f, void *user,
                                      const double *points, size_t npoints, double *values);
/* Same for a named target: sin, abs, jump, bump, poly. */
OSP_API osp_status osp_system_project_target(const osp_system *s, size_t n, size_t m, const char *target,
                                             const double *points, size_t npoints, double *values);
OSP_API osp_status osp_target_eval(const osp_filtration *f, const char *target, const double *x, double *out);

OSP_API osp_status osp_regularity_report(const osp_filtration *f, const int *orders, size_t n_orders,
                                         size_t cap, char **json_out);
/* kind: weak-type | ae-sweep | cz | remez; config and result are JSON documents. */
OSP_API osp_status osp_run_experiment(const char *kind, const char *config_json, char **result_json);
OSP_API osp_status osp_experiment_csv(const char *kind, const char *result_json, char **csv_out);

#ifdef __cplusplus
}
#endif

#endif
