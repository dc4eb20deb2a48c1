/* C interface of the mgl library. All functions return an mgl_status; on
 * failure mgl_last_error() describes the problem (thread-local, valid until
 * the next call on the same thread). Strings returned through char** are
 * owned by the caller and released with mgl_free_string. */
#ifndef MGL_H
#define MGL_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(MGL_BUILDING_LIBRARY)
#define MGL_API __declspec(dllexport)
#else
#define MGL_API __declspec(dllimport)
#endif
#else
#define MGL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgl_status {
  MGL_OK = 0,
  MGL_ERR_SHAPE = 1,
  MGL_ERR_STRUCTURE = 2,
  MGL_ERR_PARAMETER = 3,
  MGL_ERR_DOMAIN = 4,
  MGL_ERR_DEGENERATE = 5,
  MGL_ERR_RESOLUTION = 6,
  MGL_ERR_CAPACITY = 7,
  MGL_ERR_FIT = 8,
  MGL_ERR_SCOPE = 9,
  MGL_ERR_PARSE = 10,
  MGL_ERR_IO = 11,
  MGL_ERR_INTERNAL = 99
} mgl_status;

typedef struct mgl_network mgl_network;

MGL_API const char* mgl_version(void);
MGL_API const char* mgl_last_error(void);
MGL_API const char* mgl_status_name(int status);
MGL_API void mgl_free_string(char* s);

/* Experiments. config_json is a JSON object whose keys are the CLI flag
 * names; *out_json receives the report document. */
MGL_API int mgl_run_build_approx(const char* config_json, char** out_json);
MGL_API int mgl_run_transport_check(const char* config_json, char** out_json);
MGL_API int mgl_run_rate_sweep(const char* config_json, char** out_json);
MGL_API int mgl_run_end_to_end(const char* config_json, char** out_json);
MGL_API int mgl_run_starshape_audit(const char* config_json, char** out_json);

/* Networks. spec_json selects a builder, e.g.
 * {"builder": "times", "A": 1, "eps": 0.1} or
 * {"builder": "indicator", "a": 0.25, "b": 0.75, "eps": 0.1, "M": 2}.
 * Builders: times(A, eps), times_d(d, M, eps), indicator(a, b, eps, M),
 * cube_indicator(lower[], upper[], eps, M), identity(dim, depth). */
MGL_API int mgl_network_build(const char* spec_json, mgl_network** out);
MGL_API int mgl_network_parse(const char* serialized, mgl_network** out);
MGL_API int mgl_network_serialize(const mgl_network* net, char** out);
MGL_API int mgl_network_dims(const mgl_network* net, size_t* input_dim, size_t* output_dim);
MGL_API int mgl_network_metrics(const mgl_network* net, size_t* depth, size_t* width, double* weight_bound);
/* x: n_points rows of input_dim values (row-major); y: n_points * output_dim. */
MGL_API int mgl_network_evaluate(const mgl_network* net, const double* x, size_t n_points, double* y);
MGL_API void mgl_network_free(mgl_network* net);

/* Exact W1 between two row-major point clouds in R^dim (sizes n and m). */
MGL_API int mgl_w1_exact(const double* a, size_t n, const double* b, size_t m, size_t dim, double* out);

#ifdef __cplusplus
}
#endif

#endif
