#ifndef ZIGZAG_H
#define ZIGZAG_H

/*
 * C interface to the zzsim collision-recovery network simulator.
 *
 * The library is a C++ core exposed through this header as a plain C API:
 * opaque handles, status codes, and string getters whose storage is owned
 * by the handle they were read from. All functions are thread-safe as long
 * as a given handle is not used from two threads at once.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ZZ_API __declspec(dllexport)
#else
#define ZZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum zz_status {
  ZZ_OK = 0,
  /* not an error: the requested expectation has no finite value */
  ZZ_DIVERGES = 1,
  ZZ_ERR_INVALID_ARGUMENT = 2,
  ZZ_ERR_DIVISION_BY_ZERO = 3,
  ZZ_ERR_FIELD_MISMATCH = 4,
  ZZ_ERR_EMPTY_QUEUE = 5,
  ZZ_ERR_OFFSET_TOO_LARGE = 6,
  ZZ_ERR_INCONSISTENT_SYSTEM = 7,
  ZZ_ERR_INVALID_PROBABILITY = 8,
  ZZ_ERR_NOT_FOUND = 9,
  ZZ_ERR_INVALID_RATE = 10,
  ZZ_ERR_NOT_ACHIEVABLE = 11,
  ZZ_ERR_INVALID_CONFIG = 12,
  ZZ_ERR_HORIZON_EXCEEDED = 13,
  ZZ_ERR_IO = 14,
  ZZ_ERR_INTERNAL = 15
} zz_status;

typedef struct zz_config zz_config; /* opaque experiment configuration */
typedef struct zz_result zz_result; /* opaque experiment output */

ZZ_API const char *zz_version(void);

/* Detail message for the most recent failure on this thread. */
ZZ_API const char *zz_last_error(void);

ZZ_API zz_status zz_config_parse(const char *json_text, zz_config **out);
ZZ_API zz_status zz_config_load_file(const char *path, zz_config **out);
ZZ_API zz_status zz_config_from_preset(const char *name, zz_config **out);
/* key_eq_value uses dotted paths, e.g. "transmission.q=0.5" */
ZZ_API zz_status zz_config_override(zz_config *cfg, const char *key_eq_value);
ZZ_API zz_status zz_config_validate(const zz_config *cfg);
/* Resolved configuration (defaults filled in), owned by the handle. */
ZZ_API zz_status zz_config_json(const zz_config *cfg, const char **out_text);
ZZ_API const char *zz_config_output_path(const zz_config *cfg);
ZZ_API void zz_config_free(zz_config *cfg);

ZZ_API size_t zz_preset_count(void);
ZZ_API const char *zz_preset_name(size_t index);
ZZ_API const char *zz_preset_summary(const char *name);

ZZ_API zz_status zz_run(const zz_config *cfg, zz_result **out);
ZZ_API const char *zz_result_csv(const zz_result *res);
ZZ_API const char *zz_result_manifest(const zz_result *res);
ZZ_API void zz_result_free(zz_result *res);

/*
 * Closed-form expected delivery times. A ZZ_DIVERGES return stores +inf
 * in *out. cap <= 0 means an unlimited collision-recovery cap.
 */
ZZ_API zz_status zz_et_centralized(uint32_t n, double p, double *out);
ZZ_API zz_status zz_et_random_access(uint32_t n, double p, double q, double *out);
ZZ_API zz_status zz_et_zigzag(uint32_t n, double p, double *out);
ZZ_API zz_status zz_et_zigzag_ra(uint32_t n, double p, double q, int32_t cap, double *out);
ZZ_API zz_status zz_optimal_q(uint32_t n, double p, int32_t cap, double *out);

#ifdef __cplusplus
}
#endif

#endif /* ZIGZAG_H */
