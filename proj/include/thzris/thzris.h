#ifndef THZRIS_H
#define THZRIS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(THZRIS_BUILDING_LIBRARY)
#define THZRIS_API __declspec(dllexport)
#else
#define THZRIS_API __declspec(dllimport)
#endif
#else
#define THZRIS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum thzris_status
{
    THZRIS_OK = 0,
    THZRIS_E_INVALID_ARGUMENT = 1, /* bad key, value, flag or null pointer */
    THZRIS_E_INVALID_STATE = 2,    /* e.g. zero system power */
    THZRIS_E_IO = 3,               /* file could not be read or written */
    THZRIS_E_INTERNAL = 4
} thzris_status;

/* Opaque scenario configuration. */
typedef struct thzris_config thzris_config;

/* Message of the last failing call on this thread, "" if none. */
THZRIS_API const char *thzris_last_error(void);
THZRIS_API const char *thzris_version(void);

/* profile: "desk" or "paper"; NULL means "desk". */
THZRIS_API thzris_status thzris_config_create(const char *profile, thzris_config **out);
THZRIS_API void thzris_config_destroy(thzris_config *config);
THZRIS_API thzris_status thzris_config_clone(const thzris_config *config, thzris_config **out);
/* Applies a key = value file on top of the current values. */
THZRIS_API thzris_status thzris_config_load_file(thzris_config *config, const char *path);
/* One key; the config is left unchanged if the result would be invalid. */
THZRIS_API thzris_status thzris_config_set(thzris_config *config, const char *key, const char *value);
/* Copies the config text (NUL terminated) into buf if it fits; *needed gets
   the required size including the terminator. buf may be NULL. */
THZRIS_API thzris_status thzris_config_dump(const thzris_config *config, char *buf, size_t capacity, size_t *needed);

typedef struct thzris_result
{
    double axis_value;
    uint64_t seed;
    double se;           /* bit/s/Hz */
    double ee;           /* bit/s/Hz/W */
    double objective;
    double p_sys;        /* W */
    double max_residual; /* relative */
    int outer_iters;
    double wall_ms;
    int feasible;
    const char *method; /* static string */
    const char *error;  /* NULL unless the trial failed; valid during the callback only */
} thzris_result;

/* One trial. method: ARIS, PRIS or RND_ARIS. Either path may be NULL; the
   row CSV gets a header and one line, the trace CSV one line per outer
   iteration. */
THZRIS_API thzris_status thzris_run(const thzris_config *config, const char *method, uint64_t seed,
                                    const char *row_csv_path, const char *trace_csv_path, thzris_result *out);

typedef void (*thzris_row_callback)(const thzris_result *row, void *user);

/* Sweep over one axis (P_A_max, kappa, dac_bits, M, Q, K, d_U). methods is
   a comma separated list. Rows reach the callback and the CSV in order.
   threads = 0 uses every core. */
THZRIS_API thzris_status thzris_sweep(const thzris_config *config, const char *axis, const double *values,
                                      size_t value_count, const char *methods, int trials, uint64_t base_seed,
                                      int threads, const char *csv_path, thzris_row_callback callback, void *user);

typedef void (*thzris_check_callback)(const char *name, int passed, double metric, const char *detail, void *user);

/* Runs the invariant suite. *all_passed may be NULL. */
THZRIS_API thzris_status thzris_validate(const thzris_config *config, uint64_t seed, const char *csv_path,
                                         thzris_check_callback callback, void *user, int *all_passed);

#ifdef __cplusplus
}
#endif

#endif
