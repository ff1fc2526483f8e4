#ifndef PSIVOLTERRA_H
#define PSIVOLTERRA_H

/* C interface to the psivolterra library.
 *
 * Objects are opaque handles created by pv_*_create / pv_solve / pv_certify and
 * released with the matching *_free function. Every fallible call returns a
 * pv_status; on failure pv_last_error() describes it (per thread, valid until
 * the next failing call on that thread). */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(PSIVOLTERRA_BUILDING)
#    define PV_API __declspec(dllexport)
#  else
#    define PV_API __declspec(dllimport)
#  endif
#else
#  define PV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pv_status {
    PV_OK = 0,
    PV_INVALID_ARGUMENT = 1,
    PV_GRID_MISMATCH = 2,
    PV_PARSE = 3,
    PV_EVAL = 4,
    PV_NON_CONTRACTIVE = 5,
    PV_NO_CONVERGENCE = 6,
    PV_WINDOW_VIOLATION = 7,
    PV_CONFIG = 8,
    PV_IO = 9,
    PV_INTERNAL = 10
} pv_status;

typedef enum pv_verdict { PV_PASS = 0, PV_FAIL = 1, PV_VACUOUS = 2 } pv_verdict;

typedef struct pv_problem pv_problem;
typedef struct pv_solution pv_solution;
typedef struct pv_certificate pv_certificate;

PV_API const char* pv_version(void);
PV_API const char* pv_last_error(void);
PV_API const char* pv_status_name(pv_status s);

/* Catalog problem on N intervals; N = 0 picks the entry's default. */
PV_API pv_status pv_problem_from_catalog(const char* name, size_t N, pv_problem** out);
/* Problem from a JSON config document (same schema as the command-line tool). */
PV_API pv_status pv_problem_from_json(const char* json, pv_problem** out);
PV_API void pv_problem_free(pv_problem* p);

PV_API size_t pv_problem_nodes(const pv_problem* p);
PV_API size_t pv_problem_dim(const pv_problem* p);
/* Copies the pv_problem_nodes(p) grid times into t. */
PV_API pv_status pv_problem_times(const pv_problem* p, double* t, size_t len);
PV_API pv_status pv_problem_contraction_factor(const pv_problem* p, double* q);
PV_API pv_status pv_problem_uh_constant(const pv_problem* p, double* C);

/* Fixed-point solve. tol <= 0 and maxit == 0 select the defaults. */
PV_API pv_status pv_solve(const pv_problem* p, double tol, size_t maxit, pv_solution** out);
PV_API void pv_solution_free(pv_solution* s);
PV_API size_t pv_solution_iterations(const pv_solution* s);
PV_API double pv_solution_bound(const pv_solution* s);
/* Row-major (nodes x dim) values; len must be at least nodes * dim. */
PV_API pv_status pv_solution_values(const pv_solution* s, double* x, size_t len);

/* Certifies a candidate given as row-major (nodes x dim) values. */
PV_API pv_status pv_certify(const pv_problem* p, const double* f, size_t len, double tol, pv_certificate** out);
/* Certifies the solution perturbed by epsilon phi. */
PV_API pv_status pv_certify_perturbed(const pv_problem* p, double epsilon, double tol, pv_certificate** out);
PV_API void pv_certificate_free(pv_certificate* c);
PV_API pv_verdict pv_certificate_verdict(const pv_certificate* c);
PV_API double pv_certificate_max_ratio(const pv_certificate* c);
PV_API double pv_certificate_q(const pv_certificate* c);
PV_API double pv_certificate_C(const pv_certificate* c);
PV_API double pv_certificate_slack(const pv_certificate* c);
/* Writes the key = value report, NUL-terminated and truncated to cap bytes.
 * Returns the full length excluding the terminator. */
PV_API size_t pv_certificate_report(const pv_certificate* c, char* buf, size_t cap);

/* Runs one command from a config file, as the command-line tool does.
 * out_dir may be NULL for the current directory. Returns the exit status
 * (0 ok, 1 usage/config, 2 numeric failure, 3 vacuous, 4 fail). */
PV_API int pv_run(const char* command, const char* config_path, const char* out_dir);

PV_API double pv_mittag_leffler(double alpha, double z);

#ifdef __cplusplus
}
#endif

#endif
