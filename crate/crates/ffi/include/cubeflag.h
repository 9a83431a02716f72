#ifndef CUBEFLAG_H
#define CUBEFLAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CubeflagConstruction {
  CUBEFLAG_CONSTRUCTION_VERTEX_LAYERED = 0,
  CUBEFLAG_CONSTRUCTION_EDGE_LAYERED = 1,
  CUBEFLAG_CONSTRUCTION_TWO_HALVES = 2,
} CubeflagConstruction;

typedef enum CubeflagMode {
  CUBEFLAG_MODE_VERTEX = 0,
  CUBEFLAG_MODE_EDGE = 1,
  CUBEFLAG_MODE_PARTIAL = 2,
} CubeflagMode;

// Status codes returned by every fallible function.
typedef enum CubeflagStatus {
  CUBEFLAG_STATUS_OK = 0,
  CUBEFLAG_STATUS_NULL_POINTER = 1,
  CUBEFLAG_STATUS_INVALID_UTF8 = 2,
  CUBEFLAG_STATUS_PARSE = 3,
  CUBEFLAG_STATUS_SHAPE = 4,
  CUBEFLAG_STATUS_MODE_MISMATCH = 5,
  CUBEFLAG_STATUS_CAPACITY = 6,
  CUBEFLAG_STATUS_CONSTRUCTION = 7,
  CUBEFLAG_STATUS_SOLVER = 8,
  CUBEFLAG_STATUS_STALE = 9,
  CUBEFLAG_STATUS_IO = 10,
  CUBEFLAG_STATUS_PANIC = 11,
} CubeflagStatus;

typedef enum CubeflagVerdict {
  CUBEFLAG_VERDICT_PASS = 0,
  CUBEFLAG_VERDICT_FAIL = 1,
  CUBEFLAG_VERDICT_INVALID = 2,
} CubeflagVerdict;

// A coloured cube.
typedef struct CubeflagCube CubeflagCube;

// A forbidden family.
typedef struct CubeflagFamily CubeflagFamily;

// An assembled density problem.
typedef struct CubeflagProblem CubeflagProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *cubeflag_last_error(void);

// Library version as a static string.
const char *cubeflag_version(void);

// # Safety
// `s` must be null or a string returned by this library.
void cubeflag_string_free(char *s);

// Parses a cube in text form, e.g. `vertex 3 BBBBBBBR`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum CubeflagStatus cubeflag_cube_parse(const char *text, struct CubeflagCube **out);

// # Safety
// `cube` must be null or a handle from this library, not yet freed.
void cubeflag_cube_free(struct CubeflagCube *cube);

// Text form of a cube; release with `cubeflag_string_free`.
//
// # Safety
// `cube` must be a live handle; `out` must be writable.
enum CubeflagStatus cubeflag_cube_to_string(const struct CubeflagCube *cube, char **out);

// Exact blue density as `p/q`; release with `cubeflag_string_free`.
//
// # Safety
// `cube` must be a live handle; `out` must be writable.
enum CubeflagStatus cubeflag_cube_density(const struct CubeflagCube *cube, char **out);

// Parses a family: one cube per line, `#` comments allowed.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum CubeflagStatus cubeflag_family_parse(const char *text, struct CubeflagFamily **out);

// A built-in family: `B`, `B1B2`, `B3`, `B3-`, `B4B5` or `empty`.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum CubeflagStatus cubeflag_family_named(const char *name, struct CubeflagFamily **out);

// # Safety
// `fam` must be null or a handle from this library, not yet freed.
void cubeflag_family_free(struct CubeflagFamily *fam);

// Whether `cube` contains no member of `fam` as a subcube.
//
// # Safety
// Handles must be live; `out` must be writable.
enum CubeflagStatus cubeflag_is_free(const struct CubeflagCube *cube,
                                     const struct CubeflagFamily *fam,
                                     bool *out);

// Number of `fam`-free cubes of dimension `dim` up to isomorphism.
//
// # Safety
// `fam` must be live; `out` must be writable.
enum CubeflagStatus cubeflag_enumerate_count(enum CubeflagMode mode,
                                             uintptr_t dim,
                                             const struct CubeflagFamily *fam,
                                             uint64_t *out);

// Builds one of the layered or two-halves constructions. `period` and
// `residue` apply to the layered kinds; `residue`, `residue2` and `split`
// to two-halves.
//
// # Safety
// `out` must be writable.
enum CubeflagStatus cubeflag_construct(enum CubeflagConstruction kind,
                                       uintptr_t n,
                                       uint32_t period,
                                       uint32_t residue,
                                       uint32_t residue2,
                                       uintptr_t split,
                                       struct CubeflagCube **out);

// Assembles a problem with the default bases, optionally with the swap
// constraint rows (partial mode only).
//
// # Safety
// `fam` must be live; `out` must be writable.
enum CubeflagStatus cubeflag_problem_assemble(enum CubeflagMode mode,
                                              uintptr_t l,
                                              const struct CubeflagFamily *fam,
                                              bool with_constraints,
                                              struct CubeflagProblem **out);

// # Safety
// `problem` must be null or a handle from this library, not yet freed.
void cubeflag_problem_free(struct CubeflagProblem *problem);

// Number of host classes of a problem.
//
// # Safety
// `problem` must be live; `out` must be writable.
enum CubeflagStatus cubeflag_problem_host_count(const struct CubeflagProblem *problem,
                                                uintptr_t *out);

// Problem file text; release with `cubeflag_string_free`.
//
// # Safety
// `problem` must be live; `out` must be writable.
enum CubeflagStatus cubeflag_problem_to_string(const struct CubeflagProblem *problem, char **out);

// Verifies a certificate against a problem file and a target bound, all
// given as text. On `Ok`, `verdict` holds the outcome and `bound` (if not
// null) receives the recomputed bound as `p/q`, or null when none was
// computed; release it with `cubeflag_string_free`.
//
// # Safety
// Strings must be NUL-terminated; `verdict` must be writable; `bound` may
// be null.
enum CubeflagStatus cubeflag_verify(const char *problem_text,
                                    const char *cert_text,
                                    const char *target,
                                    enum CubeflagVerdict *verdict,
                                    char **bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUBEFLAG_H */
