#ifndef FAIRLIFT_H
#define FAIRLIFT_H

/* Generated by cbindgen from crates/fairlift-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by fallible functions.
typedef enum FlStatus {
  // Success.
  FL_OK = 0,
  // A pointer argument was NULL or a string was not valid UTF-8.
  FL_INVALID_ARGUMENT = 1,
  // A toolkit module reported an error (see fl_last_error()).
  FL_MODULE_ERROR = 2,
} FlStatus;

// An RDF graph (set of triples).
typedef struct FlGraph FlGraph;

// An indexed triple store supporting conjunctive queries.
typedef struct FlStore FlStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message recorded on this thread. The pointer stays valid
// until the next fairlift call on the same thread; do not free it.
const char *fl_last_error(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be a pointer previously returned by a fairlift function
// that documents [`fl_string_free`] ownership, or NULL.
void fl_string_free(char *s);

// Parse an N-Triples document into a new graph handle.
//
// On success writes the handle to `out` and returns FL_OK.
//
// # Safety
// `text` must be a valid NUL-terminated string; `out` must be a valid
// pointer to a graph-handle slot.
int fl_graph_parse_ntriples(const char *text, struct FlGraph **out);

// Serialize a graph to canonical N-Triples (sorted, trailing newline).
// Returns a string owned by the caller (fl_string_free), or NULL if
// `graph` is NULL.
//
// # Safety
// `graph` must be NULL or a live graph handle.
char *fl_graph_serialize_ntriples(const struct FlGraph *graph);

// Number of triples in the graph (0 for NULL).
//
// # Safety
// `graph` must be NULL or a live graph handle.
size_t fl_graph_len(const struct FlGraph *graph);

// Release a graph handle.
//
// # Safety
// `graph` must be NULL or a live graph handle; it must not be used
// afterwards.
void fl_graph_free(struct FlGraph *graph);

// Build an indexed triple store from a graph (the graph handle stays
// owned by the caller and remains valid).
//
// # Safety
// `graph` must be a live graph handle.
struct FlStore *fl_store_from_graph(const struct FlGraph *graph);

// Evaluate a query (PREFIX/SELECT/WHERE text) against the store.
// Returns the result table as TSV (header row of variables, then one
// row per binding), owned by the caller; NULL on error (see
// fl_last_error()).
//
// # Safety
// `store` must be a live store handle; `query` a valid NUL-terminated
// string.
char *fl_store_query(const struct FlStore *store, const char *query);

// Release a store handle.
//
// # Safety
// `store` must be NULL or a live store handle; it must not be used
// afterwards.
void fl_store_free(struct FlStore *store);

// Run the full pipeline. `config_json` is an object with string keys
// "in", "schema", "map", "out" (paths, required) and optional
// "run_id", "granularity" (run|step|record), "batch_size",
// "fixed_clock" (ISO-8601). Returns the run report as JSON (owned by
// the caller) or NULL on error.
//
// # Safety
// `config_json` must be a valid NUL-terminated string.
char *fl_run_pipeline(const char *config_json);

// Assess FAIR maturity. `bundle_json` is an object with optional
// string keys "data", "prov", "metadata", "map", "questions" (paths)
// and "service_url"; at least one bundle element must be present.
// Returns the maturity report as JSON (owned by the caller) or NULL
// on error.
//
// # Safety
// `bundle_json` must be a valid NUL-terminated string.
char *fl_assess(const char *bundle_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRLIFT_H */
