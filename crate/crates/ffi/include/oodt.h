#ifndef OODT_H
#define OODT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  OODT_BID_STRATEGY_PAPER_LITERAL = 0,
  OODT_BID_STRATEGY_DERIVED = 1,
} OodtBidStrategy;

typedef enum {
  OODT_STATUS_OK = 0,
  OODT_STATUS_NULL_POINTER = 1,
  OODT_STATUS_INVALID_ARGUMENT = 2,
  OODT_STATUS_INVALID_POLYGON = 3,
  OODT_STATUS_NOT_SEARCHABLE = 4,
  OODT_STATUS_INVALID_SCENARIO = 5,
  OODT_STATUS_IO = 6,
  OODT_STATUS_PANIC = 7,
} OodtStatus;

typedef struct OodtObstacleMap OodtObstacleMap;

typedef struct OodtPolygon OodtPolygon;

typedef struct OodtScenario OodtScenario;

typedef struct OodtSchedule OodtSchedule;

/**
 * Metrics of one run. Absent averages are NaN.
 */
typedef struct {
  double pdr;
  double avg_delay;
  double routing_cost;
  double lifetime;
  uint64_t friend_pairs;
  uint64_t generated;
  uint64_t delivered;
  uint64_t dropped;
  uint64_t violations;
} OodtMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t oodt_last_error(char *buf, size_t len);

/**
 * Builds a polygon from `n` interleaved `x, y` pairs.
 *
 * # Safety
 * `xy` must point to `2 * n` doubles; `out` must be writable.
 */
OodtStatus oodt_polygon_new(const double *xy, size_t n, OodtPolygon **out);

/**
 * # Safety
 * `p` must be null or come from [`oodt_polygon_new`] and not be freed yet.
 */
void oodt_polygon_free(OodtPolygon *p);

/**
 * # Safety
 * `p` must be a live polygon handle; `out` must be writable.
 */
OodtStatus oodt_polygon_searchable(const OodtPolygon *p, bool *out);

/**
 * Brute-force verdict on a `resolution`-sample boundary grid.
 *
 * # Safety
 * `p` must be a live polygon handle; `out` must be writable.
 */
OodtStatus oodt_polygon_oracle(const OodtPolygon *p, size_t resolution, bool *out);

/**
 * # Safety
 * `p` must be a live polygon handle; `out` must be writable.
 */
OodtStatus oodt_polygon_search(const OodtPolygon *p, OodtSchedule **out);

/**
 * # Safety
 * `s` must be null or a schedule handle not freed yet.
 */
void oodt_schedule_free(OodtSchedule *s);

/**
 * Instruction count and searcher travel of a schedule.
 *
 * # Safety
 * `s` must be a live schedule handle; the out pointers must be writable.
 */
OodtStatus oodt_schedule_stats(const OodtSchedule *s, size_t *m, double *searcher_distance);

/**
 * Replays the schedule against the polygon.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
OodtStatus oodt_schedule_verify(const OodtPolygon *p, const OodtSchedule *s, bool *out);

/**
 * Parses an obstacle file body.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
OodtStatus oodt_obstacles_parse(const char *text, OodtObstacleMap **out);

/**
 * # Safety
 * `m` must be null or a map handle not freed yet.
 */
void oodt_obstacles_free(OodtObstacleMap *m);

/**
 * # Safety
 * `m` must be a live map handle; `out` must be writable.
 */
OodtStatus oodt_los_clear(const OodtObstacleMap *m,
                          double ax,
                          double ay,
                          double bx,
                          double by,
                          bool *out);

/**
 * Routing metric of one neighbor.
 *
 * # Safety
 * `out` must be writable.
 */
OodtStatus oodt_routing_metric(double phi1,
                               double phi2,
                               double phi3,
                               double etx,
                               double e_ic,
                               double st,
                               double *out);

/**
 * Equilibrium bid for normalized cost `v` among `n` bidders.
 *
 * # Safety
 * `out` must be writable.
 */
OodtStatus oodt_equilibrium_bid(double v, size_t n, OodtBidStrategy strategy, double *out);

/**
 * Default scenario.
 *
 * # Safety
 * `out` must be writable.
 */
OodtStatus oodt_scenario_new(OodtScenario **out);

/**
 * Scenario from `key = value` text; relative paths resolve against the
 * working directory.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
OodtStatus oodt_scenario_parse(const char *text, OodtScenario **out);

/**
 * Sets one scenario key. The scenario is left unchanged if the result
 * would be invalid.
 *
 * # Safety
 * `s` must be a live scenario handle; `key` and `value` NUL-terminated.
 */
OodtStatus oodt_scenario_set(OodtScenario *s, const char *key, const char *value);

/**
 * # Safety
 * `s` must be null or a scenario handle not freed yet.
 */
void oodt_scenario_free(OodtScenario *s);

/**
 * Runs the scenario to completion.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
OodtStatus oodt_run(const OodtScenario *s, OodtMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OODT_H */
