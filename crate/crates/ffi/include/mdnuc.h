#ifndef MDNUC_H
#define MDNUC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MDNUC_STATUS_OK = 0,
  MDNUC_STATUS_NULL_ARGUMENT = 1,
  MDNUC_STATUS_INVALID_UTF8 = 2,
  MDNUC_STATUS_CONFIG = 3,
  MDNUC_STATUS_TERRAIN = 4,
  MDNUC_STATUS_PLANNING = 5,
  MDNUC_STATUS_UNREACHABLE_REGION = 6,
  MDNUC_STATUS_SIMULATION = 7,
  MDNUC_STATUS_OUT_OF_RANGE = 8,
  MDNUC_STATUS_PANIC = 9,
} MdnucStatus;

typedef enum {
  MDNUC_PLANNER_BF = 0,
  MDNUC_PLANNER_MDBF = 1,
  MDNUC_PLANNER_NUC = 2,
  MDNUC_PLANNER_MDNUC = 3,
} MdnucPlanner;

/**
 * Run configuration handle.
 */
typedef struct MdnucConfig MdnucConfig;

/**
 * One or more planned coverage paths.
 */
typedef struct MdnucPlan MdnucPlan;

/**
 * Terrain, mesh and partition built from a configuration.
 */
typedef struct MdnucScene MdnucScene;

typedef struct {
  double x;
  double y;
  double theta_deg;
  uint32_t region;
  /**
   * 1 when the opening angle changes at this waypoint.
   */
  uint32_t angle_switch;
} MdnucWaypoint;

typedef struct {
  double coverage_pct;
  double path_length;
  double redundancy;
  uint64_t angle_switch_count;
  uint64_t covered_cells;
  uint64_t mask_cells;
  uint64_t pings;
  uint64_t skipped_pings;
} MdnucReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *mdnuc_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *mdnuc_version(void);

/**
 * Opening angle in degrees for footprint `w` at depth `d`, clamped at `theta_max_deg`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one double.
 */
MdnucStatus mdnuc_opening_angle(double w, double d, double theta_max_deg, double *out);

/**
 * Parses a TOML run configuration.
 *
 * # Safety
 * `toml` must be null or a NUL-terminated string; `out` must be null or
 * writable.
 */
MdnucStatus mdnuc_config_from_toml(const char *toml, MdnucConfig **out);

/**
 * Loads a shipped preset: "shaft", "saddle" or "channel".
 *
 * # Safety
 * As for [`mdnuc_config_from_toml`].
 */
MdnucStatus mdnuc_config_from_preset(const char *name, MdnucConfig **out);

/**
 * Sets the sonar resolution in meters; the footprint follows.
 *
 * # Safety
 * `cfg` must be null or a live configuration handle.
 */
MdnucStatus mdnuc_config_set_resolution(MdnucConfig *cfg, double resolution);

/**
 * Sonar footprint width in meters, or NaN for a null handle.
 *
 * # Safety
 * `cfg` must be null or a live configuration handle.
 */
double mdnuc_config_footprint(const MdnucConfig *cfg);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void mdnuc_config_free(MdnucConfig *cfg);

/**
 * Generates the terrain and builds the mesh and partition.
 *
 * # Safety
 * `cfg` must be null or live; `out` must be null or writable.
 */
MdnucStatus mdnuc_scene_build(const MdnucConfig *cfg, MdnucScene **out);

/**
 * Number of mesh faces, 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or live.
 */
size_t mdnuc_scene_face_count(const MdnucScene *scene);

/**
 * Number of depth regions, 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or live.
 */
size_t mdnuc_scene_region_count(const MdnucScene *scene);

/**
 * Number of gate edges, 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or live.
 */
size_t mdnuc_scene_gate_count(const MdnucScene *scene);

/**
 * # Safety
 * `scene` must be null or a handle not yet freed.
 */
void mdnuc_scene_free(MdnucScene *scene);

/**
 * Plans coverage paths with `planner`. The config must be the one the
 * scene was built from.
 *
 * # Safety
 * `scene` and `cfg` must be null or live; `out` must be null or writable.
 */
MdnucStatus mdnuc_plan(const MdnucScene *scene,
                       const MdnucConfig *cfg,
                       MdnucPlanner planner,
                       MdnucPlan **out);

/**
 * Number of paths in a plan: one per region for MDB&F, otherwise one.
 *
 * # Safety
 * `plan` must be null or live.
 */
size_t mdnuc_plan_path_count(const MdnucPlan *plan);

/**
 * Waypoints of path `index`, 0 when out of range.
 *
 * # Safety
 * `plan` must be null or live.
 */
size_t mdnuc_plan_waypoint_count(const MdnucPlan *plan, size_t index);

/**
 * Total length of all paths in meters.
 *
 * # Safety
 * `plan` must be null or live.
 */
double mdnuc_plan_length(const MdnucPlan *plan);

/**
 * Copies up to `capacity` waypoints of path `index` into `buf` and stores
 * the number copied in `written`.
 *
 * # Safety
 * `buf` must be null or have room for `capacity` waypoints; `written` must
 * be null or writable.
 */
MdnucStatus mdnuc_plan_waypoints(const MdnucPlan *plan,
                                 size_t index,
                                 MdnucWaypoint *buf,
                                 size_t capacity,
                                 size_t *written);

/**
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void mdnuc_plan_free(MdnucPlan *plan);

/**
 * Simulates the survey of `plan` and fills `out` with its metrics.
 *
 * # Safety
 * `scene`, `cfg` and `plan` must be null or live; `out` must be null or
 * writable.
 */
MdnucStatus mdnuc_survey(const MdnucScene *scene,
                         const MdnucConfig *cfg,
                         const MdnucPlan *plan,
                         MdnucReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDNUC_H */
