#ifndef TIERGATE_H
#define TIERGATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TgCapability {
  TG_CAPABILITY_UNPROVEN = 0,
  TG_CAPABILITY_EMERGING = 1,
  TG_CAPABILITY_ESTABLISHED = 2,
  TG_CAPABILITY_MATURE = 3,
} TgCapability;

/**
 * Ordinal level for structuredness, verifiability and consequence.
 */
typedef enum TgLevel {
  TG_LEVEL_LOW = 0,
  TG_LEVEL_MED = 1,
  TG_LEVEL_HIGH = 2,
} TgLevel;

/**
 * Result codes.
 */
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_ARGUMENT = 1,
  TG_STATUS_INVALID_UTF8 = 2,
  TG_STATUS_INVALID_JSON = 3,
  TG_STATUS_NOT_FOUND = 4,
  TG_STATUS_CONFLICT = 5,
  TG_STATUS_FORBIDDEN = 6,
  TG_STATUS_INVALID = 7,
  TG_STATUS_IO = 8,
  TG_STATUS_UNKNOWN_OPERATION = 9,
  TG_STATUS_PANIC = 10,
} TgStatus;

typedef enum TgTier {
  TG_TIER_AI_RESTRICTED = 0,
  TG_TIER_TIER1_PILOT = 1,
  TG_TIER_TIER1 = 2,
  TG_TIER_TIER2 = 3,
  TG_TIER_TIER3 = 4,
  TG_TIER_TIER4 = 5,
} TgTier;

/**
 * Opaque engine handle.
 */
typedef struct TgEngine TgEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *tg_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer returned through an `out` parameter of this
 * library that has not been freed.
 */
void tg_string_free(char *s);

/**
 * Classify an assessment with the decision matrix.
 *
 * # Safety
 * `out_tier` must be a valid pointer.
 */
enum TgStatus tg_classify(enum TgLevel structuredness,
                          enum TgLevel verifiability,
                          enum TgLevel consequence,
                          enum TgCapability capability_rating,
                          enum TgTier *out_tier);

/**
 * Probability an erroneous output escapes both sampling and integration.
 * All inputs must be probabilities in [0, 1].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TgStatus tg_analytic_escape_rate(double error_rate,
                                      double sampling_rate,
                                      double detection,
                                      double integration_catch,
                                      double *out);

/**
 * Open the registry named by a config file as its single writer.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TgStatus tg_engine_open(const char *config_path, struct TgEngine **out);

/**
 * An engine over an in-memory registry. `config_toml` may be NULL for the
 * default configuration.
 *
 * # Safety
 * `config_toml` must be NULL or NUL-terminated; `out` a valid pointer.
 */
enum TgStatus tg_engine_new_in_memory(const char *config_toml, struct TgEngine **out);

/**
 * Release an engine and its registry lock.
 *
 * # Safety
 * `engine` must be NULL or a handle from this library that has not been freed.
 */
void tg_engine_free(struct TgEngine *engine);

/**
 * Id of the last appended event.
 *
 * # Safety
 * `engine` must be a live handle; `out` a valid pointer.
 */
enum TgStatus tg_engine_last_event_id(struct TgEngine *engine, uint64_t *out);

/**
 * Run one engine operation with a JSON request and receive a JSON reply.
 *
 * Write operations need `actor`; `timestamp` (RFC 3339) may be NULL for
 * the current time. `target` names the task type for `demote`, `promote`
 * and `promotion_check`, and may be NULL otherwise.
 *
 * | op | request | reply |
 * |---|---|---|
 * | `register_task_type` | RegisterTaskType | event |
 * | `classify_item` | ClassifyItem | event |
 * | `record_outcome` | ValidationOutcome | events |
 * | `demote` | DemoteRequest | event |
 * | `promote` | PromoteRequest | event |
 * | `promotion_check` | `{"capacity_ok": bool}` or NULL | reports |
 * | `close_cycle` | NULL | events and retro report |
 * | `plan` | SprintPlan | plan report |
 * | `lint` | SprintPlan or NULL | findings |
 * | `erosion` | NULL | erosion status |
 * | `snapshot` | NULL | registry snapshot |
 *
 * # Safety
 * `engine` must be a live handle; string arguments NULL or NUL-terminated;
 * `out_json` a valid pointer.
 */
enum TgStatus tg_engine_call(struct TgEngine *engine,
                             const char *op,
                             const char *actor,
                             const char *timestamp,
                             const char *target,
                             const char *request_json,
                             char **out_json);

/**
 * Run a simulation from a JSON config; the reply is the full result.
 *
 * # Safety
 * `config_json` must be NUL-terminated; `out_json` a valid pointer.
 */
enum TgStatus tg_simulate(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIERGATE_H */
