/* bevkit — cross-modal BEV pretraining sandbox, C API.
 *
 * All functions return a bevkit_status; on failure a human-readable
 * message is available from bevkit_last_error() until the next call on
 * the same thread. Handles are opaque and must be released with their
 * matching _free function.
 */
#ifndef BEVKIT_H
#define BEVKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bevkit_status {
    BEVKIT_OK = 0,
    BEVKIT_E_CHECK = 1,    /* a verification property failed */
    BEVKIT_E_USAGE = 2,    /* bad arguments, config, or artifact mix-up */
    BEVKIT_E_IO = 3,       /* filesystem or serialization failure */
    BEVKIT_E_INTERNAL = 4
} bevkit_status;

typedef struct bevkit_config bevkit_config;
typedef struct bevkit_tensor bevkit_tensor;

/* Thread-local message for the most recent failure on this thread. */
const char* bevkit_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* Built-in defaults, optionally overridden ("train.lr_finetune=5e-4"). */
bevkit_status bevkit_config_default(const char* const* overrides, size_t n_overrides,
                                    bevkit_config** out);
/* JSON config file merged over the defaults; unknown keys are rejected. */
bevkit_status bevkit_config_load(const char* path, const char* const* overrides,
                                 size_t n_overrides, bevkit_config** out);
bevkit_status bevkit_config_dump(const bevkit_config* cfg, char** json_out);
/* 16 hex chars + NUL. */
bevkit_status bevkit_config_hash(const bevkit_config* cfg, char out_hex[17]);
void bevkit_config_free(bevkit_config* cfg);
void bevkit_string_free(char* text);

/* ---- dense f32 tensor files ------------------------------------------- */

bevkit_status bevkit_tensor_create(const uint64_t* dims, size_t rank, const float* data,
                                   bevkit_tensor** out);
bevkit_status bevkit_tensor_read(const char* path, bevkit_tensor** out);
bevkit_status bevkit_tensor_write(const bevkit_tensor* tensor, const char* path);
size_t bevkit_tensor_rank(const bevkit_tensor* tensor);
uint64_t bevkit_tensor_dim(const bevkit_tensor* tensor, size_t axis);
uint64_t bevkit_tensor_size(const bevkit_tensor* tensor);
const float* bevkit_tensor_data(const bevkit_tensor* tensor);
void bevkit_tensor_free(bevkit_tensor* tensor);

/* ---- pipeline stages --------------------------------------------------- */

bevkit_status bevkit_synth(const bevkit_config* cfg, const char* out_dir, int overwrite);

bevkit_status bevkit_stats(const bevkit_config* cfg, const char* data_dir,
                           const char* out_path);

/* Dataset mode: writes one mask per scene under <data_dir>/masks. */
bevkit_status bevkit_maskgen(const bevkit_config* cfg, const char* data_dir,
                             const char* stats_path);
/* Single-file mode. stats_path may be NULL when the raw response is used. */
bevkit_status bevkit_maskgen_file(const bevkit_config* cfg, const char* cloud_path,
                                  const char* teacher_path, const char* stats_path,
                                  const char* out_path);

bevkit_status bevkit_pretrain(const bevkit_config* cfg, const char* data_dir,
                              const char* stats_path, const char* out_dir, int overwrite);

/* init_checkpoint NULL -> scratch init; teacher_head_dir required when
 * inherit is nonzero. */
bevkit_status bevkit_finetune(const bevkit_config* cfg, const char* data_dir,
                              const char* init_checkpoint, const char* teacher_head_dir,
                              int inherit, const char* out_dir, int overwrite);

bevkit_status bevkit_eval(const bevkit_config* cfg, const char* data_dir,
                          const char* checkpoint_dir, const char* split,
                          const char* out_path);

/* Returns BEVKIT_E_CHECK when any gradient deviates beyond tolerance.
 * report_path may be NULL. */
bevkit_status bevkit_gradcheck(const bevkit_config* cfg, const char* report_path);

/* preset: "components", "data-scale" or "head-inherit". */
bevkit_status bevkit_ablate(const bevkit_config* cfg, const char* preset,
                            const char* out_dir, int overwrite);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BEVKIT_H */
