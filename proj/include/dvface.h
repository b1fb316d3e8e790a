/* C interface to the dvface restoration pipeline.
 *
 * Usage: create a context, point it at a config file (or rely on the built-in
 * desk-scale defaults), optionally override seed / output dir / prior mode /
 * timestep, then invoke pipeline steps. All functions return 0 on success and
 * a nonzero error code on failure; dvf_last_error() describes the most recent
 * failure on that context.
 */
#ifndef DVFACE_H
#define DVFACE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct dvf_ctx dvf_ctx;

enum {
    DVF_OK = 0,
    DVF_ERR_CONFIG = 1,
    DVF_ERR_IO = 2,
    DVF_ERR_SHAPE = 3,
    DVF_ERR_RUNTIME = 4,
    DVF_ERR_CHECK_FAILED = 5,
    DVF_ERR_BAD_ARG = 6
};

dvf_ctx* dvf_create(void);
void dvf_destroy(dvf_ctx* ctx);

/* Message for the last failed call on this context; empty string if none. */
const char* dvf_last_error(const dvf_ctx* ctx);

int dvf_load_config(dvf_ctx* ctx, const char* path);
int dvf_set_seed(dvf_ctx* ctx, uint64_t seed);
int dvf_set_out_dir(dvf_ctx* ctx, const char* dir);
/* "none" | "spatial" | "temporal" | "both" */
int dvf_set_priors(dvf_ctx* ctx, const char* mode);
int dvf_set_tstar(dvf_ctx* ctx, double tstar);
/* Evaluation refuses checkpoints whose recorded config hash differs from the
 * active config unless this is enabled. */
int dvf_set_allow_hash_mismatch(dvf_ctx* ctx, int enabled);

/* Writes train/ and test/ dataset directories under the output dir. */
int dvf_gen_data(dvf_ctx* ctx);

/* Each stage reads its prerequisites from the output dir and writes
 * <stage>.ckpt plus loss curves there. */
int dvf_train_stage0(dvf_ctx* ctx);
int dvf_train_stage1(dvf_ctx* ctx);
int dvf_train_stage1p(dvf_ctx* ctx);
int dvf_train_stage2(dvf_ctx* ctx);

/* in: a clip array file or a dataset directory; out: file or directory to
 * receive the restored clip(s). Uses <out_dir>/stage2.ckpt. */
int dvf_restore(dvf_ctx* ctx, const char* in_path, const char* out_path);

/* Restores the test split and writes metric reports to the output dir. */
int dvf_eval(dvf_ctx* ctx);

/* suite: "algebra" | "gradients" | "oracles" | "freeze" | "all".
 * Returns DVF_ERR_CHECK_FAILED when any check fails. */
int dvf_check(dvf_ctx* ctx, const char* suite);

#ifdef __cplusplus
}
#endif

#endif /* DVFACE_H */
