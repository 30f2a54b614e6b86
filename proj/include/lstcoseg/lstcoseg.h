/*
 * C interface to the lstcoseg co-segmentation engine.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return LSTCOSEG_OK on success or an error code; the message of
 * the most recent failure on the calling thread is available from
 * lstcoseg_last_error().
 *
 * Pixel buffers are tightly packed, row-major. Color images are interleaved
 * 8-bit RGB; masks and saliency maps are 8-bit single channel.
 */
#ifndef LSTCOSEG_H
#define LSTCOSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LSTCOSEG_BUILDING)
#    define LSTCOSEG_API __declspec(dllexport)
#  else
#    define LSTCOSEG_API __declspec(dllimport)
#  endif
#else
#  define LSTCOSEG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lstcoseg_status {
    LSTCOSEG_OK = 0,
    LSTCOSEG_ERR_ARGUMENT = 1,     /* null handle, bad parameter value, buffer too small */
    LSTCOSEG_ERR_DATA = 2,         /* input data violates a contract (sizes, ranges) */
    LSTCOSEG_ERR_INTERNAL = 3,
    LSTCOSEG_ERR_STATE = 4         /* call not valid for the object's current state */
} lstcoseg_status;

typedef struct lstcoseg_config lstcoseg_config;
typedef struct lstcoseg_session lstcoseg_session;
typedef struct lstcoseg_result lstcoseg_result;

typedef struct lstcoseg_eval_record {
    double acc;
    double iou;
    uint64_t tp;
    uint64_t fp;
    uint64_t fn;
    uint64_t tn;
} lstcoseg_eval_record;

LSTCOSEG_API const char* lstcoseg_version(void);
LSTCOSEG_API const char* lstcoseg_last_error(void);

/* configuration; a fresh config holds the defaults */
LSTCOSEG_API lstcoseg_status lstcoseg_config_create(lstcoseg_config** out);
LSTCOSEG_API void lstcoseg_config_destroy(lstcoseg_config* config);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_alpha(lstcoseg_config* config, double alpha);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_lambda(lstcoseg_config* config, double lambda);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_scales(lstcoseg_config* config, const int* scales, size_t count);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_gmm_components(lstcoseg_config* config, int components);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_outer_iterations(lstcoseg_config* config, int iterations);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_diffusion_tol(lstcoseg_config* config, double tol);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_diffusion_max_sweeps(lstcoseg_config* config, int sweeps);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_joint_color_models(lstcoseg_config* config, int enabled);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_transfer_enabled(lstcoseg_config* config, int enabled);
/* 0 = builtin saliency, 1 = external maps supplied per image */
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_external_saliency(lstcoseg_config* config, int enabled);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_saliency_cut(lstcoseg_config* config, int enabled);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_saliency_passes(lstcoseg_config* config, int passes);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_saliency_factor(lstcoseg_config* config, double factor);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_pairwise_gamma(lstcoseg_config* config, double gamma);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_gmm_max_samples(lstcoseg_config* config, int samples);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_seed(lstcoseg_config* config, uint64_t seed);
LSTCOSEG_API lstcoseg_status lstcoseg_config_set_threads(lstcoseg_config* config, int threads);
/* Checks all values together; individual setters only reject malformed arguments. */
LSTCOSEG_API lstcoseg_status lstcoseg_config_validate(const lstcoseg_config* config);

/* sessions collect the images of one set */
LSTCOSEG_API lstcoseg_status lstcoseg_session_create(const lstcoseg_config* config, lstcoseg_session** out);
LSTCOSEG_API void lstcoseg_session_destroy(lstcoseg_session* session);
LSTCOSEG_API lstcoseg_status lstcoseg_session_add_image(lstcoseg_session* session, const char* id, int width, int height,
                                                        const uint8_t* rgb);
/* External saliency for the image at `index`, same size as the image. */
LSTCOSEG_API lstcoseg_status lstcoseg_session_set_saliency(lstcoseg_session* session, size_t index, const uint8_t* gray);
LSTCOSEG_API lstcoseg_status lstcoseg_session_image_count(const lstcoseg_session* session, size_t* count);
LSTCOSEG_API lstcoseg_status lstcoseg_session_run(lstcoseg_session* session, lstcoseg_result** out);

/* results */
LSTCOSEG_API void lstcoseg_result_destroy(lstcoseg_result* result);
LSTCOSEG_API lstcoseg_status lstcoseg_result_image_count(const lstcoseg_result* result, size_t* count);
LSTCOSEG_API lstcoseg_status lstcoseg_result_image_size(const lstcoseg_result* result, size_t index, int* width,
                                                        int* height);
/* Final mask as 0/255 bytes; `capacity` must be at least width * height. */
LSTCOSEG_API lstcoseg_status lstcoseg_result_mask(const lstcoseg_result* result, size_t index, uint8_t* out,
                                                  size_t capacity);
LSTCOSEG_API lstcoseg_status lstcoseg_result_initial_mask(const lstcoseg_result* result, size_t index, uint8_t* out,
                                                          size_t capacity);
/* Final per-pixel soft labels scaled to 0..255. */
LSTCOSEG_API lstcoseg_status lstcoseg_result_soft_mask(const lstcoseg_result* result, size_t index, uint8_t* out,
                                                       size_t capacity);
/*
 * JSON report: config echo, energy traces, diffusion sweeps, timings and
 * warnings. Writes at most `capacity` bytes including the terminator and
 * stores the full length (without terminator) in `length`. Passing a null
 * buffer queries the length.
 */
LSTCOSEG_API lstcoseg_status lstcoseg_result_report_json(const lstcoseg_result* result, char* buffer, size_t capacity,
                                                         size_t* length);

/* standalone operations */
LSTCOSEG_API lstcoseg_status lstcoseg_saliency_map(int width, int height, const uint8_t* rgb, int passes, uint8_t* out);
/* Nonzero bytes are foreground. */
LSTCOSEG_API lstcoseg_status lstcoseg_score(int width, int height, const uint8_t* pred, const uint8_t* gt,
                                            lstcoseg_eval_record* out);
LSTCOSEG_API lstcoseg_status lstcoseg_aggregate(const lstcoseg_eval_record* records, size_t count, double* mean_acc,
                                                double* mean_iou);

#ifdef __cplusplus
}
#endif

#endif /* LSTCOSEG_H */
