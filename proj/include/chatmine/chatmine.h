#ifndef CHATMINE_CHATMINE_H
#define CHATMINE_CHATMINE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CM_API __declspec(dllexport)
#elif defined(__GNUC__)
#define CM_API __attribute__((visibility("default")))
#else
#define CM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cm_status {
    CM_OK = 0,
    CM_ERR_ARGUMENT = 1, /* null or malformed argument */
    CM_ERR_IO = 2,       /* missing or unreadable file */
    CM_ERR_DATA = 3,     /* malformed records, degenerate datasets */
    CM_ERR_CONFIG = 4,   /* bad settings, checkpoint or encoder mismatch */
    CM_ERR_CONTRACT = 5, /* internal invariant breach */
    CM_ERR_INTERNAL = 6,
    CM_ERR_GRADCHECK = 7 /* a gradient check ran and failed */
} cm_status;

typedef struct cm_config cm_config;
typedef struct cm_model cm_model;

CM_API const char* cm_version(void);
CM_API const char* cm_status_string(cm_status status);
/* Message of the last failed call on this thread; never null. */
CM_API const char* cm_last_error(void);
/* Releases strings returned through char** out-parameters. */
CM_API void cm_free(void* p);

/* Settings: key=value layering over built-in defaults. */
CM_API cm_status cm_config_create(cm_config** out);
CM_API void cm_config_destroy(cm_config* cfg);
CM_API cm_status cm_config_load_file(cm_config* cfg, const char* path);
CM_API cm_status cm_config_set(cm_config* cfg, const char* key, const char* value);
/* *value is null when the key is unset. */
CM_API cm_status cm_config_get(const cm_config* cfg, const char* key, char** value);

/* Pipeline stages. `community` may be null: the input file stem is used.
   Optional outputs (skip_report, counts, report strings) may be null. */
CM_API cm_status cm_preprocess_file(const cm_config* cfg, const char* input, const char* community,
                                    const char* output, const char* skip_report, size_t* n_utterances);
CM_API cm_status cm_disentangle_file(const cm_config* cfg, const char* input, const char* community,
                                     const char* output, size_t* n_dialogs);
/* target: "issue", "solution" or "link". */
CM_API cm_status cm_train_file(const cm_config* cfg, const char* labeled, const char* target, const char* output,
                               char** report_json);
/* jobs == 0 uses the configured value. */
CM_API cm_status cm_extract_file(const cm_config* cfg, const char* input, const char* community,
                                 const char* issue_ckpt, const char* solution_ckpt, const char* output,
                                 size_t jobs, size_t* n_pairs);
CM_API cm_status cm_eval_file(const cm_config* cfg, const char* labeled, const char* issue_ckpt,
                              const char* solution_ckpt, const char* output, char** report_json);
CM_API cm_status cm_eval_cross_project_file(const cm_config* cfg, const char* labeled, const char* output,
                                            char** report_json);

/* Runs every shipped fragment for every seed. Returns CM_ERR_GRADCHECK when
   any check fails; the report is filled either way. */
CM_API cm_status cm_gradcheck(double tolerance, const uint64_t* seeds, size_t n_seeds, char** report_json);

/* Pair-model checkpoints. */
CM_API cm_status cm_model_load(const char* path, cm_model** out);
CM_API cm_status cm_model_info(const cm_model* model, char** info_json);
CM_API void cm_model_destroy(cm_model* model);

#ifdef __cplusplus
}
#endif

#endif
