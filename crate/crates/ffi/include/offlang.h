/* C API for the offlang multilingual abusive-text classification pipeline. */

#ifndef OFFLANG_H
#define OFFLANG_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes; nonzero values match the CLI exit codes.
typedef enum OfflangStatus {
  OFFLANG_STATUS_OK = 0,
  // Bad invocation or unusable configuration.
  OFFLANG_STATUS_USAGE = 1,
  // Malformed or inconsistent input data.
  OFFLANG_STATUS_DATA = 2,
  // Embedding backend failure.
  OFFLANG_STATUS_PROVIDER = 3,
  // Filesystem or artifact-format failure.
  OFFLANG_STATUS_IO = 4,
  // Null pointer or non-UTF-8 argument.
  OFFLANG_STATUS_INVALID_ARGUMENT = 5,
  // Internal panic; state may be inconsistent.
  OFFLANG_STATUS_INTERNAL = 6,
} OfflangStatus;

// An opened pipeline (config parsed, providers built, cache attached).
typedef struct OfflangPipeline OfflangPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *offlang_version(void);

// Message of the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *offlang_last_error(void);

// Release a string returned by this library.
//
// # Safety
// `ptr` must be null or a pointer previously returned through an
// out-parameter of this library, released at most once.
void offlang_string_free(char *ptr);

// Open a pipeline from a TOML config file.
//
// # Safety
// `config_path` must be a valid NUL-terminated string and `out` a valid
// pointer.
enum OfflangStatus offlang_pipeline_new(const char *config_path, struct OfflangPipeline **out);

// Release a pipeline handle.
//
// # Safety
// `pipeline` must be null or a pointer from [`offlang_pipeline_new`],
// released at most once.
void offlang_pipeline_free(struct OfflangPipeline *pipeline);

// Normalize one text: URL removal, language-gated lowercasing, digit
// normalization, whitespace collapse. `language` is `"en"`, `"de"` or
// `"hi"`.
//
// # Safety
// `text` and `language` must be valid NUL-terminated strings; `out` must
// be a valid pointer.
enum OfflangStatus offlang_normalize(const char *text, const char *language, char **out);

// Train the cascade from the pipeline's configured training data and save
// it to the configured model path.
//
// # Safety
// `pipeline` must be a live handle from [`offlang_pipeline_new`].
enum OfflangStatus offlang_train(const struct OfflangPipeline *pipeline);

// Predict a TSV of posts into the submission format.
//
// # Safety
// `pipeline` must be a live handle; `input_path` and `output_path` must be
// valid NUL-terminated strings.
enum OfflangStatus offlang_predict(const struct OfflangPipeline *pipeline,
                                   const char *input_path,
                                   const char *output_path);

// Score a prediction file against a gold file. `report_dir` may be null;
// when given, JSON and text reports are written there. When `out_text` is
// non-null it receives the rendered text tables.
//
// # Safety
// `pipeline` must be a live handle; paths must be valid NUL-terminated
// strings (`report_dir` may be null); `out_text` may be null.
enum OfflangStatus offlang_evaluate(const struct OfflangPipeline *pipeline,
                                    const char *gold_path,
                                    const char *pred_path,
                                    const char *report_dir,
                                    char **out_text);

// Render dataset statistics for the configured data files.
//
// # Safety
// `pipeline` must be a live handle; `out_text` must be a valid pointer.
enum OfflangStatus offlang_stats(const struct OfflangPipeline *pipeline, char **out_text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OFFLANG_H */
