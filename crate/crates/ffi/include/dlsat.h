#ifndef DLSAT_H
#define DLSAT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DlsatStatus {
  DLSAT_STATUS_OK = 0,
  DLSAT_STATUS_NULL_POINTER = 1,
  DLSAT_STATUS_INVALID_ARGUMENT = 2,
  // The CSV could not be read or binarized.
  DLSAT_STATUS_DATA = 3,
  // Identical feature rows carry different classes.
  DLSAT_STATUS_INCONSISTENT = 4,
  // No perfect list within the node cap.
  DLSAT_STATUS_NODE_LIMIT = 5,
  DLSAT_STATUS_TIMEOUT = 6,
  DLSAT_STATUS_SOLVER = 7,
  // Malformed model JSON or a model that does not fit the input.
  DLSAT_STATUS_MODEL = 8,
  // The list has no default rule and nothing fired.
  DLSAT_STATUS_NO_RULE_FIRED = 9,
  DLSAT_STATUS_PANIC = 10,
} DlsatStatus;

// Binarized training data.
typedef struct DlsatDataset DlsatDataset;

// A learned decision list.
typedef struct DlsatModel DlsatModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL.
//
// The pointer stays valid until the next library call on the same thread.
const char *dlsat_last_error(void);

// Reads and binarizes a CSV file.
//
// `class_column` may be NULL (last column), a header name, a zero-based
// index or `"last"`. `intervals` > 0 quantizes numeric columns into that
// many equal-width bins first.
//
// # Safety
// `path` and a non-NULL `class_column` must be NUL-terminated strings and
// `out` must be writable.
enum DlsatStatus dlsat_dataset_load_csv(const char *path,
                                        const char *class_column,
                                        size_t intervals,
                                        struct DlsatDataset **out);

// Like [`dlsat_dataset_load_csv`] but parses CSV text held in memory.
//
// # Safety
// Same contract as [`dlsat_dataset_load_csv`], with `text` in place of `path`.
enum DlsatStatus dlsat_dataset_parse_csv(const char *text,
                                         const char *class_column,
                                         size_t intervals,
                                         struct DlsatDataset **out);

// Number of instances; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t dlsat_dataset_rows(const struct DlsatDataset *ds);

// Number of binary features; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t dlsat_dataset_features(const struct DlsatDataset *ds);

// Number of classes; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t dlsat_dataset_classes(const struct DlsatDataset *ds);

// # Safety
// `ds` must be NULL or a handle not yet freed.
void dlsat_dataset_free(struct DlsatDataset *ds);

// Learns a minimum-size perfect decision list with the builtin solver.
//
// `max_nodes` caps the node search; 0 keeps the default cap.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
enum DlsatStatus dlsat_train_perfect(const struct DlsatDataset *ds,
                                     size_t max_nodes,
                                     struct DlsatModel **out);

// Learns a list minimizing misclassifications plus `lambda * M` per node.
//
// `lambda` must lie in (0, 1]. `nodes` fixes the node bound; 0 derives it.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
enum DlsatStatus dlsat_train_sparse(const struct DlsatDataset *ds,
                                    double lambda,
                                    size_t nodes,
                                    struct DlsatModel **out);

// Classifies one binary feature vector (`0` false, anything else true).
//
// # Safety
// `features` must point to `len` readable bytes and `class_out` be writable.
enum DlsatStatus dlsat_model_predict(const struct DlsatModel *model,
                                     const uint8_t *features,
                                     size_t len,
                                     size_t *class_out);

// Fraction of `ds` the model classifies correctly.
//
// # Safety
// `model` and `ds` must be live handles and `accuracy_out` writable.
enum DlsatStatus dlsat_model_accuracy(const struct DlsatModel *model,
                                      const struct DlsatDataset *ds,
                                      double *accuracy_out);

// Total literal count; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live model handle.
size_t dlsat_model_size(const struct DlsatModel *model);

// Number of rules; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live model handle.
size_t dlsat_model_rule_count(const struct DlsatModel *model);

// Serializes the model; free the result with [`dlsat_string_free`].
//
// # Safety
// `model` must be a live handle and `out` writable.
enum DlsatStatus dlsat_model_to_json(const struct DlsatModel *model, char **out);

// Human readable "if ... then ..." rendering of the model.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum DlsatStatus dlsat_model_to_text(const struct DlsatModel *model, char **out);

// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum DlsatStatus dlsat_model_from_json(const char *json, struct DlsatModel **out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void dlsat_model_free(struct DlsatModel *model);

// Writes the WCNF formula for `nodes` nodes as DIMACS text.
//
// `lambda` <= 0 selects the perfect encoding, otherwise the sparse one.
//
// # Safety
// `ds` must be a live dataset handle and `out` writable.
enum DlsatStatus dlsat_encode_wcnf(const struct DlsatDataset *ds,
                                   size_t nodes,
                                   double lambda,
                                   char **out);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void dlsat_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLSAT_H */
