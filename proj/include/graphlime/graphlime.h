#ifndef GRAPHLIME_H
#define GRAPHLIME_H

/* C interface to the graphlime library.
 *
 * Every fallible call returns a glime_status. On failure the message for the
 * calling thread is available from glime_last_error() until the next call.
 * Strings returned through char** parameters are owned by the caller and must
 * be released with glime_string_free(). Configuration is passed as JSON text;
 * NULL or "" means all defaults. */

#include <stddef.h>
#include <stdint.h>

#if defined(GLIME_BUILDING)
#define GLIME_API __attribute__((visibility("default")))
#else
#define GLIME_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glime_status {
    GLIME_OK = 0,
    GLIME_INVALID_ARGUMENT = 1,
    GLIME_PARSE = 2,
    GLIME_BOUNDS = 3,
    GLIME_CONSISTENCY = 4,
    GLIME_INSUFFICIENT_NEIGHBORS = 5,
    GLIME_DEGENERATE = 6,
    GLIME_FORMAT = 7,
    GLIME_TRAINING = 8,
    GLIME_GATE_UNMET = 9,
    GLIME_IO = 10,
    GLIME_CONTRACT = 11,
    GLIME_INTERNAL = 99
} glime_status;

typedef struct glime_graph glime_graph;
typedef struct glime_model glime_model;

typedef struct glime_graph_info {
    size_t node_count;
    size_t feature_count;
    size_t edge_count;    /* undirected edges after deduplication */
    size_t edge_records;  /* edge lines read from the source file */
    size_t class_count;   /* 0 when unlabeled */
    int has_labels;
} glime_graph_info;

GLIME_API const char* glime_version(void);
GLIME_API const char* glime_last_error(void);
GLIME_API const char* glime_status_name(glime_status status);
GLIME_API void glime_string_free(char* s);

/* Returns `config_json` with every default filled in. kind: train | explainer |
 * synthetic | experiment. */
GLIME_API glime_status glime_config_resolve(const char* kind, const char* config_json, char** resolved_json);

/* --- graphs --- */

/* labels_path may be NULL for an unlabeled graph. */
GLIME_API glime_status glime_graph_load(const char* edges_path, const char* features_path, const char* labels_path,
                                        glime_graph** out);
/* Citation-network format: "<id> <features...> <class>" rows plus "<cited> <citing>" pairs. */
GLIME_API glime_status glime_graph_load_citation(const char* content_path, const char* cites_path, glime_graph** out);
GLIME_API glime_status glime_graph_generate_synthetic(const char* params_json, uint64_t seed, glime_graph** out);
/* Appends `count` noise columns. noisy_indices (may be NULL) receives `count` column indices. */
GLIME_API glime_status glime_graph_inject_noise(const glime_graph* graph, size_t count, uint64_t seed,
                                                glime_graph** out, size_t* noisy_indices);
GLIME_API glime_status glime_graph_save(const glime_graph* graph, const char* edges_path, const char* features_path,
                                        const char* labels_path);
GLIME_API glime_status glime_graph_info_get(const glime_graph* graph, glime_graph_info* info);
GLIME_API void glime_graph_free(glime_graph* graph);

/* --- models --- */

/* config_json: {hidden_width, epochs, learning_rate, weight_decay, train_fraction}. */
GLIME_API glime_status glime_model_train(const glime_graph* graph, const char* config_json, uint64_t seed,
                                         glime_model** out);
/* graph may be NULL; otherwise the model's input width is checked against it. */
GLIME_API glime_status glime_model_load(const char* path, const glime_graph* graph, glime_model** out);
GLIME_API glime_status glime_model_save(const glime_model* model, const char* path);
/* {train_acc, test_acc, epochs, seed, final_loss} */
GLIME_API glime_status glime_model_metrics_json(const glime_model* model, char** json);
/* Writes class probabilities for one node; capacity must be at least the class count. */
GLIME_API glime_status glime_model_predict(const glime_model* model, const glime_graph* graph, size_t node,
                                           double* probabilities, size_t capacity, size_t* class_count);
GLIME_API void glime_model_free(glime_model* model);

/* --- explanations --- */

/* method: graphlime | lime_linear | greedy | random. config_json holds explainer settings. */
GLIME_API glime_status glime_explain(const glime_model* model, const glime_graph* graph, size_t node,
                                     const char* method, const char* config_json, char** json);

/* Explains config.nodes (default: every node with a neighbor) and runs submodular
 * pick with config.budget. Result: {picked, picked_rows, instance_ids, importance,
 * W, budget_exceeded, skipped}. */
GLIME_API glime_status glime_pick(const glime_model* model, const glime_graph* graph, const char* method,
                                  const char* config_json, char** json);

/* Greedy coverage pick on a row-major rows x cols matrix. picked must hold
 * min(budget, rows) entries. */
GLIME_API glime_status glime_submodular_pick(const double* w, size_t rows, size_t cols, size_t budget,
                                             size_t* picked, size_t* picked_count, int* budget_exceeded);

/* --- experiments --- */

/* experiment: noise | trust | model-select. Trains its own classifiers from the
 * config's "train" and "setup" blocks. Either output pointer may be NULL. */
GLIME_API glime_status glime_run_experiment(const glime_graph* graph, const char* experiment, const char* config_json,
                                            char** report_json, char** report_csv);

#ifdef __cplusplus
}
#endif

#endif
