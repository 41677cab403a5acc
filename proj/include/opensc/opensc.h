/* C interface to the opensc library. Strings returned through char** out
 * parameters are owned by the caller and released with opensc_string_free. */
#ifndef OPENSC_OPENSC_H
#define OPENSC_OPENSC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(OPENSC_BUILDING)
#    define OPENSC_API __declspec(dllexport)
#  else
#    define OPENSC_API __declspec(dllimport)
#  endif
#else
#  define OPENSC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum opensc_status {
  OPENSC_OK = 0,
  OPENSC_ERR_VALIDATION = 1,
  OPENSC_ERR_RUNTIME = 2,
  OPENSC_ERR_EXTERNAL = 3,
  OPENSC_ERR_PARSE = 4,
  OPENSC_ERR_IO = 5,
  OPENSC_ERR_NULL_ARGUMENT = 6
} opensc_status;

typedef struct opensc_vocab opensc_vocab;
typedef struct opensc_graph opensc_graph;
typedef struct opensc_session opensc_session;

/* Message of the last failure on the calling thread; empty after success. */
OPENSC_API const char* opensc_last_error(void);
OPENSC_API const char* opensc_status_name(opensc_status status);
OPENSC_API const char* opensc_version(void);
OPENSC_API void opensc_string_free(char* s);

/* Vocabulary and tokenizer */
OPENSC_API opensc_status opensc_vocab_load(const char* path, opensc_vocab** out);
OPENSC_API void opensc_vocab_free(opensc_vocab* vocab);
OPENSC_API size_t opensc_vocab_size(const opensc_vocab* vocab);
/* *ids is released with opensc_ids_free. */
OPENSC_API opensc_status opensc_tokenize(const opensc_vocab* vocab, const char* text, uint32_t** ids,
                                         size_t* count);
OPENSC_API void opensc_ids_free(uint32_t* ids);
OPENSC_API opensc_status opensc_detokenize(const opensc_vocab* vocab, const uint32_t* ids, size_t count,
                                           char** text);

/* Scene graphs */
OPENSC_API opensc_status opensc_graph_parse(const char* json, opensc_graph** out);
OPENSC_API opensc_status opensc_graph_load(const char* path, opensc_graph** out);
OPENSC_API void opensc_graph_free(opensc_graph* graph);
OPENSC_API opensc_status opensc_graph_serialize(const opensc_graph* graph, char** text);
OPENSC_API opensc_status opensc_graph_summary(const opensc_graph* graph, char** json);

/* Physical layer */
typedef struct opensc_link_stats {
  uint64_t bits;
  uint64_t bit_errors;
  uint64_t symbols;
  uint64_t symbol_errors;
} opensc_link_stats;

/* scheme: "BPSK", "4QAM", "16QAM"; channel: "AWGN", "Rayleigh";
 * detection: "raw" or "lmmse". */
OPENSC_API opensc_status opensc_simulate_link(const char* scheme, const char* channel, double snr_db,
                                              uint64_t symbols, uint64_t seed, const char* detection,
                                              unsigned threads, opensc_link_stats* out);
OPENSC_API uint64_t opensc_count_symbols(uint64_t bits, unsigned bits_per_symbol);

/* Sessions */
typedef struct opensc_overrides {
  int has_seed;
  uint64_t seed;
  const char* out_dir; /* NULL keeps the configured directory */
  int offline;         /* nonzero forces mock model and hash embedder */
} opensc_overrides;

/* config_path may be NULL for built-in defaults; overrides may be NULL. */
OPENSC_API opensc_status opensc_session_open(const char* config_path, const opensc_overrides* overrides,
                                             opensc_session** out);
OPENSC_API void opensc_session_free(opensc_session* session);

OPENSC_API opensc_status opensc_session_tokenize(opensc_session* session, const char* text, char** report);

typedef struct opensc_simulate_options {
  const char* scheme;    /* NULL: first configured scheme */
  const char* channel;   /* NULL: first configured channel */
  int has_snr;
  double snr_db;
  const char* detection; /* NULL: configured mode */
  const char* qtype;     /* NULL: no scoring */
} opensc_simulate_options;

OPENSC_API opensc_status opensc_session_simulate(opensc_session* session, const char* graph_path,
                                                 const char* question, const opensc_simulate_options* options,
                                                 char** report);
/* graph_paths may be empty to use the configured corpus. *summary lists the
 * written files and any per-cell failures. */
OPENSC_API opensc_status opensc_session_sweep(opensc_session* session, const char* const* graph_paths,
                                              size_t count, char** summary);
OPENSC_API opensc_status opensc_session_count_symbols(opensc_session* session, const char* const* graph_paths,
                                                      size_t count, char** table);
OPENSC_API opensc_status opensc_session_evaluate(opensc_session* session, const char* const* graph_paths,
                                                 size_t count, char** table);

#ifdef __cplusplus
}
#endif

#endif
