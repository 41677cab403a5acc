#include "opensc/opensc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "opensc/config.hpp"
#include "opensc/error.hpp"
#include "opensc/scene_graph.hpp"
#include "opensc/session.hpp"
#include "opensc/tokenizer.hpp"

struct opensc_vocab {
  opensc::Vocabulary vocab;
};

struct opensc_graph {
  opensc::SceneGraph graph;
};

struct opensc_session {
  std::unique_ptr<opensc::Session> session;
};

namespace {

thread_local std::string g_last_error;

opensc_status status_of(opensc::ErrorKind kind) {
  switch (kind) {
    case opensc::ErrorKind::kValidation: return OPENSC_ERR_VALIDATION;
    case opensc::ErrorKind::kParse: return OPENSC_ERR_PARSE;
    case opensc::ErrorKind::kIo: return OPENSC_ERR_IO;
    case opensc::ErrorKind::kRuntime: return OPENSC_ERR_RUNTIME;
    case opensc::ErrorKind::kExternal: return OPENSC_ERR_EXTERNAL;
  }
  return OPENSC_ERR_RUNTIME;
}

template <typename Fn>
opensc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return OPENSC_OK;
  } catch (const opensc::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OPENSC_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OPENSC_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return OPENSC_ERR_RUNTIME;
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

void require(const void* p, const char* name) {
  if (!p) throw opensc::Error(opensc::ErrorKind::kValidation, "null argument", name);
}

std::vector<std::string> paths(const char* const* graph_paths, size_t count) {
  std::vector<std::string> out;
  if (count) require(graph_paths, "graph_paths");
  for (size_t i = 0; i < count; ++i) {
    require(graph_paths[i], "graph_paths[i]");
    out.emplace_back(graph_paths[i]);
  }
  return out;
}

// Null pointers are reported with their own status.
#define OPENSC_NONNULL(p)                           \
  do {                                              \
    if (!(p)) {                                     \
      g_last_error = std::string("null argument: ") + #p; \
      return OPENSC_ERR_NULL_ARGUMENT;              \
    }                                               \
  } while (0)

}  // namespace

extern "C" {

const char* opensc_last_error(void) { return g_last_error.c_str(); }

const char* opensc_status_name(opensc_status status) {
  switch (status) {
    case OPENSC_OK: return "ok";
    case OPENSC_ERR_VALIDATION: return "validation";
    case OPENSC_ERR_RUNTIME: return "runtime";
    case OPENSC_ERR_EXTERNAL: return "external";
    case OPENSC_ERR_PARSE: return "parse";
    case OPENSC_ERR_IO: return "io";
    case OPENSC_ERR_NULL_ARGUMENT: return "null-argument";
  }
  return "unknown";
}

const char* opensc_version(void) { return "0.1.0"; }

void opensc_string_free(char* s) { std::free(s); }

opensc_status opensc_vocab_load(const char* path, opensc_vocab** out) {
  OPENSC_NONNULL(path);
  OPENSC_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = new opensc_vocab{opensc::Vocabulary::load(path)}; });
}

void opensc_vocab_free(opensc_vocab* vocab) { delete vocab; }

size_t opensc_vocab_size(const opensc_vocab* vocab) { return vocab ? vocab->vocab.size() : 0; }

opensc_status opensc_tokenize(const opensc_vocab* vocab, const char* text, uint32_t** ids, size_t* count) {
  OPENSC_NONNULL(vocab);
  OPENSC_NONNULL(text);
  OPENSC_NONNULL(ids);
  OPENSC_NONNULL(count);
  *ids = nullptr;
  *count = 0;
  return guarded([&] {
    const auto frame = opensc::wordpiece_tokenize(text, vocab->vocab);
    auto* buf = static_cast<uint32_t*>(std::malloc(sizeof(uint32_t) * (frame.ids.empty() ? 1 : frame.ids.size())));
    if (!buf) throw std::bad_alloc();
    std::copy(frame.ids.begin(), frame.ids.end(), buf);
    *ids = buf;
    *count = frame.ids.size();
  });
}

void opensc_ids_free(uint32_t* ids) { std::free(ids); }

opensc_status opensc_detokenize(const opensc_vocab* vocab, const uint32_t* ids, size_t count, char** text) {
  OPENSC_NONNULL(vocab);
  OPENSC_NONNULL(text);
  if (count) OPENSC_NONNULL(ids);
  *text = nullptr;
  return guarded([&] {
    opensc::TokenFrame frame{std::vector<opensc::TokenId>(ids, ids + count), vocab->vocab.hash()};
    *text = dup(opensc::detokenize(frame, vocab->vocab));
  });
}

opensc_status opensc_graph_parse(const char* json, opensc_graph** out) {
  OPENSC_NONNULL(json);
  OPENSC_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = new opensc_graph{opensc::load_scene_graph(json)}; });
}

opensc_status opensc_graph_load(const char* path, opensc_graph** out) {
  OPENSC_NONNULL(path);
  OPENSC_NONNULL(out);
  *out = nullptr;
  return guarded([&] { *out = new opensc_graph{opensc::load_scene_graph_file(path)}; });
}

void opensc_graph_free(opensc_graph* graph) { delete graph; }

opensc_status opensc_graph_serialize(const opensc_graph* graph, char** text) {
  OPENSC_NONNULL(graph);
  OPENSC_NONNULL(text);
  *text = nullptr;
  return guarded([&] { *text = dup(opensc::serialize_triples(graph->graph)); });
}

opensc_status opensc_graph_summary(const opensc_graph* graph, char** json) {
  OPENSC_NONNULL(graph);
  OPENSC_NONNULL(json);
  *json = nullptr;
  return guarded([&] { *json = dup(opensc::to_json(opensc::summarize(graph->graph))); });
}

opensc_status opensc_simulate_link(const char* scheme, const char* channel, double snr_db, uint64_t symbols,
                                   uint64_t seed, const char* detection, unsigned threads,
                                   opensc_link_stats* out) {
  OPENSC_NONNULL(scheme);
  OPENSC_NONNULL(channel);
  OPENSC_NONNULL(detection);
  OPENSC_NONNULL(out);
  return guarded([&] {
    const auto mode = opensc::parse_detection(detection);
    const auto d = mode == opensc::DetectionMode::kLmmse ? opensc::Detection::kLmmse : opensc::Detection::kRaw;
    const auto s = opensc::simulate_link(opensc::parse_scheme(scheme), opensc::parse_channel(channel), snr_db,
                                         symbols, seed, d, threads);
    *out = {s.bits, s.bit_errors, s.symbols, s.symbol_errors};
  });
}

uint64_t opensc_count_symbols(uint64_t bits, unsigned bits_per_symbol) {
  if (bits_per_symbol == 0) return 0;
  return (bits + bits_per_symbol - 1) / bits_per_symbol;
}

opensc_status opensc_session_open(const char* config_path, const opensc_overrides* overrides,
                                  opensc_session** out) {
  OPENSC_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    auto cfg = config_path ? opensc::load_run_config(config_path) : opensc::RunConfig{};
    if (overrides) {
      if (overrides->has_seed) cfg.seed = overrides->seed;
      if (overrides->out_dir) cfg.out_dir = overrides->out_dir;
      if (overrides->offline) cfg.offline = true;
    }
    *out = new opensc_session{std::make_unique<opensc::Session>(std::move(cfg))};
  });
}

void opensc_session_free(opensc_session* session) { delete session; }

opensc_status opensc_session_tokenize(opensc_session* session, const char* text, char** report) {
  OPENSC_NONNULL(session);
  OPENSC_NONNULL(text);
  OPENSC_NONNULL(report);
  *report = nullptr;
  return guarded([&] { *report = dup(session->session->tokenize_report(text)); });
}

opensc_status opensc_session_simulate(opensc_session* session, const char* graph_path, const char* question,
                                      const opensc_simulate_options* options, char** report) {
  OPENSC_NONNULL(session);
  OPENSC_NONNULL(graph_path);
  OPENSC_NONNULL(report);
  *report = nullptr;
  return guarded([&] {
    opensc::SimulateOptions o;
    if (options) {
      if (options->scheme) o.scheme = opensc::parse_scheme(options->scheme);
      if (options->channel) o.channel = opensc::parse_channel(options->channel);
      if (options->has_snr) o.snr_db = options->snr_db;
      if (options->detection) o.detection = opensc::parse_detection(options->detection);
      if (options->qtype) o.qtype = opensc::parse_question_type(options->qtype);
    }
    *report = dup(session->session->simulate(graph_path, question ? question : "", o));
  });
}

opensc_status opensc_session_sweep(opensc_session* session, const char* const* graph_paths, size_t count,
                                   char** summary) {
  OPENSC_NONNULL(session);
  OPENSC_NONNULL(summary);
  if (count) OPENSC_NONNULL(graph_paths);
  *summary = nullptr;
  return guarded([&] {
    const auto result = session->session->sweep(paths(graph_paths, count));
    std::string text;
    for (const auto& f : result.written) text += "wrote " + f + "\n";
    for (const auto& f : result.report.failures) text += "failed " + f + "\n";
    *summary = dup(text);
  });
}

opensc_status opensc_session_count_symbols(opensc_session* session, const char* const* graph_paths, size_t count,
                                           char** table) {
  OPENSC_NONNULL(session);
  OPENSC_NONNULL(table);
  if (count) OPENSC_NONNULL(graph_paths);
  *table = nullptr;
  return guarded([&] { *table = dup(session->session->count_symbols(paths(graph_paths, count))); });
}

opensc_status opensc_session_evaluate(opensc_session* session, const char* const* graph_paths, size_t count,
                                      char** table) {
  OPENSC_NONNULL(session);
  OPENSC_NONNULL(table);
  if (count) OPENSC_NONNULL(graph_paths);
  *table = nullptr;
  return guarded([&] { *table = dup(session->session->evaluate(paths(graph_paths, count))); });
}

}  // extern "C"
