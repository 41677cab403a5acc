#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "opensc/llm.hpp"
#include "opensc/scene_graph.hpp"

namespace opensc {

struct Chunk {
  std::string category;
  std::string text;

  bool operator==(const Chunk&) const = default;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::string name() const = 0;
};

// Offline embedder: each lowercase alphanumeric word adds 1 to bucket
// fnv1a64(word) mod dim; the result is L2-normalized. Text without words
// maps to the zero vector.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 256);
  EmbeddingVector embed(std::string_view text) override;
  std::string name() const override { return "hash"; }
  std::size_t dim() const { return dim_; }
  static std::vector<std::string> words(std::string_view text);
  std::size_t bucket(std::string_view word) const;

 private:
  std::size_t dim_;
};

// Embeddings-service client: POST {"model", "input"} and read
// data[0].embedding.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpClientConfig config);
  EmbeddingVector embed(std::string_view text) override;
  std::string name() const override { return "http"; }

 private:
  HttpClientConfig config_;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Built once, then read-only.
class VectorStore {
 public:
  struct Entry {
    EmbeddingVector vector;
    Chunk chunk;
  };

  void add(EmbeddingVector vector, Chunk chunk);
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().vector.dim(); }

 private:
  std::vector<Entry> entries_;
};

inline constexpr std::size_t kDefaultTopK = 4;

struct ScoredChunk {
  Chunk chunk;
  double similarity = 0;
};

// Descending cosine similarity, ties by category name; min(k, size) results.
std::vector<ScoredChunk> retrieve_top_k(const VectorStore& store, const EmbeddingVector& query,
                                        std::size_t k = kDefaultTopK);

// One chunk per category, ordered by category name.
std::vector<Chunk> chunk_summary(const StructuredSummary& summary);

VectorStore build_store(const std::vector<Chunk>& chunks, Embedder& embedder);

extern const char* const kAnswerPreamble;
extern const char* const kRepairPreamble;

LlmRequest build_prompt(std::string_view question, const std::vector<Chunk>& chunks,
                        const std::string& model = "mock");
LlmRequest build_repair_prompt(std::string_view recovered_text, const StructuredSummary& summary,
                               const std::string& model = "mock");

// Returns the reply text and appends a transcript record when a log is given.
std::string answer(const LlmRequest& request, LlmClient& client, TranscriptLog* transcript = nullptr);

struct RepairResult {
  StructuredSummary summary;
  bool fallback = false;
  std::string warning;
};

// Asks the model to reconcile the received text with the structured
// knowledge. The reply must be a summary JSON object; anything else (or a
// client failure) keeps the input summary. Accepted replies never drop a
// category or object present in the input.
RepairResult repair_with_structure(std::string_view recovered_text, const StructuredSummary& summary,
                                   LlmClient& client, TranscriptLog* transcript = nullptr,
                                   const std::string& model = "mock");

}  // namespace opensc
