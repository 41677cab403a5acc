#include "opensc/semantic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "opensc/tokenizer.hpp"

namespace opensc {

const char* const kAnswerPreamble =
    "You answer questions about an image. Use only the numbered scene context below; "
    "if the context does not contain the answer, say that it is unknown.";

const char* const kRepairPreamble =
    "You repair scene descriptions received over a noisy channel. Reconcile the received text "
    "with the structured knowledge and reply with a single JSON object only.";

// ---------------------------------------------------------------------------
// Embedders

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw validation_error("embedding dimension must be positive");
}

std::vector<std::string> HashEmbedder::words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t HashEmbedder::bucket(std::string_view word) const { return fnv1a64(word) % dim_; }

EmbeddingVector HashEmbedder::embed(std::string_view text) {
  EmbeddingVector v;
  v.values.assign(dim_, 0.0);
  for (const auto& w : words(text)) v.values[bucket(w)] += 1.0;
  double norm = 0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v.values) x /= norm;
  }
  return v;
}

HttpEmbedder::HttpEmbedder(HttpClientConfig config) : config_(std::move(config)) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["input"] = std::string(text);
  const auto reply = http_post_json(config_.endpoint, body.dump(), config_.api_key, config_.timeout);
  try {
    const auto j = nlohmann::json::parse(reply);
    EmbeddingVector v;
    v.values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.values.empty()) throw LlmError(LlmError::Cause::kMalformed, "empty embedding");
    for (double x : v.values) {
      if (!std::isfinite(x)) throw LlmError(LlmError::Cause::kMalformed, "non-finite embedding");
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(LlmError::Cause::kMalformed, std::string("malformed embedding reply: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Store and retrieval

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw validation_error("embedding dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void VectorStore::add(EmbeddingVector vector, Chunk chunk) {
  if (vector.dim() == 0) throw validation_error("empty embedding");
  if (!entries_.empty() && vector.dim() != dim()) throw validation_error("embedding dimension mismatch");
  for (double x : vector.values) {
    if (!std::isfinite(x)) throw validation_error("non-finite embedding entry");
  }
  for (const auto& e : entries_) {
    if (e.chunk.category == chunk.category) {
      throw validation_error("duplicate chunk category '" + chunk.category + "'");
    }
  }
  entries_.push_back({std::move(vector), std::move(chunk)});
}

std::vector<ScoredChunk> retrieve_top_k(const VectorStore& store, const EmbeddingVector& query,
                                        std::size_t k) {
  if (store.empty()) throw validation_error("empty vector store");
  if (query.dim() != store.dim()) throw validation_error("query dimension mismatch");
  std::vector<ScoredChunk> scored;
  scored.reserve(store.size());
  for (const auto& e : store.entries()) scored.push_back({e.chunk, cosine_similarity(e.vector, query)});
  const auto keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const ScoredChunk& a, const ScoredChunk& b) {
                      if (a.similarity != b.similarity) return a.similarity > b.similarity;
                      return a.chunk.category < b.chunk.category;
                    });
  scored.resize(keep);
  return scored;
}

// ---------------------------------------------------------------------------
// Chunking and prompts

std::vector<Chunk> chunk_summary(const StructuredSummary& summary) {
  std::vector<Chunk> chunks;
  for (const auto& [category, count] : summary.number) {
    std::ostringstream text;
    if (count == 1) {
      text << "There is 1 " << category << ".";
    } else {
      text << "There are " << count << " " << category << "s.";
    }

    std::vector<std::string> regions;
    for (const auto& [id, loc] : summary.location) {
      if (loc.category == category) regions.push_back(loc.region);
    }
    text << " Locations: ";
    if (regions.empty()) text << "unknown";
    for (std::size_t i = 0; i < regions.size(); ++i) text << (i ? ", " : "") << regions[i];
    text << ".";

    std::vector<std::string> relations;
    std::set<CategoryTriple> seen;
    for (const auto& t : summary.relationship) {
      if ((t.subject == category || t.object == category) && seen.insert(t).second) {
        relations.push_back(t.subject + " " + t.predicate + " " + t.object);
      }
    }
    text << " Relations: ";
    if (relations.empty()) text << "none";
    for (std::size_t i = 0; i < relations.size(); ++i) text << (i ? "; " : "") << relations[i];
    text << ".";
    chunks.push_back({category, text.str()});
  }
  return chunks;
}

VectorStore build_store(const std::vector<Chunk>& chunks, Embedder& embedder) {
  VectorStore store;
  for (const auto& c : chunks) store.add(embedder.embed(c.text), c);
  return store;
}

LlmRequest build_prompt(std::string_view question, const std::vector<Chunk>& chunks,
                        const std::string& model) {
  LlmRequest r;
  r.system = kAnswerPreamble;
  r.model = model;
  r.temperature = 0.0;
  std::ostringstream user;
  user << "Context:\n";
  for (std::size_t i = 0; i < chunks.size(); ++i) user << "[" << (i + 1) << "] " << chunks[i].text << "\n";
  user << "\nQuestion: " << question << "\nAnswer:";
  r.user = user.str();
  return r;
}

LlmRequest build_repair_prompt(std::string_view recovered_text, const StructuredSummary& summary,
                               const std::string& model) {
  LlmRequest r;
  r.system = kRepairPreamble;
  r.model = model;
  r.temperature = 0.0;
  std::ostringstream user;
  user << "Received text (may contain transmission errors):\n"
       << recovered_text << "\n\n"
       << "Structured knowledge:\n```json\n"
       << to_json(summary) << "\n```\n\n"
       << "Return the corrected structure as one JSON object with keys \"number\", \"location\" "
          "and \"relationship\".";
  r.user = user.str();
  return r;
}

std::string answer(const LlmRequest& request, LlmClient& client, TranscriptLog* transcript) {
  try {
    auto response = client.complete(request);
    if (transcript) transcript->record(request, response, client.name(), 1);
    return response.text;
  } catch (const LlmError& e) {
    if (transcript) transcript->record(request, std::nullopt, client.name(), e.attempts(), e.what());
    throw;
  }
}

RepairResult repair_with_structure(std::string_view recovered_text, const StructuredSummary& summary,
                                   LlmClient& client, TranscriptLog* transcript,
                                   const std::string& model) {
  RepairResult out;
  out.summary = summary;
  const auto request = build_repair_prompt(recovered_text, summary, model);
  std::string reply;
  try {
    reply = answer(request, client, transcript);
  } catch (const LlmError& e) {
    out.fallback = true;
    out.warning = std::string("repair skipped, model unavailable: ") + e.what();
    return out;
  }

  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    out.fallback = true;
    out.warning = "repair reply contained no JSON object";
    return out;
  }
  StructuredSummary parsed;
  try {
    parsed = summary_from_json(std::string_view(reply).substr(open, close - open + 1));
  } catch (const Error& e) {
    out.fallback = true;
    out.warning = std::string("repair reply rejected: ") + e.what();
    return out;
  }
  for (const auto& [category, count] : summary.number) parsed.number.try_emplace(category, count);
  for (const auto& [id, loc] : summary.location) parsed.location.try_emplace(id, loc);
  out.summary = std::move(parsed);
  return out;
}

}  // namespace opensc
