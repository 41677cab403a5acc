#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "opensc/phy.hpp"
#include "opensc/scene_graph.hpp"
#include "opensc/semantic.hpp"
#include "opensc/tokenizer.hpp"

namespace opensc {

enum class QuestionType { kCategory, kQuantity, kLocation, kRelationship };

const std::array<QuestionType, 4>& all_question_types();
std::string to_string(QuestionType q);
QuestionType parse_question_type(std::string_view name);
// Template question asked of every image for a given type.
std::string default_question(QuestionType q);

// Canonical item keys: "car", "car=3", "car@top-left", "car|on|road".
using ItemSet = std::set<std::string>;

ItemSet ground_truth(const StructuredSummary& clean, QuestionType q);

// Rule-based extraction of claims from free-form answers over the closed
// category / predicate / region vocabularies.
class ClaimExtractor {
 public:
  ClaimExtractor(const LabelList& categories, const LabelList& predicates);

  ItemSet extract(std::string_view answer, QuestionType q) const;

  enum class MentionKind { kCategory, kPredicate, kRegion, kNumber };
  struct Mention {
    MentionKind kind;
    std::string value;
  };
  // Normalized mentions per clause (clauses end at . ; ! ? or newline).
  std::vector<std::vector<Mention>> mentions(std::string_view answer) const;

 private:
  std::vector<std::string> normalize_words(std::string_view clause) const;

  std::vector<std::vector<std::string>> category_phrases_;
  std::vector<std::vector<std::string>> predicate_phrases_;
  std::set<std::string> label_words_;
};

struct Score {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
  std::size_t truth = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;
};

Score score(const ItemSet& answer, const ItemSet& truth);

// ---------------------------------------------------------------------------
// End-to-end pipeline

enum class DetectionMode { kAuto, kRaw, kLmmse };
std::string to_string(DetectionMode d);
DetectionMode parse_detection(std::string_view name);

struct PipelineConfig {
  Scheme scheme = Scheme::k16Qam;
  ChannelConfig channel;
  // kAuto equalizes with CSI on fading channels and demodulates raw on AWGN.
  DetectionMode detection = DetectionMode::kAuto;
  unsigned token_width = kDefaultTokenWidth;
  std::size_t top_k = kDefaultTopK;
  std::string model = "mock";
};

struct Clients {
  LlmClient& llm;
  Embedder& embedder;
  TranscriptLog* transcript = nullptr;
};

struct Transmission {
  std::string sent_text;
  TokenFrame sent;
  TokenFrame received;
  std::string received_text;
  std::size_t tokens = 0;
  std::size_t token_errors = 0;
  std::size_t corrupted_ids = 0;
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t symbols = 0;
  std::uint64_t symbol_errors = 0;
  double noise_var = 0;

  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
  double token_error_rate() const { return tokens ? static_cast<double>(token_errors) / tokens : 0.0; }
};

// serialize -> tokenize -> bits -> modulate -> channel -> (equalize) ->
// demodulate -> ids -> detokenize. Errors carry the failing stage as path.
Transmission transmit(const SceneGraph& graph, const Vocabulary& vocab, const PipelineConfig& cfg);

struct Answered {
  std::string answer;
  LlmRequest prompt;
  std::vector<ScoredChunk> retrieved;
};

// Semantic decoding for one question over an already repaired summary.
Answered answer_question(const StructuredSummary& repaired, std::string_view question,
                         const PipelineConfig& cfg, Clients& clients);

struct PipelineResult {
  Transmission transmission;
  RepairResult repair;
  Answered answered;
};

PipelineResult run_pipeline(const SceneGraph& graph, std::string_view question, const Vocabulary& vocab,
                            const PipelineConfig& cfg, Clients& clients);

// ---------------------------------------------------------------------------
// SNR sweeps

struct SweepConfig {
  std::vector<double> snrs_db;
  std::vector<Scheme> schemes;
  std::vector<ChannelKind> channels;
  std::size_t trials = 1;       // passes over the corpus per cell
  std::size_t min_tokens = 0;   // raise passes until this many tokens per cell
  std::uint64_t seed = 1;
  PipelineConfig pipeline;      // scheme / channel fields are overridden per cell
  unsigned threads = 1;
};

struct ReportRow {
  QuestionType qtype;
  ChannelKind channel;
  Scheme scheme;
  double snr_db = 0;
  double recall = 0;
  double f1 = 0;
  double token_error_rate = 0;
  double ber = 0;
  double symbols = 0;  // mean per transmission
  std::size_t trials = 0;
};

struct PhyRow {
  Scheme scheme;
  ChannelKind channel;
  double snr_db = 0;
  std::size_t trials = 0;
  double ber = 0;
  double ser = 0;
  double token_error_rate = 0;
  std::uint64_t tokens = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<PhyRow> phy;
  std::vector<std::string> failures;  // "<cell>: <error>" per failed transmission

  std::string to_csv() const;
  std::string phy_csv() const;
  // Recall against SNR, one line per (scheme, channel).
  std::string svg(QuestionType q) const;
};

EvalReport snr_sweep(const SweepConfig& cfg, const std::vector<SceneGraph>& corpus,
                     const Vocabulary& vocab, const ClaimExtractor& extractor, Clients& clients);

}  // namespace opensc
