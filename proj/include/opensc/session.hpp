#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opensc/config.hpp"
#include "opensc/eval.hpp"

namespace opensc {

struct SimulateOptions {
  std::optional<Scheme> scheme;
  std::optional<ChannelKind> channel;
  std::optional<double> snr_db;
  std::optional<DetectionMode> detection;
  std::optional<QuestionType> qtype;  // scores the answer against the clean graph
};

struct SweepOutput {
  EvalReport report;
  std::vector<std::string> written;  // files under out_dir
};

// Loaded vocabulary, label lists and clients for one configuration. Every
// command is deterministic for a fixed config and the mock model.
class Session {
 public:
  explicit Session(RunConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const RunConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return *vocab_; }

  std::string tokenize_report(std::string_view text) const;
  std::string simulate(const std::string& graph_path, const std::string& question,
                       const SimulateOptions& options);
  SweepOutput sweep(const std::vector<std::string>& graph_paths);
  std::string count_symbols(const std::vector<std::string>& graph_paths) const;
  std::string evaluate(const std::vector<std::string>& graph_paths);

  // Uses the configured corpus when `graph_paths` is empty; an empty corpus
  // is a validation error.
  std::vector<SceneGraph> load_corpus(const std::vector<std::string>& graph_paths) const;

 private:
  PipelineConfig pipeline_config() const;

  RunConfig config_;
  std::unique_ptr<Vocabulary> vocab_;
  LabelList categories_;
  LabelList predicates_;
  std::unique_ptr<LlmClient> llm_;
  std::unique_ptr<Embedder> embedder_;
  std::unique_ptr<TranscriptLog> transcript_;
};

}  // namespace opensc
