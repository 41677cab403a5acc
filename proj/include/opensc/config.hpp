#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "opensc/baselines.hpp"
#include "opensc/eval.hpp"
#include "opensc/phy.hpp"

namespace opensc {

struct LlmSettings {
  std::string endpoint;  // empty keeps the mock
  std::string model = "mock";
  std::string api_key_env = "OPENSC_API_KEY";
  std::string api_key;   // config file only; the environment wins when set
  unsigned timeout_ms = 30000;
  int max_retries = 2;
  std::string mock_script;
  std::string transcript;
};

struct EmbedderSettings {
  std::string kind = "hash";  // "hash" or "http"
  std::size_t dim = 256;
  std::string endpoint;
  std::string model;
};

struct RunConfig {
  std::string vocab = "data/vocab.txt";
  std::string categories = "data/categories.txt";
  std::string predicates = "data/predicates.txt";
  std::vector<std::string> corpus;  // graph files or directories of *.json

  std::vector<Scheme> schemes{Scheme::k16Qam};
  std::vector<ChannelKind> channels{ChannelKind::kAwgn};
  std::vector<double> snrs_db{0, 6, 12, 18};
  DetectionMode detection = DetectionMode::kAuto;
  unsigned token_width = kDefaultTokenWidth;
  RSCode rs;
  std::uint64_t seed = 1;

  LlmSettings llm;
  EmbedderSettings embedder;
  std::size_t top_k = kDefaultTopK;
  std::size_t trials = 1;
  std::size_t min_tokens = 0;
  unsigned threads = 0;  // 0 uses the hardware concurrency
  bool offline = false;
  bool svg = false;
  std::string out_dir = "out";

  // Throws a validation error on the first violated constraint.
  void validate(bool for_sweep = false) const;
  // True when the LLM or embedder would reach a network service.
  bool live() const;
};

// Relative paths in the document resolve against `base_dir`.
RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// Graph files named by `paths`; directories expand to their *.json files in
// name order.
std::vector<std::string> expand_corpus(const std::vector<std::string>& paths);

}  // namespace opensc
