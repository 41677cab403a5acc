#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "opensc/error.hpp"

namespace opensc {

struct LlmRequest {
  std::string system;
  std::string user;
  std::string model = "mock";
  double temperature = 0.0;

  // Stable identifier of the prompt text (system + user), hex FNV-1a 64.
  std::string prompt_hash() const;
};

struct LlmResponse {
  std::string text;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

class LlmError : public Error {
 public:
  enum class Cause { kTransport, kAuth, kMalformed, kTimeout };
  LlmError(Cause cause, const std::string& what, int attempts = 1)
      : Error(ErrorKind::kExternal, what), cause_(cause), attempts_(attempts) {}
  Cause cause() const { return cause_; }
  int attempts() const { return attempts_; }

 private:
  Cause cause_;
  int attempts_;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Deterministic stand-in for a chat model. Replies come from a script keyed
// by prompt hash; unscripted prompts are answered by echoing the prompt's
// payload: the fenced ```json block when present, otherwise the numbered
// context lines.
class MockLlm : public LlmClient {
 public:
  MockLlm() = default;
  explicit MockLlm(std::map<std::string, std::string> script) : script_(std::move(script)) {}

  // Script file: JSON object {"<prompt hash>": "<reply>", ...}.
  static std::unique_ptr<MockLlm> from_file(const std::string& path);

  void add(const std::string& prompt_hash, std::string reply);
  // Replies to every prompt whose user text contains `needle`; checked
  // after exact hashes.
  void add_rule(std::string needle, std::string reply);

  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return "mock"; }

  static std::string echo(const LlmRequest& request);

 private:
  std::map<std::string, std::string> script_;
  std::vector<std::pair<std::string, std::string>> rules_;
  std::mutex mutex_;
};

struct HttpClientConfig {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string api_key;   // from the environment, never from flags
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
};

// Chat-completions style client over HTTP(S).
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpClientConfig config);
  LlmResponse complete(const LlmRequest& request) override;
  std::string name() const override { return "http"; }

  static std::string request_body(const LlmRequest& request, const std::string& model);
  static LlmResponse parse_response(const std::string& body);

 private:
  HttpClientConfig config_;
};

// Serialized JSON-lines audit log; API keys never reach it.
class TranscriptLog {
 public:
  explicit TranscriptLog(std::string path);
  void record(const LlmRequest& request, const std::optional<LlmResponse>& response,
              const std::string& client, int attempts, const std::string& error = {});
  const std::string& path() const { return path_; }
  // Any occurrence of `secret` in a record is written as [REDACTED].
  void add_secret(std::string secret);

 private:
  std::string path_;
  std::vector<std::string> secrets_;
  std::mutex mutex_;
};

// POST helper shared by the HTTP clients. Returns the response body or throws
// LlmError.
std::string http_post_json(const std::string& endpoint, const std::string& body,
                           const std::string& api_key, std::chrono::milliseconds timeout);

}  // namespace opensc
