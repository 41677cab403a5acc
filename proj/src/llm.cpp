#include "opensc/llm.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "opensc/tokenizer.hpp"

namespace opensc {

using nlohmann::json;

std::string LlmRequest::prompt_hash() const {
  std::uint64_t h = fnv1a64(system);
  h = fnv1a64("\n\x1f\n", h);
  h = fnv1a64(user, h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

std::unique_ptr<MockLlm> MockLlm::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open mock script", path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw parse_error(e.what(), path);
  }
  if (!j.is_object()) throw parse_error("mock script must be an object of hash -> reply", path);
  std::map<std::string, std::string> script;
  for (const auto& [hash, reply] : j.items()) {
    if (!reply.is_string()) throw parse_error("reply must be a string", path + ":" + hash);
    script[hash] = reply.get<std::string>();
  }
  return std::make_unique<MockLlm>(std::move(script));
}

void MockLlm::add(const std::string& prompt_hash, std::string reply) {
  std::lock_guard lock(mutex_);
  script_[prompt_hash] = std::move(reply);
}

void MockLlm::add_rule(std::string needle, std::string reply) {
  std::lock_guard lock(mutex_);
  rules_.emplace_back(std::move(needle), std::move(reply));
}

std::string MockLlm::echo(const LlmRequest& request) {
  const std::string& u = request.user;
  static const std::string kOpen = "```json\n";
  auto open = u.find(kOpen);
  if (open != std::string::npos) {
    const auto start = open + kOpen.size();
    const auto close = u.find("\n```", start);
    return u.substr(start, close == std::string::npos ? std::string::npos : close - start);
  }
  std::istringstream lines(u);
  std::string line, out;
  while (std::getline(lines, line)) {
    if (line.size() < 4 || line[0] != '[') continue;
    const auto bracket = line.find("] ");
    if (bracket == std::string::npos || bracket < 2) continue;
    bool numbered = true;
    for (std::size_t i = 1; i < bracket; ++i) numbered = numbered && std::isdigit(static_cast<unsigned char>(line[i]));
    if (!numbered) continue;
    if (!out.empty()) out += "\n";
    out += line.substr(bracket + 2);
  }
  return out;
}

LlmResponse MockLlm::complete(const LlmRequest& request) {
  LlmResponse r;
  {
    std::lock_guard lock(mutex_);
    auto it = script_.find(request.prompt_hash());
    if (it != script_.end()) {
      r.text = it->second;
    } else {
      bool hit = false;
      for (const auto& [needle, reply] : rules_) {
        if (request.user.find(needle) != std::string::npos) {
          r.text = reply;
          hit = true;
          break;
        }
      }
      if (!hit) r.text = echo(request);
    }
  }
  r.prompt_tokens = basic_split(request.system).size() + basic_split(request.user).size();
  r.completion_tokens = basic_split(r.text).size();
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw validation_error("endpoint must be an http(s) URL", url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw validation_error("unsupported URL scheme", url);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.base = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return p;
}

}  // namespace

std::string http_post_json(const std::string& endpoint, const std::string& body,
                           const std::string& api_key, std::chrono::milliseconds timeout) {
  const auto url = parse_url(endpoint);
  std::unique_ptr<httplib::Client> client;
  try {
    client = std::make_unique<httplib::Client>(url.base);
  } catch (const std::exception& e) {
    throw LlmError(LlmError::Cause::kTransport, std::string("cannot create client: ") + e.what());
  }
  if (!client->is_valid()) {
    throw LlmError(LlmError::Cause::kTransport, "unsupported endpoint (is TLS support built in?)");
  }
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client->Post(url.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto cause = err == httplib::Error::Read || err == httplib::Error::Write
                           ? LlmError::Cause::kTimeout
                           : LlmError::Cause::kTransport;
    throw LlmError(cause, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw LlmError(LlmError::Cause::kAuth, "authentication rejected (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status >= 500) {
    throw LlmError(LlmError::Cause::kTransport, "server error (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw LlmError(LlmError::Cause::kMalformed, "unexpected HTTP " + std::to_string(res->status));
  }
  return res->body;
}

HttpLlmClient::HttpLlmClient(HttpClientConfig config) : config_(std::move(config)) {
  parse_url(config_.endpoint);
  if (config_.max_retries < 0) throw validation_error("max_retries must be >= 0");
}

std::string HttpLlmClient::request_body(const LlmRequest& request, const std::string& model) {
  json body;
  body["model"] = model.empty() ? request.model : model;
  body["temperature"] = request.temperature;
  body["messages"] = json::array({{{"role", "system"}, {"content", request.system}},
                                  {{"role", "user"}, {"content", request.user}}});
  return body.dump();
}

LlmResponse HttpLlmClient::parse_response(const std::string& body) {
  try {
    const auto j = json::parse(body);
    LlmResponse r;
    r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      r.prompt_tokens = j["usage"].value("prompt_tokens", 0ULL);
      r.completion_tokens = j["usage"].value("completion_tokens", 0ULL);
    }
    return r;
  } catch (const json::exception& e) {
    throw LlmError(LlmError::Cause::kMalformed, std::string("malformed completion: ") + e.what());
  }
}

LlmResponse HttpLlmClient::complete(const LlmRequest& request) {
  const auto body = request_body(request, config_.model);
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      return parse_response(http_post_json(config_.endpoint, body, config_.api_key, config_.timeout));
    } catch (const LlmError& e) {
      const bool retryable = e.cause() == LlmError::Cause::kTransport || e.cause() == LlmError::Cause::kTimeout;
      if (!retryable || attempt > config_.max_retries) throw LlmError(e.cause(), e.what(), attempt);
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
    }
  }
}

// ---------------------------------------------------------------------------

TranscriptLog::TranscriptLog(std::string path) : path_(std::move(path)) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot open transcript", path_);
}

void TranscriptLog::record(const LlmRequest& request, const std::optional<LlmResponse>& response,
                           const std::string& client, int attempts, const std::string& error) {
  json rec;
  rec["client"] = client;
  rec["model"] = request.model;
  rec["temperature"] = request.temperature;
  rec["prompt_hash"] = request.prompt_hash();
  rec["system"] = request.system;
  rec["user"] = request.user;
  rec["attempts"] = attempts;
  if (response) {
    rec["reply"] = response->text;
    rec["usage"] = {{"prompt_tokens", response->prompt_tokens},
                    {"completion_tokens", response->completion_tokens}};
  }
  if (!error.empty()) rec["error"] = error;
  std::lock_guard lock(mutex_);
  auto line = rec.dump();
  for (const auto& secret : secrets_) {
    for (auto pos = line.find(secret); pos != std::string::npos; pos = line.find(secret, pos)) {
      line.replace(pos, secret.size(), "[REDACTED]");
    }
  }
  std::ofstream out(path_, std::ios::app);
  out << line << '\n';
}

void TranscriptLog::add_secret(std::string secret) {
  if (secret.empty()) return;
  std::lock_guard lock(mutex_);
  secrets_.push_back(std::move(secret));
}

}  // namespace opensc
