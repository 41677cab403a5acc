#include "opensc/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "opensc/error.hpp"

namespace opensc {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate(bool for_sweep) const {
  if (schemes.empty()) throw validation_error("at least one scheme is required", "schemes");
  if (channels.empty()) throw validation_error("at least one channel is required", "channels");
  if (token_width == 0 || token_width > 32) throw validation_error("must be in 1..32", "token_width");
  for (const auto s : schemes) {
    if (token_width % bits_per_symbol(s) != 0) {
      throw validation_error("token width " + std::to_string(token_width) + " is not divisible by the " +
                                 std::to_string(bits_per_symbol(s)) + " bits per symbol of " + to_string(s),
                             "token_width");
    }
  }
  try {
    rs.validate();
  } catch (const Error& e) {
    throw validation_error(e.what(), "rs");
  }
  if (top_k == 0) throw validation_error("must be at least 1", "top_k");
  if (for_sweep && snrs_db.empty()) throw validation_error("a sweep needs at least one SNR", "snrs_db");
  for (std::size_t i = 0; i < snrs_db.size(); ++i) {
    if (std::isnan(snrs_db[i])) throw validation_error("SNR is NaN", "snrs_db[" + std::to_string(i) + "]");
  }
  if (embedder.kind != "hash" && embedder.kind != "http") {
    throw validation_error("unknown embedder '" + embedder.kind + "'", "embedder.kind");
  }
  if (embedder.kind == "hash" && embedder.dim == 0) throw validation_error("must be positive", "embedder.dim");
  if (!offline && embedder.kind == "http" && embedder.endpoint.empty()) {
    throw validation_error("http embedder needs an endpoint", "embedder.endpoint");
  }
  if (llm.max_retries < 0) throw validation_error("must be non-negative", "llm.max_retries");
  if (llm.timeout_ms == 0) throw validation_error("must be positive", "llm.timeout_ms");
}

bool RunConfig::live() const {
  if (offline) return false;
  return !llm.endpoint.empty() || embedder.kind == "http";
}

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw validation_error("wrong type", path.empty() ? key : path + "." + key);
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw validation_error("unknown key", path.empty() ? key : path + "." + key);
    }
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw parse_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw validation_error("config must be a JSON object");

  reject_unknown(j, {"vocab", "categories", "predicates", "corpus", "schemes", "channels", "snrs_db", "detection",
                     "token_width", "rs", "seed", "llm", "embedder", "top_k", "trials", "min_tokens", "threads",
                     "offline", "svg", "out_dir"},
                 "");

  RunConfig c;
  read(j, "vocab", c.vocab, "");
  read(j, "categories", c.categories, "");
  read(j, "predicates", c.predicates, "");
  read(j, "corpus", c.corpus, "");
  c.vocab = resolve(base_dir, c.vocab);
  c.categories = resolve(base_dir, c.categories);
  c.predicates = resolve(base_dir, c.predicates);
  for (auto& p : c.corpus) p = resolve(base_dir, p);

  if (j.contains("schemes")) {
    std::vector<std::string> names;
    read(j, "schemes", names, "");
    c.schemes.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        c.schemes.push_back(parse_scheme(names[i]));
      } catch (const Error& e) {
        throw validation_error(e.what(), "schemes[" + std::to_string(i) + "]");
      }
    }
  }
  if (j.contains("channels")) {
    std::vector<std::string> names;
    read(j, "channels", names, "");
    c.channels.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        c.channels.push_back(parse_channel(names[i]));
      } catch (const Error& e) {
        throw validation_error(e.what(), "channels[" + std::to_string(i) + "]");
      }
    }
  }
  read(j, "snrs_db", c.snrs_db, "");
  if (j.contains("detection")) {
    std::string d;
    read(j, "detection", d, "");
    c.detection = parse_detection(d);
  }
  read(j, "token_width", c.token_width, "");
  if (j.contains("rs")) {
    const auto& rs = j["rs"];
    if (!rs.is_object()) throw validation_error("must be an object", "rs");
    reject_unknown(rs, {"n", "k"}, "rs");
    read(rs, "n", c.rs.n, "rs");
    read(rs, "k", c.rs.k, "rs");
  }
  read(j, "seed", c.seed, "");

  if (j.contains("llm")) {
    const auto& l = j["llm"];
    if (!l.is_object()) throw validation_error("must be an object", "llm");
    reject_unknown(l, {"endpoint", "model", "api_key_env", "api_key", "timeout_ms", "max_retries", "mock_script",
                       "transcript"},
                   "llm");
    read(l, "endpoint", c.llm.endpoint, "llm");
    read(l, "model", c.llm.model, "llm");
    read(l, "api_key_env", c.llm.api_key_env, "llm");
    read(l, "api_key", c.llm.api_key, "llm");
    read(l, "timeout_ms", c.llm.timeout_ms, "llm");
    read(l, "max_retries", c.llm.max_retries, "llm");
    read(l, "mock_script", c.llm.mock_script, "llm");
    read(l, "transcript", c.llm.transcript, "llm");
    c.llm.mock_script = resolve(base_dir, c.llm.mock_script);
    c.llm.transcript = resolve(base_dir, c.llm.transcript);
  }
  if (j.contains("embedder")) {
    const auto& e = j["embedder"];
    if (!e.is_object()) throw validation_error("must be an object", "embedder");
    reject_unknown(e, {"kind", "dim", "endpoint", "model"}, "embedder");
    read(e, "kind", c.embedder.kind, "embedder");
    read(e, "dim", c.embedder.dim, "embedder");
    read(e, "endpoint", c.embedder.endpoint, "embedder");
    read(e, "model", c.embedder.model, "embedder");
  }
  read(j, "top_k", c.top_k, "");
  read(j, "trials", c.trials, "");
  read(j, "min_tokens", c.min_tokens, "");
  read(j, "threads", c.threads, "");
  read(j, "offline", c.offline, "");
  read(j, "svg", c.svg, "");
  read(j, "out_dir", c.out_dir, "");
  c.out_dir = resolve(base_dir, c.out_dir);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file", path);
  std::ostringstream text;
  text << in.rdbuf();
  const auto base = fs::path(path).parent_path().string();
  return parse_run_config(text.str(), base.empty() ? "." : base);
}

std::vector<std::string> expand_corpus(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p, ec)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::kIo, "no such graph file or directory", p);
    }
  }
  return files;
}

}  // namespace opensc
