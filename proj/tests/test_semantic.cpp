#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "opensc/error.hpp"
#include "opensc/semantic.hpp"
#include "oracles.hpp"

using namespace opensc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("opensc_test_" + name)).string();
}

EmbeddingVector vec(std::vector<double> v) { return {std::move(v)}; }

StructuredSummary five_category_summary() {
  StructuredSummary s;
  s.number = {{"car", 2}, {"road", 1}, {"tree", 1}, {"building", 1}, {"person", 1}};
  s.location = {{1, {"car", "bottom-left"}},  {2, {"car", "bottom-right"}}, {3, {"road", "bottom-center"}},
                {4, {"tree", "top-left"}},    {5, {"building", "top-right"}}, {6, {"person", "middle-center"}}};
  s.relationship = {{"car", "on", "road"}, {"car", "on", "road"}, {"tree", "near", "road"}, {"person", "near", "car"}};
  return s;
}

// Local chat-completions stand-in.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_auth = req.get_header_value("Authorization");
      last_body = req.body;
      res.status = status;
      res.set_content(reply, "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"data":[{"embedding":[0.6,0.8,0.0]}]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  std::atomic<int> hits{0};
  int status = 200;
  std::string reply;
  std::string last_auth;
  std::string last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("hash embedder") {
  HashEmbedder e;
  const auto a = e.embed("car on road");
  CHECK(a.dim() == 256);
  CHECK(a.values == e.embed("car on road").values);
  double norm = 0;
  for (double v : a.values) norm += v * v;
  CHECK(std::abs(norm - 1.0) < 1e-12);
  CHECK(e.embed("; ;").values == std::vector<double>(256, 0.0));
  CHECK(HashEmbedder::words("Top-Left car!") == std::vector<std::string>{"top", "left", "car"});
  CHECK_THROWS_AS(HashEmbedder(0), Error);
}

TEST_CASE("hash embedder collision rate on label words") {
  std::set<std::string> words;
  for (const char* f : {"categories.txt", "predicates.txt"}) {
    std::ifstream in(std::string(OPENSC_DATA_DIR) + "/" + f);
    std::string line;
    while (std::getline(in, line)) {
      for (const auto& w : HashEmbedder::words(line)) words.insert(w);
    }
  }
  REQUIRE(words.size() > 50);
  HashEmbedder e;
  std::vector<std::string> list(words.begin(), words.end());
  std::size_t pairs = 0, collisions = 0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = i + 1; j < list.size(); ++j) {
      ++pairs;
      if (cosine_similarity(e.embed(list[i]), e.embed(list[j])) != 0.0) ++collisions;
    }
  }
  CHECK(static_cast<double>(collisions) / pairs < 0.02);
}

TEST_CASE("cosine similarity and store invariants") {
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == 0);
  CHECK(cosine_similarity(vec({1, 1}), vec({2, 2})) == doctest::Approx(1.0));
  CHECK(cosine_similarity(vec({0, 0}), vec({1, 0})) == 0);
  CHECK_THROWS_AS(cosine_similarity(vec({1}), vec({1, 2})), Error);

  VectorStore store;
  store.add(vec({1, 0}), {"car", "x"});
  CHECK_THROWS_AS(store.add(vec({1, 0, 0}), {"road", "y"}), Error);
  CHECK_THROWS_AS(store.add(vec({0, 1}), {"car", "z"}), Error);
  CHECK_THROWS_AS(store.add(vec({NAN, 1}), {"tree", "z"}), Error);
  CHECK_THROWS_AS(store.add(vec({}), {"tree", "z"}), Error);
}

TEST_CASE("retrieval basics") {
  VectorStore store;
  store.add(vec({1, 0, 0}), {"a", "A"});
  store.add(vec({0, 1, 0}), {"b", "B"});
  store.add(vec({0.6, 0.8, 0}), {"c", "C"});
  const auto top = retrieve_top_k(store, vec({0, 1, 0}));
  REQUIRE(top.size() == 3);
  CHECK(top[0].chunk.category == "b");
  CHECK(top[0].similarity == doctest::Approx(1.0));
  CHECK(top[1].chunk.category == "c");
  CHECK(retrieve_top_k(store, vec({0, 1, 0}), 1).size() == 1);
  CHECK_THROWS_AS(retrieve_top_k(store, vec({1, 0})), Error);
  CHECK_THROWS_AS(retrieve_top_k(VectorStore{}, vec({1, 0})), Error);

  // Exact ties resolve by category name.
  VectorStore ties;
  ties.add(vec({1, 0}), {"zebra", ""});
  ties.add(vec({1, 0}), {"apple", ""});
  ties.add(vec({1, 0}), {"mango", ""});
  const auto t = retrieve_top_k(ties, vec({1, 0}), 2);
  CHECK(t[0].chunk.category == "apple");
  CHECK(t[1].chunk.category == "mango");
}

TEST_CASE("retrieval matches brute force on random stores") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    VectorStore store;
    std::vector<std::pair<std::string, std::vector<double>>> raw;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> v(8);
      for (auto& x : v) x = n(rng);
      raw.push_back({"c" + std::to_string(i), v});
      store.add(vec(v), {raw.back().first, ""});
    }
    std::vector<double> q(8);
    for (auto& x : q) x = n(rng);
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [c, v] : raw) scored.push_back({c, oracle::cosine(v, q)});
    const auto expect = oracle::top_k(scored, 4);
    const auto got = retrieve_top_k(store, vec(q));
    REQUIRE(got.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(got[i].chunk.category == expect[i].first);
  }
}

TEST_CASE("chunking") {
  CHECK(chunk_summary({}).empty());
  StructuredSummary two;
  two.number = {{"car", 2}};
  two.location = {{1, {"car", "top-left"}}, {2, {"car", "bottom-right"}}};
  const auto c = chunk_summary(two);
  REQUIRE(c.size() == 1);
  CHECK(c[0].text.find('2') != std::string::npos);
  CHECK(c[0].text.find("top-left") != std::string::npos);
  CHECK(c[0].text.find("bottom-right") != std::string::npos);

  const auto chunks = chunk_summary(five_category_summary());
  const std::vector<Chunk> expect = {
      {"building", "There is 1 building. Locations: top-right. Relations: none."},
      {"car", "There are 2 cars. Locations: bottom-left, bottom-right. Relations: car on road; person near car."},
      {"person", "There is 1 person. Locations: middle-center. Relations: person near car."},
      {"road", "There is 1 road. Locations: bottom-center. Relations: car on road; tree near road."},
      {"tree", "There is 1 tree. Locations: top-left. Relations: tree near road."},
  };
  CHECK(chunks == expect);
}

TEST_CASE("prompt template") {
  const auto empty = build_prompt("How many cars?", {});
  CHECK(empty.user == "Context:\n\nQuestion: How many cars?\nAnswer:");
  CHECK(empty.temperature == 0.0);
  CHECK(empty.system == kAnswerPreamble);

  const auto chunks = chunk_summary(five_category_summary());
  const std::vector<Chunk> four(chunks.begin(), chunks.begin() + 4);
  const auto p = build_prompt("Where are the cars?", four);
  std::size_t pos = 0;
  for (const auto& c : four) {
    const auto at = p.user.find(c.text);
    REQUIRE(at != std::string::npos);
    CHECK(at >= pos);
    pos = at;
  }
  const std::string rendered = p.system + "\n---\n" + p.user + "\n";
  const std::string golden_path = std::string(OPENSC_TEST_DIR) + "/golden/prompt.txt";
  if (std::getenv("OPENSC_UPDATE_GOLDEN")) std::ofstream(golden_path, std::ios::binary) << rendered;
  CHECK(rendered == read_file(golden_path));
  CHECK(build_prompt("Where are the cars?", four).prompt_hash() == p.prompt_hash());
}

TEST_CASE("mock llm") {
  MockLlm m;
  LlmRequest r;
  r.system = "s";
  r.user = "Context:\n[1] alpha\n[2] beta\n\nQuestion: q\nAnswer:";
  CHECK(m.complete(r).text == "alpha\nbeta");
  m.add_rule("Question: q", "ruled");
  CHECK(m.complete(r).text == "ruled");
  m.add(r.prompt_hash(), "scripted");
  CHECK(m.complete(r).text == "scripted");
  r.user = "x\n```json\n{\"a\":1}\n```\ny";
  CHECK(MockLlm::echo(r) == "{\"a\":1}");

  const auto path = temp_path("script.json");
  {
    std::ofstream out(path);
    out << nlohmann::json{{"abc", "from file"}}.dump();
  }
  auto from_file = MockLlm::from_file(path);
  CHECK(from_file->name() == "mock");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(MockLlm::from_file(path), Error);
}

TEST_CASE("repair with structure") {
  const auto summary = five_category_summary();
  MockLlm echo;
  const auto same = repair_with_structure("car on road; car on road", summary, echo);
  CHECK_FALSE(same.fallback);
  CHECK(same.summary == summary);

  const auto unk = repair_with_structure("car [UNK] road", summary, echo);
  CHECK(unk.summary == summary);

  // Scripted correction of a corrupted predicate.
  auto corrected = summary;
  corrected.relationship[2] = {"tree", "next to", "road"};
  MockLlm scripted;
  scripted.add(build_repair_prompt("tree nea road", summary).prompt_hash(), "Sure:\n" + to_json(corrected));
  const auto fixed = repair_with_structure("tree nea road", summary, scripted);
  CHECK_FALSE(fixed.fallback);
  CHECK(std::find(fixed.summary.relationship.begin(), fixed.summary.relationship.end(),
                  CategoryTriple{"tree", "next to", "road"}) != fixed.summary.relationship.end());

  MockLlm prose;
  prose.add_rule("Received text", "I cannot help with that.");
  const auto fallback = repair_with_structure("x", summary, prose);
  CHECK(fallback.fallback);
  CHECK_FALSE(fallback.warning.empty());
  CHECK(fallback.summary == summary);

  MockLlm broken;
  broken.add_rule("Received text", R"({"number":{"car":-1}})");
  CHECK(repair_with_structure("x", summary, broken).fallback);

  // Accepted replies never drop input categories or objects.
  MockLlm partial;
  partial.add_rule("Received text", R"({"number":{"car":2},"location":{},"relationship":[]})");
  const auto kept = repair_with_structure("x", summary, partial);
  CHECK_FALSE(kept.fallback);
  CHECK(kept.summary.number == summary.number);
  CHECK(kept.summary.location == summary.location);
  CHECK(kept.summary.relationship.empty());
}

TEST_CASE("http client against a local server") {
  FakeServer server;
  server.reply = R"({"choices":[{"message":{"content":"two cars"}}],"usage":{"prompt_tokens":7,"completion_tokens":2}})";
  HttpLlmClient client({server.url("/v1/chat/completions"), "test-model", "sk-secret", std::chrono::milliseconds(2000), 2});
  LlmRequest r;
  r.system = "sys";
  r.user = "How many cars?";

  const auto transcript_path = temp_path("transcript.jsonl");
  std::filesystem::remove(transcript_path);
  TranscriptLog log(transcript_path);
  log.add_secret("sk-secret");
  CHECK(answer(r, client, &log) == "two cars");
  CHECK(server.last_auth == "Bearer sk-secret");
  const auto body = nlohmann::json::parse(server.last_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["messages"][1]["content"] == "How many cars?");

  server.status = 401;
  server.hits = 0;
  try {
    client.complete(r);
    FAIL("expected auth failure");
  } catch (const LlmError& e) {
    CHECK(e.cause() == LlmError::Cause::kAuth);
    CHECK(e.attempts() == 1);
  }
  CHECK(server.hits == 1);

  server.status = 503;
  server.hits = 0;
  try {
    answer(r, client, &log);
    FAIL("expected transport failure");
  } catch (const LlmError& e) {
    CHECK(e.cause() == LlmError::Cause::kTransport);
    CHECK(e.attempts() == 3);
    CHECK(e.kind() == ErrorKind::kExternal);
  }
  CHECK(server.hits == 3);

  server.status = 200;
  server.reply = R"({"choices":[]})";
  CHECK_THROWS_AS(client.complete(r), LlmError);

  // Transport failure falls back during repair.
  HttpLlmClient dead({"http://127.0.0.1:1/v1/chat/completions", "m", "", std::chrono::milliseconds(200), 0});
  const auto rep = repair_with_structure("x", five_category_summary(), dead);
  CHECK(rep.fallback);

  HttpEmbedder embedder({server.url("/v1/embeddings"), "emb", "", std::chrono::milliseconds(2000), 0});
  CHECK(embedder.embed("car").values == std::vector<double>{0.6, 0.8, 0.0});

  const auto text = read_file(transcript_path);
  CHECK(text.find("sk-secret") == std::string::npos);
  CHECK(text.find("two cars") != std::string::npos);
  int lines = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    CHECK(nlohmann::json::accept(line));
    ++lines;
  }
  CHECK(lines == 2);
  std::filesystem::remove(transcript_path);

  CHECK_THROWS_AS(HttpLlmClient({"ftp://x", "m", "", std::chrono::milliseconds(10), 0}), Error);
}

TEST_CASE("live endpoint smoke test" * doctest::skip(std::getenv("OPENSC_LIVE_ENDPOINT") == nullptr)) {
  const char* key_env = std::getenv("OPENSC_API_KEY");
  HttpLlmClient client({std::getenv("OPENSC_LIVE_ENDPOINT"),
                        std::getenv("OPENSC_LIVE_MODEL") ? std::getenv("OPENSC_LIVE_MODEL") : "gpt-4o-mini",
                        key_env ? key_env : "", std::chrono::milliseconds(60000), 2});
  const auto chunks = chunk_summary(five_category_summary());
  const auto reply = answer(build_prompt("How many cars are there?", chunks), client);
  CHECK_FALSE(reply.empty());
}
