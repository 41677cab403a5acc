#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "opensc/error.hpp"
#include "opensc/eval.hpp"

using namespace opensc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::string kData = OPENSC_DATA_DIR;

const LabelList& categories() {
  static const LabelList l = LabelList::load(kData + "/categories.txt");
  return l;
}
const LabelList& predicates() {
  static const LabelList l = LabelList::load(kData + "/predicates.txt");
  return l;
}
const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::load(kData + "/vocab.txt");
  return v;
}

SceneGraph small_graph() {
  return load_scene_graph(R"({
    "image": {"width": 300, "height": 300},
    "objects": [
      {"id": 1, "category": "car", "bbox": [10, 210, 60, 260]},
      {"id": 2, "category": "car", "bbox": [220, 220, 280, 280]},
      {"id": 3, "category": "road", "bbox": [0, 200, 300, 300]},
      {"id": 4, "category": "tree", "bbox": [10, 10, 60, 60]}
    ],
    "relations": [
      {"subject": 1, "predicate": "on", "object": 3},
      {"subject": 2, "predicate": "on", "object": 3},
      {"subject": 4, "predicate": "near", "object": 3}
    ]})");
}

std::vector<SceneGraph> corpus() {
  std::vector<SceneGraph> out;
  for (const char* name : {"street_intersection", "harbor", "park"}) {
    out.push_back(load_scene_graph_file(kData + "/graphs/" + name + ".json"));
  }
  return out;
}

ItemSet random_set(std::mt19937& rng) {
  ItemSet s;
  const int n = static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) s.insert("i" + std::to_string(rng() % 10));
  return s;
}

}  // namespace

TEST_CASE("score fixtures") {
  const auto same = score({"a", "b"}, {"a", "b"});
  CHECK(same.recall == 1);
  CHECK(same.precision == 1);
  CHECK(same.f1 == 1);

  const auto none = score({"x"}, {"a"});
  CHECK(none.recall == 0);
  CHECK(none.precision == 0);
  CHECK(none.f1 == 0);

  // 2 of 3 truths; 2 of 4 answers: f1 = 2 * (2/3) * (1/2) / (2/3 + 1/2) = 4/7.
  const auto part = score({"a", "b", "x", "y"}, {"a", "b", "c"});
  CHECK(part.recall == doctest::Approx(2.0 / 3));
  CHECK(part.precision == doctest::Approx(0.5));
  CHECK(part.f1 == doctest::Approx(4.0 / 7));
  CHECK(part.matched == 2);

  CHECK(score({}, {}).recall == 1);
  CHECK(score({}, {"a"}).precision == 0);
  CHECK(score({}, {"a"}).f1 == 0);
}

TEST_CASE("score properties") {
  std::mt19937 rng(3);
  for (int t = 0; t < 500; ++t) {
    const auto a = random_set(rng), b = random_set(rng);
    const auto s = score(a, b);
    CHECK(s.recall >= 0);
    CHECK(s.recall <= 1);
    CHECK(s.precision >= 0);
    CHECK(s.precision <= 1);
    CHECK(s.f1 <= 2 * std::min(s.precision, s.recall) + 1e-12);
    CHECK(s.f1 >= std::min(s.precision, s.recall) - 1e-12);
    // Sets are order-free: inserting in reverse changes nothing.
    ItemSet ra(a.rbegin(), a.rend());
    CHECK(score(ra, b).f1 == s.f1);
  }
}

TEST_CASE("ground truth keys") {
  const auto s = summarize(small_graph());
  CHECK(ground_truth(s, QuestionType::kCategory) == ItemSet{"car", "road", "tree"});
  CHECK(ground_truth(s, QuestionType::kQuantity) == ItemSet{"car=2", "road=1", "tree=1"});
  CHECK(ground_truth(s, QuestionType::kRelationship) == ItemSet{"car|on|road", "tree|near|road"});
  CHECK(ground_truth(s, QuestionType::kLocation).count("tree@top-left") == 1);
  CHECK(parse_question_type("quantity") == QuestionType::kQuantity);
  CHECK_THROWS_AS(parse_question_type("colour"), Error);
}

TEST_CASE("claim extractor") {
  const ClaimExtractor x(categories(), predicates());
  CHECK(x.extract("There are 3 cars.", QuestionType::kQuantity) == ItemSet{"car=3"});
  CHECK(x.extract("There are three cars and one tree.", QuestionType::kQuantity) == ItemSet{"car=3", "tree=1"});
  CHECK(x.extract("", QuestionType::kCategory).empty());
  CHECK(x.extract("Nothing to report.", QuestionType::kRelationship).empty());
  CHECK(x.extract("A car is parked on the road; a tree is near the road.", QuestionType::kRelationship) ==
        ItemSet{"car|parked on|road", "tree|near|road"});
  CHECK(x.extract("The cars are at the top-left and bottom-right.", QuestionType::kLocation) ==
        ItemSet{"car@top-left", "car@bottom-right"});
  CHECK(x.extract("I see a parking lot and a traffic light.", QuestionType::kCategory) ==
        ItemSet{"parking lot", "traffic light"});
}

TEST_CASE("noiseless pipeline answers from clean structure") {
  MockLlm llm;
  HashEmbedder embedder;
  Clients clients{llm, embedder};
  PipelineConfig cfg;
  cfg.channel = {ChannelKind::kAwgn, kInf, 1};
  const ClaimExtractor x(categories(), predicates());
  const auto g = small_graph();
  const auto truth = summarize(g);
  for (auto q : all_question_types()) {
    const auto r = run_pipeline(g, default_question(q), vocab(), cfg, clients);
    CHECK(r.transmission.token_errors == 0);
    CHECK(r.transmission.received_text == r.transmission.sent_text);
    CHECK(score(x.extract(r.answered.answer, q), ground_truth(truth, q)).recall == 1);
  }
}

TEST_CASE("symbol count follows token count") {
  MockLlm llm;
  HashEmbedder embedder;
  for (auto scheme : {Scheme::kBpsk, Scheme::k4Qam, Scheme::k16Qam}) {
    PipelineConfig cfg;
    cfg.scheme = scheme;
    cfg.channel = {ChannelKind::kAwgn, 10, 5};
    const auto t = transmit(small_graph(), vocab(), cfg);
    CHECK(t.bits == t.tokens * 16);
    CHECK(t.symbols == (t.tokens * 16 + bits_per_symbol(scheme) - 1) / bits_per_symbol(scheme));
  }
}

TEST_CASE("deep noise corrupts most tokens") {
  PipelineConfig cfg;
  cfg.channel = {ChannelKind::kAwgn, -10, 9};
  std::size_t tokens = 0, errors = 0;
  const auto graphs = corpus();
  for (std::uint64_t i = 0; tokens < 10000; ++i) {
    cfg.channel.seed = derive_seed(9, i);
    const auto t = transmit(graphs[i % graphs.size()], vocab(), cfg);
    tokens += t.tokens;
    errors += t.token_errors;
  }
  CHECK(static_cast<double>(errors) / tokens > 0.5);
}

TEST_CASE("pipeline errors name the failing stage") {
  auto g = small_graph();
  g.objects.push_back({9, "car", {400, 400, 500, 500}});  // out of frame
  PipelineConfig cfg;
  try {
    transmit(g, vocab(), cfg);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage serialize") != std::string::npos);
  }
  cfg.token_width = 8;
  try {
    transmit(small_graph(), vocab(), cfg);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage tokenize") != std::string::npos);
  }
}

TEST_CASE("single cell sweep equals direct pipeline runs") {
  MockLlm llm;
  HashEmbedder embedder;
  Clients clients{llm, embedder};
  const ClaimExtractor x(categories(), predicates());
  const auto graphs = corpus();

  SweepConfig sc;
  sc.snrs_db = {6};
  sc.schemes = {Scheme::k4Qam};
  sc.channels = {ChannelKind::kRayleigh};
  sc.seed = 11;
  const auto report = snr_sweep(sc, graphs, vocab(), x, clients);
  REQUIRE(report.rows.size() == 4);
  REQUIRE(report.phy.size() == 1);

  PipelineConfig cfg;
  cfg.scheme = Scheme::k4Qam;
  const std::uint64_t cell = derive_seed(11, 0);
  std::size_t tokens = 0, errors = 0;
  std::uint64_t bits = 0, bit_errors = 0, symbols = 0;
  double recall = 0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    cfg.channel = {ChannelKind::kRayleigh, 6, derive_seed(cell, g)};
    const auto r = run_pipeline(graphs[g], default_question(QuestionType::kCategory), vocab(), cfg, clients);
    tokens += r.transmission.tokens;
    errors += r.transmission.token_errors;
    bits += r.transmission.bits;
    bit_errors += r.transmission.bit_errors;
    symbols += r.transmission.symbols;
    recall += score(x.extract(r.answered.answer, QuestionType::kCategory),
                    ground_truth(summarize(graphs[g]), QuestionType::kCategory))
                  .recall;
  }
  const auto& row = report.rows[0];
  CHECK(row.qtype == QuestionType::kCategory);
  CHECK(row.trials == graphs.size());
  CHECK(row.token_error_rate == doctest::Approx(static_cast<double>(errors) / tokens).epsilon(1e-12));
  CHECK(row.ber == doctest::Approx(static_cast<double>(bit_errors) / bits).epsilon(1e-12));
  CHECK(row.symbols == doctest::Approx(static_cast<double>(symbols) / graphs.size()));
  CHECK(row.recall == doctest::Approx(recall / graphs.size()).epsilon(1e-12));
  CHECK(report.phy[0].tokens == tokens);
}

TEST_CASE("sweep is monotone in snr and reproducible") {
  MockLlm llm;
  HashEmbedder embedder;
  Clients clients{llm, embedder};
  const ClaimExtractor x(categories(), predicates());
  SweepConfig sc;
  sc.snrs_db = {0, 6, 12, 18};
  sc.schemes = {Scheme::k16Qam};
  sc.channels = {ChannelKind::kAwgn};
  sc.min_tokens = 20000;
  sc.threads = 3;
  const auto graphs = corpus();
  const auto a = snr_sweep(sc, graphs, vocab(), x, clients);
  REQUIRE(a.phy.size() == 4);
  for (std::size_t i = 1; i < a.phy.size(); ++i) {
    CHECK(a.phy[i].token_error_rate <= a.phy[i - 1].token_error_rate);
    CHECK(a.phy[i].ber <= a.phy[i - 1].ber);
  }
  CHECK(a.phy[0].tokens >= 20000);

  sc.threads = 1;
  const auto b = snr_sweep(sc, graphs, vocab(), x, clients);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.phy_csv() == b.phy_csv());
  CHECK(a.to_csv().rfind("qtype,channel,scheme,snr_db,recall,f1,token_error_rate,ber,symbols,trials\n", 0) == 0);
  CHECK(a.svg(QuestionType::kCategory).find("<svg") != std::string::npos);
}

TEST_CASE("sweep records per-graph failures and continues") {
  MockLlm llm;
  HashEmbedder embedder;
  Clients clients{llm, embedder};
  const ClaimExtractor x(categories(), predicates());
  auto graphs = corpus();
  graphs[1].objects.push_back({99, "car", {-50, 0, 10, 10}});
  SweepConfig sc;
  sc.snrs_db = {12};
  sc.schemes = {Scheme::kBpsk};
  sc.channels = {ChannelKind::kAwgn};
  const auto r = snr_sweep(sc, graphs, vocab(), x, clients);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].find("graph 1") != std::string::npos);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].trials == 2);
}
