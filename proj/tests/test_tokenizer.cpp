#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "opensc/error.hpp"
#include "opensc/tokenizer.hpp"
#include "oracles.hpp"

using namespace opensc;

namespace {

Vocabulary small_vocab() { return Vocabulary({"[PAD]", "[UNK]", "un", "##able", "able", "car", "##s", "on", ";"}); }

std::vector<std::string> pieces(const std::vector<TokenId>& ids, const Vocabulary& v) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(v.token(id));
  return out;
}

}  // namespace

TEST_CASE("vocabulary construction") {
  const auto v = small_vocab();
  CHECK(v.size() == 9);
  CHECK(v.unk_id() == 1);
  CHECK(v.find("car") == 5);
  CHECK(v.find("bus") == v.size());
  CHECK_THROWS_AS(Vocabulary({}), Error);
  CHECK_THROWS_AS(Vocabulary({"[UNK]", "a", "a"}), Error);
  CHECK_THROWS_AS(Vocabulary({"a", "b"}), Error);
  CHECK_NOTHROW(v.check_width(4));
  CHECK_THROWS_AS(v.check_width(3), Error);
  CHECK(small_vocab().hash() == v.hash());
  CHECK(Vocabulary({"[UNK]", "b"}).hash() != Vocabulary({"[UNK]", "c"}).hash());
  CHECK_THROWS_AS(Vocabulary::load("/nonexistent/vocab.txt"), Error);
}

TEST_CASE("canonical wordpiece splits") {
  const auto v = small_vocab();
  CHECK(pieces(wordpiece_tokenize("unable", v).ids, v) == std::vector<std::string>{"un", "##able"});
  CHECK(pieces(wordpiece_tokenize("able", v).ids, v) == std::vector<std::string>{"able"});
  CHECK(pieces(wordpiece_tokenize("Cars ON;", v).ids, v) == std::vector<std::string>{"car", "##s", "on", ";"});
  CHECK(wordpiece_tokenize("unx", v).ids == std::vector<TokenId>{v.unk_id()});
  CHECK(wordpiece_tokenize("", v).ids.empty());
  CHECK(wordpiece_tokenize("car", v).vocab_hash == v.hash());
  CHECK(wordpiece_word(std::string(101, 'a'), v) == std::vector<TokenId>{v.unk_id()});
}

TEST_CASE("basic split") {
  CHECK(basic_split("  Top-Left, car\tON ") ==
        std::vector<std::string>{"top", "-", "left", ",", "car", "on"});
}

TEST_CASE("wordpiece matches exhaustive oracle") {
  std::mt19937 rng(99);
  const std::string alphabet = "abcde";
  std::vector<std::string> entries = {"[UNK]"};
  std::set<std::string> seen(entries.begin(), entries.end());
  while (entries.size() < 50) {
    std::string piece;
    const int len = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < len; ++i) piece += alphabet[rng() % alphabet.size()];
    if (rng() % 2) piece = "##" + piece;
    if (seen.insert(piece).second) entries.push_back(piece);
  }
  const Vocabulary v(entries);
  for (int w = 0; w < 200; ++w) {
    std::string word;
    const int len = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < len; ++i) word += alphabet[rng() % alphabet.size()];
    CHECK(pieces(wordpiece_word(word, v), v) == oracle::wordpiece(word, entries));
  }
}

TEST_CASE("detokenize") {
  const auto v = small_vocab();
  CHECK(detokenize({{2, 3}, v.hash()}, v) == "unable");
  CHECK(detokenize({{}, v.hash()}, v).empty());
  CHECK(detokenize({{5, 6, 7, 5}, v.hash()}, v) == "cars on car");
  CHECK_THROWS_AS(detokenize({{42}, v.hash()}, v), Error);

  // Round trip over generated texts of in-vocabulary words.
  const std::vector<std::string> words = {"unable", "able", "car", "cars", "on"};
  std::mt19937 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::string text;
    const int n = static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) text += (i ? " " : "") + words[rng() % words.size()];
    CHECK(detokenize(wordpiece_tokenize(text, v), v) == text);
  }
}

TEST_CASE("ids to bits") {
  const auto one = ids_to_bits({{1}, 0}, 4);
  CHECK(one.bits == std::vector<std::uint8_t>{1, 0, 0, 0});
  CHECK(one.width == 4);
  CHECK(ids_to_bits({{0}, 0}, 16).bits == std::vector<std::uint8_t>(16, 0));
  CHECK(ids_to_bits({{6, 9}, 0}, 4).bits == std::vector<std::uint8_t>{0, 1, 1, 0, 1, 0, 0, 1});
  CHECK_THROWS_AS(ids_to_bits({{16}, 0}, 4), Error);
}

TEST_CASE("bits to ids inverts and maps out-of-range ids to unk") {
  std::vector<std::string> entries = {"[UNK]"};
  for (int i = 1; i < 3000; ++i) entries.push_back("t" + std::to_string(i));
  const Vocabulary v(entries);
  std::mt19937 rng(1);
  TokenFrame f{{}, v.hash()};
  for (int i = 0; i < 1000; ++i) f.ids.push_back(rng() % v.size());
  const auto back = bits_to_ids(ids_to_bits(f, 16), v);
  CHECK(back.frame == f);
  CHECK(back.corrupted == 0);

  const auto bad = bits_to_ids(ids_to_bits({{static_cast<TokenId>(v.size() + 5)}, 0}, 16), v);
  CHECK(bad.frame.ids == std::vector<TokenId>{v.unk_id()});
  CHECK(bad.corrupted == 1);

  BitStream odd{{1, 0, 1}, 2};
  CHECK_THROWS_AS(bits_to_ids(odd, v), Error);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
