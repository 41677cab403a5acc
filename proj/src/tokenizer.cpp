#include "opensc/tokenizer.hpp"

#include <cstring>
#include <cctype>
#include <fstream>

#include "opensc/error.hpp"

namespace opensc {

namespace {

// Longer words are mapped straight to unknown, as in the reference BERT
// tokenizer.
constexpr std::size_t kMaxWordChars = 100;

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary::Vocabulary(std::vector<std::string> entries, std::string unk_token,
                       std::string continuation_prefix)
    : entries_(std::move(entries)), prefix_(std::move(continuation_prefix)) {
  if (entries_.empty()) throw validation_error("empty vocabulary");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i], static_cast<TokenId>(i)).second) {
      throw validation_error("duplicate vocabulary entry '" + entries_[i] + "'",
                             "line " + std::to_string(i + 1));
    }
    h = fnv1a64(entries_[i], h);
    h = fnv1a64("\n", h);
  }
  hash_ = h;
  auto it = index_.find(unk_token);
  if (it == index_.end()) throw validation_error("vocabulary lacks unknown token " + unk_token);
  unk_id_ = it->second;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open vocabulary", path);
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(line);
  }
  return Vocabulary(std::move(entries));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= entries_.size()) throw validation_error("token id " + std::to_string(id) + " out of range");
  return entries_[id];
}

TokenId Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? static_cast<TokenId>(entries_.size()) : it->second;
}

void Vocabulary::check_width(unsigned token_width) const {
  if (token_width == 0 || token_width > 32) throw validation_error("token width must be in 1..32");
  if (token_width < 32 && entries_.size() > (std::size_t{1} << token_width)) {
    throw validation_error("vocabulary of " + std::to_string(entries_.size()) +
                           " entries does not fit in " + std::to_string(token_width) + " bits");
  }
}

std::vector<std::string> basic_split(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

std::vector<TokenId> wordpiece_word(std::string_view word, const Vocabulary& vocab) {
  if (word.size() > kMaxWordChars) return {vocab.unk_id()};
  std::vector<TokenId> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::size_t end = word.size();
    TokenId match = static_cast<TokenId>(vocab.size());
    while (start < end) {
      candidate.assign(start > 0 ? vocab.continuation_prefix() : std::string());
      candidate.append(word.substr(start, end - start));
      match = vocab.find(candidate);
      if (match != vocab.size()) break;
      --end;
    }
    if (match == vocab.size()) return {vocab.unk_id()};
    pieces.push_back(match);
    start = end;
  }
  return pieces;
}

TokenFrame wordpiece_tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenFrame frame;
  frame.vocab_hash = vocab.hash();
  for (const auto& word : basic_split(text)) {
    const auto pieces = wordpiece_word(word, vocab);
    frame.ids.insert(frame.ids.end(), pieces.begin(), pieces.end());
  }
  return frame;
}

std::string detokenize(const TokenFrame& frame, const Vocabulary& vocab) {
  std::string out;
  const auto& prefix = vocab.continuation_prefix();
  for (const TokenId id : frame.ids) {
    const std::string& tok = vocab.token(id);
    if (!out.empty() && !prefix.empty() && tok.size() > prefix.size() &&
        tok.compare(0, prefix.size(), prefix) == 0) {
      out.append(tok, prefix.size());
      continue;
    }
    // Punctuation hugs the previous word; a hyphen joins both sides.
    const bool attach = tok.size() == 1 && std::strchr(",.;:!?)-'", tok[0]) != nullptr;
    if (!out.empty() && !attach && out.back() != '-' && out.back() != '(') out.push_back(' ');
    out += tok;
  }
  return out;
}

BitStream ids_to_bits(const TokenFrame& frame, unsigned token_width) {
  if (token_width == 0 || token_width > 32) throw validation_error("token width must be in 1..32");
  BitStream stream;
  stream.width = token_width;
  stream.bits.reserve(frame.ids.size() * token_width);
  for (const TokenId id : frame.ids) {
    if (token_width < 32 && (id >> token_width) != 0) {
      throw validation_error("token id " + std::to_string(id) + " needs more than " +
                             std::to_string(token_width) + " bits");
    }
    for (unsigned b = 0; b < token_width; ++b) stream.bits.push_back((id >> b) & 1u);
  }
  return stream;
}

DecodedFrame bits_to_ids(const BitStream& stream, const Vocabulary& vocab) {
  if (stream.width == 0 || stream.width > 32) throw validation_error("token width must be in 1..32");
  if (stream.bits.size() % stream.width != 0) {
    throw validation_error("bit count " + std::to_string(stream.bits.size()) +
                           " not divisible by token width " + std::to_string(stream.width));
  }
  DecodedFrame out;
  out.frame.vocab_hash = vocab.hash();
  out.frame.ids.reserve(stream.bits.size() / stream.width);
  for (std::size_t i = 0; i < stream.bits.size(); i += stream.width) {
    std::uint64_t id = 0;
    for (unsigned b = 0; b < stream.width; ++b) id |= std::uint64_t{stream.bits[i + b] & 1u} << b;
    if (id >= vocab.size()) {
      ++out.corrupted;
      id = vocab.unk_id();
    }
    out.frame.ids.push_back(static_cast<TokenId>(id));
  }
  return out;
}

}  // namespace opensc
