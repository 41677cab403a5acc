#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opensc {

using TokenId = std::uint32_t;

// Bits per token ID on the wire.
inline constexpr unsigned kDefaultTokenWidth = 16;

class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> entries, std::string unk_token = "[UNK]",
             std::string continuation_prefix = "##");

  // One token per line; line number is the token ID.
  static Vocabulary load(const std::string& path);

  std::size_t size() const { return entries_.size(); }
  TokenId unk_id() const { return unk_id_; }
  const std::string& continuation_prefix() const { return prefix_; }
  const std::string& token(TokenId id) const;
  // Returns size() when absent.
  TokenId find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != size(); }
  std::uint64_t hash() const { return hash_; }
  const std::vector<std::string>& entries() const { return entries_; }

  // Throws unless every ID fits in `token_width` bits.
  void check_width(unsigned token_width) const;

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> index_;
  std::string prefix_;
  TokenId unk_id_ = 0;
  std::uint64_t hash_ = 0;
};

struct TokenFrame {
  std::vector<TokenId> ids;
  std::uint64_t vocab_hash = 0;

  bool operator==(const TokenFrame&) const = default;
};

struct BitStream {
  std::vector<std::uint8_t> bits;  // each element is 0 or 1
  unsigned width = 1;              // bits per token (or per character for codecs)

  std::size_t size() const { return bits.size(); }
  bool operator==(const BitStream&) const = default;
};

// Lowercases, then splits on whitespace and around ASCII punctuation.
std::vector<std::string> basic_split(std::string_view text);

TokenFrame wordpiece_tokenize(std::string_view text, const Vocabulary& vocab);

// Greedy longest-match pieces for one already-normalized word; a word with an
// unmatchable remainder yields the single unknown token.
std::vector<TokenId> wordpiece_word(std::string_view word, const Vocabulary& vocab);

std::string detokenize(const TokenFrame& frame, const Vocabulary& vocab);

// Each ID as `token_width` bits, least significant first.
BitStream ids_to_bits(const TokenFrame& frame, unsigned token_width);

struct DecodedFrame {
  TokenFrame frame;
  std::size_t corrupted = 0;  // IDs beyond the vocabulary replaced by unk
};

DecodedFrame bits_to_ids(const BitStream& stream, const Vocabulary& vocab);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace opensc
