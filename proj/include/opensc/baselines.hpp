#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "opensc/tokenizer.hpp"

namespace opensc {

// ---------------------------------------------------------------------------
// Fixed-length 5-bit text code.
//
// 32 entries: a-z, space, period, comma, hyphen, apostrophe and a digit
// escape. A digit d is sent as the escape followed by its English name
// ("3" -> escape + "three"). Uppercase letters fold to lowercase; any other
// character becomes a space.

class FiveBitAlphabet {
 public:
  static constexpr unsigned kBits = 5;
  static constexpr std::uint8_t kDigitEscape = 31;

  static const std::array<char, 32>& table();
  // Index of an alphabet character, or -1.
  static int index_of(char c);
};

BitStream encode_5bit(std::string_view text);
std::string decode_5bit(const BitStream& stream);

// ---------------------------------------------------------------------------
// Canonical character-level Huffman code.

class HuffmanTable {
 public:
  struct Code {
    std::uint32_t bits = 0;  // MSB is sent first
    unsigned length = 0;
  };

  // Builds from character frequencies of `corpus`. A corpus with a single
  // distinct character gets a 1-bit code.
  static HuffmanTable build(std::string_view corpus);
  // Canonical codes from code lengths alone.
  static HuffmanTable from_lengths(const std::map<unsigned char, unsigned>& lengths);

  const std::map<unsigned char, Code>& codes() const { return codes_; }
  std::map<unsigned char, unsigned> lengths() const;
  bool contains(unsigned char c) const { return codes_.count(c) != 0; }
  // Mean code length weighted by the character frequencies of `text`.
  double expected_length(std::string_view text) const;

 private:
  std::map<unsigned char, Code> codes_;
};

BitStream huffman_encode(std::string_view text, const HuffmanTable& table);
// Trailing bits that do not complete a codeword are ignored.
std::string huffman_decode(const BitStream& stream, const HuffmanTable& table);

// ---------------------------------------------------------------------------
// Reed-Solomon over GF(2^8), primitive polynomial x^8+x^4+x^3+x^2+1,
// generator roots alpha^0 .. alpha^(n-k-1). Codes shorter than 255 are
// shortened codes.

struct RSCode {
  unsigned n = 255;
  unsigned k = 223;

  unsigned parity() const { return n - k; }
  unsigned t() const { return (n - k) / 2; }
  void validate() const;
};

enum class BlockStatus { kClean, kCorrected, kUncorrectable };

struct BlockDecode {
  std::vector<std::uint8_t> codeword;  // corrected when status != kUncorrectable
  BlockStatus status = BlockStatus::kClean;
  unsigned errors = 0;
};

// Systematic codeword: message (k bytes) followed by n-k parity bytes.
std::vector<std::uint8_t> rs_encode_block(const std::vector<std::uint8_t>& message, const RSCode& code);
BlockDecode rs_decode_block(const std::vector<std::uint8_t>& codeword, const RSCode& code);

struct RSDecodeResult {
  std::vector<std::uint8_t> message;
  std::size_t corrected_bytes = 0;
  std::vector<std::size_t> uncorrectable_blocks;
};

// Frames [pad length byte][message][zero pad] into k-byte blocks and encodes
// each. The output length is a multiple of n.
std::vector<std::uint8_t> rs_encode(const std::vector<std::uint8_t>& message, const RSCode& code);
// Uncorrectable blocks pass through uncorrected and are listed in the result.
RSDecodeResult rs_decode(const std::vector<std::uint8_t>& data, const RSCode& code);

// ---------------------------------------------------------------------------
// Text-over-RS baseline chains and symbol accounting.

// LSB-first packing, zero padded to whole bytes.
std::vector<std::uint8_t> pack_bits(const BitStream& stream);
BitStream unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t bit_count, unsigned width);

// Payload bits prefixed with a 32-bit little-endian bit count, then RS framed.
std::vector<std::uint8_t> frame_payload(const BitStream& payload, const RSCode& code);
struct UnframedPayload {
  BitStream payload;
  RSDecodeResult rs;
};
UnframedPayload unframe_payload(const std::vector<std::uint8_t>& coded, const RSCode& code,
                                unsigned width);

std::uint64_t count_symbols(std::uint64_t bits, unsigned bits_per_symbol);

enum class Method { kOpenSC, kFiveBitRs, kHuffmanRs };
std::string to_string(Method m);

struct SymbolCount {
  Method method;
  std::uint64_t bits = 0;
  unsigned bits_per_symbol = 0;
  std::uint64_t symbols = 0;
};

SymbolCount count_opensc(std::size_t tokens, unsigned token_width, unsigned bits_per_symbol);
SymbolCount count_five_bit_rs(std::string_view text, const RSCode& code, unsigned bits_per_symbol);
SymbolCount count_huffman_rs(std::string_view text, const HuffmanTable& table, const RSCode& code,
                             unsigned bits_per_symbol);

}  // namespace opensc
