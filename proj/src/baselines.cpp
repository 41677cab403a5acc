#include "opensc/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <queue>

#include "opensc/error.hpp"

namespace opensc {

// ---------------------------------------------------------------------------
// 5-bit code

namespace {

const char* const kDigitNames[10] = {"zero", "one", "two",   "three", "four",
                                     "five", "six", "seven", "eight", "nine"};

void push_bits(BitStream& s, std::uint32_t value, unsigned count) {
  for (unsigned b = 0; b < count; ++b) s.bits.push_back((value >> b) & 1u);
}

}  // namespace

const std::array<char, 32>& FiveBitAlphabet::table() {
  static const std::array<char, 32> kTable = [] {
    std::array<char, 32> t{};
    for (int i = 0; i < 26; ++i) t[i] = static_cast<char>('a' + i);
    t[26] = ' ';
    t[27] = '.';
    t[28] = ',';
    t[29] = '-';
    t[30] = '\'';
    t[31] = '#';  // digit escape, never a literal
    return t;
  }();
  return kTable;
}

int FiveBitAlphabet::index_of(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  switch (c) {
    case ' ': return 26;
    case '.': return 27;
    case ',': return 28;
    case '-': return 29;
    case '\'': return 30;
    default: return -1;
  }
}

BitStream encode_5bit(std::string_view text) {
  BitStream out;
  out.width = FiveBitAlphabet::kBits;
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (c >= '0' && c <= '9') {
      push_bits(out, FiveBitAlphabet::kDigitEscape, FiveBitAlphabet::kBits);
      for (const char* p = kDigitNames[c - '0']; *p; ++p) {
        push_bits(out, static_cast<std::uint32_t>(FiveBitAlphabet::index_of(*p)), FiveBitAlphabet::kBits);
      }
      continue;
    }
    int idx = FiveBitAlphabet::index_of(c);
    if (idx < 0) idx = FiveBitAlphabet::index_of(' ');
    push_bits(out, static_cast<std::uint32_t>(idx), FiveBitAlphabet::kBits);
  }
  return out;
}

std::string decode_5bit(const BitStream& stream) {
  constexpr unsigned n = FiveBitAlphabet::kBits;
  if (stream.bits.size() % n != 0) throw validation_error("5-bit stream length not divisible by 5");
  std::vector<std::uint8_t> codes;
  for (std::size_t i = 0; i < stream.bits.size(); i += n) {
    std::uint8_t v = 0;
    for (unsigned b = 0; b < n; ++b) v |= static_cast<std::uint8_t>((stream.bits[i + b] & 1u) << b);
    codes.push_back(v);
  }
  const auto& table = FiveBitAlphabet::table();
  std::string out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] != FiveBitAlphabet::kDigitEscape) {
      out.push_back(table[codes[i]]);
      continue;
    }
    // Digit names are prefix-free, so at most one can match.
    for (int d = 0; d < 10; ++d) {
      const std::string_view name = kDigitNames[d];
      if (i + name.size() >= codes.size()) continue;
      bool match = true;
      for (std::size_t j = 0; j < name.size() && match; ++j) match = table[codes[i + 1 + j]] == name[j];
      if (match) {
        out.push_back(static_cast<char>('0' + d));
        i += name.size();
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Huffman

namespace {

struct HuffNode {
  std::uint64_t weight;
  std::size_t order;  // tie-break: leaves by character, then creation order
  int left = -1;
  int right = -1;
  unsigned char symbol = 0;
};

}  // namespace

HuffmanTable HuffmanTable::build(std::string_view corpus) {
  if (corpus.empty()) throw validation_error("empty Huffman corpus");
  std::map<unsigned char, std::uint64_t> freq;
  for (unsigned char c : corpus) ++freq[c];

  std::map<unsigned char, unsigned> lengths;
  if (freq.size() == 1) {
    lengths[freq.begin()->first] = 1;
    return from_lengths(lengths);
  }

  std::vector<HuffNode> nodes;
  for (const auto& [c, w] : freq) nodes.push_back({w, nodes.size(), -1, -1, c});
  auto cmp = [&](int a, int b) {
    if (nodes[a].weight != nodes[b].weight) return nodes[a].weight > nodes[b].weight;
    return nodes[a].order > nodes[b].order;
  };
  std::priority_queue<int, std::vector<int>, decltype(cmp)> heap(cmp);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) heap.push(i);
  while (heap.size() > 1) {
    const int a = heap.top();
    heap.pop();
    const int b = heap.top();
    heap.pop();
    nodes.push_back({nodes[a].weight + nodes[b].weight, nodes.size(), a, b, 0});
    heap.push(static_cast<int>(nodes.size() - 1));
  }

  std::vector<std::pair<int, unsigned>> stack{{heap.top(), 0u}};
  while (!stack.empty()) {
    auto [idx, depth] = stack.back();
    stack.pop_back();
    const auto& node = nodes[idx];
    if (node.left < 0) {
      lengths[node.symbol] = depth;
    } else {
      stack.emplace_back(node.left, depth + 1);
      stack.emplace_back(node.right, depth + 1);
    }
  }
  return from_lengths(lengths);
}

HuffmanTable HuffmanTable::from_lengths(const std::map<unsigned char, unsigned>& lengths) {
  std::vector<std::pair<unsigned, unsigned char>> order;
  for (const auto& [c, len] : lengths) {
    if (len == 0 || len > 32) throw validation_error("Huffman code length out of range");
    order.emplace_back(len, c);
  }
  std::sort(order.begin(), order.end());
  HuffmanTable t;
  std::uint64_t code = 0;
  unsigned prev = order.empty() ? 0 : order.front().first;
  for (const auto& [len, c] : order) {
    code <<= (len - prev);
    prev = len;
    if (code >> len) throw validation_error("code lengths violate the Kraft inequality");
    t.codes_[c] = {static_cast<std::uint32_t>(code), len};
    ++code;
  }
  return t;
}

std::map<unsigned char, unsigned> HuffmanTable::lengths() const {
  std::map<unsigned char, unsigned> out;
  for (const auto& [c, code] : codes_) out[c] = code.length;
  return out;
}

double HuffmanTable::expected_length(std::string_view text) const {
  if (text.empty()) return 0.0;
  double total = 0;
  for (unsigned char c : text) {
    auto it = codes_.find(c);
    if (it == codes_.end()) throw validation_error("character outside Huffman table");
    total += it->second.length;
  }
  return total / static_cast<double>(text.size());
}

BitStream huffman_encode(std::string_view text, const HuffmanTable& table) {
  BitStream out;
  out.width = 1;
  for (unsigned char c : text) {
    auto it = table.codes().find(c);
    if (it == table.codes().end()) {
      throw validation_error(std::string("character '") + static_cast<char>(c) + "' not in Huffman table");
    }
    const auto& code = it->second;
    for (unsigned b = code.length; b-- > 0;) out.bits.push_back((code.bits >> b) & 1u);
  }
  return out;
}

std::string huffman_decode(const BitStream& stream, const HuffmanTable& table) {
  std::map<std::pair<unsigned, std::uint32_t>, unsigned char> lookup;
  unsigned max_len = 0;
  for (const auto& [c, code] : table.codes()) {
    lookup[{code.length, code.bits}] = c;
    max_len = std::max(max_len, code.length);
  }
  std::string out;
  std::uint32_t acc = 0;
  unsigned len = 0;
  for (const auto bit : stream.bits) {
    acc = (acc << 1) | (bit & 1u);
    ++len;
    auto it = lookup.find({len, acc});
    if (it != lookup.end()) {
      out.push_back(static_cast<char>(it->second));
      acc = 0;
      len = 0;
    } else if (len >= max_len) {
      // Only reachable with a non-complete table; resynchronize.
      acc = 0;
      len = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GF(2^8) and Reed-Solomon

namespace {

struct Gf256 {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};

  Gf256() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= 0x11d;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
  }

  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    if (!a || !b) return 0;
    return exp[log[a] + log[b]];
  }
  std::uint8_t div(std::uint8_t a, std::uint8_t b) const {
    if (!b) throw std::domain_error("GF(256) division by zero");
    if (!a) return 0;
    return exp[(log[a] + 255 - log[b]) % 255];
  }
  std::uint8_t pow_alpha(int e) const { return exp[((e % 255) + 255) % 255]; }
  std::uint8_t inv(std::uint8_t a) const { return div(1, a); }
};

const Gf256& gf() {
  static const Gf256 field;
  return field;
}

// Coefficients highest degree first.
std::uint8_t poly_eval_desc(const std::vector<std::uint8_t>& p, std::uint8_t x) {
  const auto& f = gf();
  std::uint8_t y = 0;
  for (const auto c : p) y = static_cast<std::uint8_t>(f.mul(y, x) ^ c);
  return y;
}

// Coefficients lowest degree first.
std::uint8_t poly_eval_asc(const std::vector<std::uint8_t>& p, std::uint8_t x) {
  const auto& f = gf();
  std::uint8_t y = 0;
  for (std::size_t i = p.size(); i-- > 0;) y = static_cast<std::uint8_t>(f.mul(y, x) ^ p[i]);
  return y;
}

// g(x) = prod_{i<p} (x - alpha^i), highest degree first.
std::vector<std::uint8_t> generator_poly(unsigned parity) {
  const auto& f = gf();
  std::vector<std::uint8_t> g{1};
  for (unsigned i = 0; i < parity; ++i) {
    std::vector<std::uint8_t> next(g.size() + 1, 0);
    const std::uint8_t root = f.pow_alpha(static_cast<int>(i));
    for (std::size_t j = 0; j < g.size(); ++j) {
      next[j] ^= g[j];
      next[j + 1] ^= f.mul(g[j], root);
    }
    g = std::move(next);
  }
  return g;
}

std::vector<std::uint8_t> syndromes(const std::vector<std::uint8_t>& cw, unsigned parity) {
  std::vector<std::uint8_t> s(parity);
  for (unsigned j = 0; j < parity; ++j) s[j] = poly_eval_desc(cw, gf().pow_alpha(static_cast<int>(j)));
  return s;
}

bool all_zero(const std::vector<std::uint8_t>& v) {
  return std::all_of(v.begin(), v.end(), [](std::uint8_t x) { return x == 0; });
}

}  // namespace

void RSCode::validate() const {
  if (n == 0 || n > 255) throw validation_error("RS block length must be in 1..255");
  if (k == 0 || k >= n) throw validation_error("RS message length must satisfy 0 < k < n");
}

std::vector<std::uint8_t> rs_encode_block(const std::vector<std::uint8_t>& message, const RSCode& code) {
  code.validate();
  if (message.size() != code.k) throw validation_error("RS block message must be k bytes");
  const auto& f = gf();
  const auto g = generator_poly(code.parity());
  std::vector<std::uint8_t> work(message);
  work.resize(code.n, 0);
  for (unsigned i = 0; i < code.k; ++i) {
    const std::uint8_t coef = work[i];
    if (!coef) continue;
    for (std::size_t j = 1; j < g.size(); ++j) work[i + j] ^= f.mul(g[j], coef);
  }
  std::vector<std::uint8_t> cw(message);
  cw.insert(cw.end(), work.begin() + code.k, work.end());
  return cw;
}

BlockDecode rs_decode_block(const std::vector<std::uint8_t>& codeword, const RSCode& code) {
  code.validate();
  if (codeword.size() != code.n) throw validation_error("RS codeword must be n bytes");
  const auto& f = gf();
  const unsigned p = code.parity();
  BlockDecode out;
  out.codeword = codeword;

  const auto synd = syndromes(codeword, p);
  if (all_zero(synd)) return out;

  // Berlekamp-Massey; polynomials lowest degree first.
  std::vector<std::uint8_t> locator{1}, prev{1};
  unsigned errors = 0;
  unsigned shift = 1;
  std::uint8_t prev_disc = 1;
  for (unsigned r = 0; r < p; ++r) {
    std::uint8_t d = synd[r];
    for (unsigned i = 1; i <= errors && i < locator.size(); ++i) d ^= f.mul(locator[i], synd[r - i]);
    if (d == 0) {
      ++shift;
      continue;
    }
    const std::uint8_t scale = f.div(d, prev_disc);
    std::vector<std::uint8_t> next = locator;
    if (next.size() < prev.size() + shift) next.resize(prev.size() + shift, 0);
    for (std::size_t i = 0; i < prev.size(); ++i) next[i + shift] ^= f.mul(scale, prev[i]);
    if (2 * errors <= r) {
      prev = locator;
      errors = r + 1 - errors;
      prev_disc = d;
      shift = 1;
    } else {
      ++shift;
    }
    locator = std::move(next);
  }
  while (locator.size() > 1 && locator.back() == 0) locator.pop_back();

  auto fail = [&] {
    out.codeword = codeword;
    out.status = BlockStatus::kUncorrectable;
    return out;
  };
  if (errors > code.t() || locator.size() - 1 != errors) return fail();

  // Chien search over the positions a (possibly shortened) codeword has.
  std::vector<unsigned> degrees;
  for (unsigned e = 0; e < code.n; ++e) {
    if (poly_eval_asc(locator, f.pow_alpha(-static_cast<int>(e))) == 0) degrees.push_back(e);
  }
  if (degrees.size() != errors) return fail();

  // Forney: Omega = S * Lambda mod x^p; Y = X * Omega(X^-1) / Lambda'(X^-1).
  std::vector<std::uint8_t> omega(p, 0);
  for (unsigned i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < locator.size() && i + j < p; ++j) omega[i + j] ^= f.mul(synd[i], locator[j]);
  }
  std::vector<std::uint8_t> deriv(locator.size() > 1 ? locator.size() - 1 : 1, 0);
  for (std::size_t i = 1; i < locator.size(); i += 2) deriv[i - 1] = locator[i];

  for (const unsigned e : degrees) {
    const std::uint8_t x = f.pow_alpha(static_cast<int>(e));
    const std::uint8_t x_inv = f.inv(x);
    const std::uint8_t denom = poly_eval_asc(deriv, x_inv);
    if (!denom) return fail();
    const std::uint8_t magnitude = f.mul(x, f.div(poly_eval_asc(omega, x_inv), denom));
    out.codeword[code.n - 1 - e] ^= magnitude;
  }
  if (!all_zero(syndromes(out.codeword, p))) return fail();
  out.status = BlockStatus::kCorrected;
  out.errors = errors;
  return out;
}

std::vector<std::uint8_t> rs_encode(const std::vector<std::uint8_t>& message, const RSCode& code) {
  code.validate();
  const std::size_t framed = message.size() + 1;
  const std::size_t pad = (code.k - framed % code.k) % code.k;
  std::vector<std::uint8_t> frame;
  frame.reserve(framed + pad);
  frame.push_back(static_cast<std::uint8_t>(pad));
  frame.insert(frame.end(), message.begin(), message.end());
  frame.resize(framed + pad, 0);

  std::vector<std::uint8_t> out;
  out.reserve(frame.size() / code.k * code.n);
  std::vector<std::uint8_t> block(code.k);
  for (std::size_t i = 0; i < frame.size(); i += code.k) {
    std::copy(frame.begin() + i, frame.begin() + i + code.k, block.begin());
    const auto cw = rs_encode_block(block, code);
    out.insert(out.end(), cw.begin(), cw.end());
  }
  return out;
}

RSDecodeResult rs_decode(const std::vector<std::uint8_t>& data, const RSCode& code) {
  code.validate();
  if (data.size() % code.n != 0) throw validation_error("RS data is not a whole number of blocks");
  RSDecodeResult result;
  std::vector<std::uint8_t> frame;
  std::vector<std::uint8_t> block(code.n);
  for (std::size_t i = 0; i < data.size(); i += code.n) {
    std::copy(data.begin() + i, data.begin() + i + code.n, block.begin());
    const auto dec = rs_decode_block(block, code);
    if (dec.status == BlockStatus::kUncorrectable) result.uncorrectable_blocks.push_back(i / code.n);
    result.corrected_bytes += dec.errors;
    frame.insert(frame.end(), dec.codeword.begin(), dec.codeword.begin() + code.k);
  }
  if (frame.empty()) return result;
  const std::size_t pad = std::min<std::size_t>(frame[0], frame.size() - 1);
  result.message.assign(frame.begin() + 1, frame.end() - static_cast<std::ptrdiff_t>(pad));
  return result;
}

// ---------------------------------------------------------------------------
// Framing and accounting

std::vector<std::uint8_t> pack_bits(const BitStream& stream) {
  std::vector<std::uint8_t> out((stream.bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < stream.bits.size(); ++i) {
    out[i / 8] |= static_cast<std::uint8_t>((stream.bits[i] & 1u) << (i % 8));
  }
  return out;
}

BitStream unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t bit_count, unsigned width) {
  BitStream out;
  out.width = width;
  bit_count = std::min(bit_count, bytes.size() * 8);
  out.bits.reserve(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) out.bits.push_back((bytes[i / 8] >> (i % 8)) & 1u);
  return out;
}

std::vector<std::uint8_t> frame_payload(const BitStream& payload, const RSCode& code) {
  const auto count = static_cast<std::uint32_t>(payload.bits.size());
  std::vector<std::uint8_t> bytes{static_cast<std::uint8_t>(count), static_cast<std::uint8_t>(count >> 8),
                                  static_cast<std::uint8_t>(count >> 16), static_cast<std::uint8_t>(count >> 24)};
  const auto packed = pack_bits(payload);
  bytes.insert(bytes.end(), packed.begin(), packed.end());
  return rs_encode(bytes, code);
}

UnframedPayload unframe_payload(const std::vector<std::uint8_t>& coded, const RSCode& code,
                                unsigned width) {
  UnframedPayload out;
  out.rs = rs_decode(coded, code);
  out.payload.width = width;
  const auto& m = out.rs.message;
  if (m.size() < 4) return out;
  std::size_t count = static_cast<std::size_t>(m[0]) | (static_cast<std::size_t>(m[1]) << 8) |
                      (static_cast<std::size_t>(m[2]) << 16) | (static_cast<std::size_t>(m[3]) << 24);
  count = std::min(count, (m.size() - 4) * 8);
  if (width > 1) count -= count % width;
  out.payload = unpack_bits(std::vector<std::uint8_t>(m.begin() + 4, m.end()), count, width);
  return out;
}

std::uint64_t count_symbols(std::uint64_t bits, unsigned bits_per_symbol) {
  if (bits_per_symbol != 1 && bits_per_symbol != 2 && bits_per_symbol != 4) {
    throw validation_error("bits per symbol must be 1, 2 or 4");
  }
  return (bits + bits_per_symbol - 1) / bits_per_symbol;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kOpenSC: return "OpenSC";
    case Method::kFiveBitRs: return "5bit+RS";
    case Method::kHuffmanRs: return "Huffman+RS";
  }
  return "?";
}

SymbolCount count_opensc(std::size_t tokens, unsigned token_width, unsigned bits_per_symbol) {
  const std::uint64_t bits = static_cast<std::uint64_t>(tokens) * token_width;
  return {Method::kOpenSC, bits, bits_per_symbol, count_symbols(bits, bits_per_symbol)};
}

SymbolCount count_five_bit_rs(std::string_view text, const RSCode& code, unsigned bits_per_symbol) {
  const std::uint64_t bits = frame_payload(encode_5bit(text), code).size() * 8;
  return {Method::kFiveBitRs, bits, bits_per_symbol, count_symbols(bits, bits_per_symbol)};
}

SymbolCount count_huffman_rs(std::string_view text, const HuffmanTable& table, const RSCode& code,
                             unsigned bits_per_symbol) {
  const std::uint64_t bits = frame_payload(huffman_encode(text, table), code).size() * 8;
  return {Method::kHuffmanRs, bits, bits_per_symbol, count_symbols(bits, bits_per_symbol)};
}

}  // namespace opensc
