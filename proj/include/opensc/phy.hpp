#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opensc/tokenizer.hpp"

namespace opensc {

using Complex = std::complex<double>;

enum class Scheme { kBpsk, k4Qam, k16Qam };
enum class ChannelKind { kAwgn, kRayleigh };

std::string to_string(Scheme s);
std::string to_string(ChannelKind c);
Scheme parse_scheme(std::string_view name);
ChannelKind parse_channel(std::string_view name);
unsigned bits_per_symbol(Scheme s);

// Gray-mapped, unit average energy constellation. points()[d] is the point
// for the n-bit pattern whose LSB-first value is d.
class Constellation {
 public:
  explicit Constellation(Scheme scheme);

  Scheme scheme() const { return scheme_; }
  unsigned bits_per_symbol() const { return bits_; }
  const std::vector<Complex>& points() const { return points_; }

 private:
  Scheme scheme_;
  unsigned bits_;
  std::vector<Complex> points_;
};

struct SymbolBlock {
  std::vector<Complex> symbols;
};

struct ChannelConfig {
  ChannelKind kind = ChannelKind::kAwgn;
  // Es/N0 per complex symbol in dB; +inf gives a noiseless channel.
  double snr_db = 0;
  std::uint64_t seed = 0;
};

struct ChannelRealization {
  std::vector<Complex> h;  // CSI, all ones for AWGN
  std::vector<Complex> received;
  double noise_var = 0;
};

double noise_variance(double snr_db);

SymbolBlock modulate(const BitStream& stream, const Constellation& c);

ChannelRealization apply_channel(const SymbolBlock& x, const ChannelConfig& cfg);

// Per-symbol conj(h) y / (|h|^2 + noise_var / signal_var).
SymbolBlock lmmse_equalize(const ChannelRealization& r, double signal_var = 1.0);

// log P(y | x) under circular complex Gaussian noise of variance noise_var.
double log_likelihood(Complex y, Complex x, double noise_var);

// Nearest constellation point (the ML decision); ties go to the lowest index.
std::size_t ml_decide(Complex y, const Constellation& c);

BitStream ml_demodulate(const SymbolBlock& y, const Constellation& c, double noise_var,
                        unsigned stream_width = 1);

double measure_ber(const BitStream& sent, const BitStream& recovered);

// Derives an independent 64-bit seed for substream `index`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Uncoded Monte-Carlo link simulation over random bits.
struct LinkStats {
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t symbols = 0;
  std::uint64_t symbol_errors = 0;

  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
  double ser() const { return symbols ? static_cast<double>(symbol_errors) / symbols : 0.0; }
};

enum class Detection { kRaw, kLmmse };

LinkStats simulate_link(Scheme scheme, ChannelKind channel, double snr_db, std::uint64_t symbols,
                        std::uint64_t seed, Detection detection, unsigned threads = 0);

}  // namespace opensc
