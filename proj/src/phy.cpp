#include "opensc/phy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "opensc/error.hpp"

namespace opensc {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
const double kInvSqrt10 = 1.0 / std::sqrt(10.0);

// 4-PAM Gray levels indexed by the two-bit value (first bit | second bit << 1):
// 00 -> -3, 10 -> +3, 01 -> -1, 11 -> +1 (pairs written first,second).
constexpr double kPam4[4] = {-3.0, 3.0, -1.0, 1.0};

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kBpsk: return "BPSK";
    case Scheme::k4Qam: return "4QAM";
    case Scheme::k16Qam: return "16QAM";
  }
  return "?";
}

std::string to_string(ChannelKind c) { return c == ChannelKind::kAwgn ? "AWGN" : "Rayleigh"; }

namespace {
std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace

Scheme parse_scheme(std::string_view name) {
  const auto u = upper(name);
  if (u == "BPSK") return Scheme::kBpsk;
  if (u == "4QAM" || u == "QPSK") return Scheme::k4Qam;
  if (u == "16QAM") return Scheme::k16Qam;
  throw validation_error("unknown modulation scheme '" + std::string(name) + "'");
}

ChannelKind parse_channel(std::string_view name) {
  const auto u = upper(name);
  if (u == "AWGN") return ChannelKind::kAwgn;
  if (u == "RAYLEIGH") return ChannelKind::kRayleigh;
  throw validation_error("unknown channel '" + std::string(name) + "'");
}

unsigned bits_per_symbol(Scheme s) {
  switch (s) {
    case Scheme::kBpsk: return 1;
    case Scheme::k4Qam: return 2;
    case Scheme::k16Qam: return 4;
  }
  return 0;
}

Constellation::Constellation(Scheme scheme) : scheme_(scheme), bits_(opensc::bits_per_symbol(scheme)) {
  switch (scheme) {
    case Scheme::kBpsk:
      points_ = {Complex(-1, 0), Complex(1, 0)};
      break;
    case Scheme::k4Qam:
      // b0 drives I, b1 drives Q; 0 -> negative.
      for (unsigned d = 0; d < 4; ++d) {
        points_.emplace_back(((d & 1) ? 1.0 : -1.0) * kInvSqrt2, ((d & 2) ? 1.0 : -1.0) * kInvSqrt2);
      }
      break;
    case Scheme::k16Qam:
      // (b0, b1) -> I level, (b2, b3) -> Q level.
      for (unsigned d = 0; d < 16; ++d) {
        points_.emplace_back(kPam4[d & 3] * kInvSqrt10, kPam4[(d >> 2) & 3] * kInvSqrt10);
      }
      break;
  }
}

double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

SymbolBlock modulate(const BitStream& stream, const Constellation& c) {
  const unsigned n = c.bits_per_symbol();
  if (stream.bits.size() % n != 0) {
    throw validation_error("bit count " + std::to_string(stream.bits.size()) +
                           " not divisible by bits per symbol " + std::to_string(n));
  }
  SymbolBlock out;
  out.symbols.reserve(stream.bits.size() / n);
  for (std::size_t i = 0; i < stream.bits.size(); i += n) {
    unsigned d = 0;
    for (unsigned b = 0; b < n; ++b) d |= static_cast<unsigned>(stream.bits[i + b] & 1u) << b;
    out.symbols.push_back(c.points()[d]);
  }
  return out;
}

ChannelRealization apply_channel(const SymbolBlock& x, const ChannelConfig& cfg) {
  ChannelRealization r;
  r.noise_var = noise_variance(cfg.snr_db);
  if (std::isnan(r.noise_var)) throw validation_error("snr_db is NaN");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_scale = std::sqrt(r.noise_var / 2);
  r.h.reserve(x.symbols.size());
  r.received.reserve(x.symbols.size());
  for (const Complex& s : x.symbols) {
    Complex h(1.0, 0.0);
    if (cfg.kind == ChannelKind::kRayleigh) {
      const double re = normal(rng);
      const double im = normal(rng);
      h = Complex(re * kInvSqrt2, im * kInvSqrt2);
    }
    const double nr = normal(rng);
    const double ni = normal(rng);
    Complex y = h * s;
    if (noise_scale > 0) y += Complex(nr * noise_scale, ni * noise_scale);
    r.h.push_back(h);
    r.received.push_back(y);
  }
  return r;
}

SymbolBlock lmmse_equalize(const ChannelRealization& r, double signal_var) {
  if (r.h.size() != r.received.size()) throw validation_error("CSI length mismatch");
  if (!(signal_var > 0)) throw validation_error("signal variance must be positive");
  const double rho = r.noise_var / signal_var;
  SymbolBlock out;
  out.symbols.reserve(r.received.size());
  for (std::size_t i = 0; i < r.received.size(); ++i) {
    const Complex h = r.h[i];
    const double denom = std::norm(h) + rho;
    out.symbols.push_back(denom > 0 ? std::conj(h) * r.received[i] / denom : Complex(0, 0));
  }
  return out;
}

double log_likelihood(Complex y, Complex x, double noise_var) {
  constexpr double kTwoPi = 6.283185307179586;
  return -0.5 * std::norm(y - x) / noise_var - 0.5 * std::log(kTwoPi * noise_var);
}

std::size_t ml_decide(Complex y, const Constellation& c) {
  const auto& pts = c.points();
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dist = std::norm(y - pts[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

BitStream ml_demodulate(const SymbolBlock& y, const Constellation& c, double /*noise_var*/,
                        unsigned stream_width) {
  // The log-likelihood is a decreasing function of |y - x|^2 for any noise
  // variance, so the decision never needs it.
  const unsigned n = c.bits_per_symbol();
  BitStream out;
  out.width = stream_width;
  out.bits.reserve(y.symbols.size() * n);
  for (const Complex& s : y.symbols) {
    const auto d = ml_decide(s, c);
    for (unsigned b = 0; b < n; ++b) out.bits.push_back((d >> b) & 1u);
  }
  return out;
}

double measure_ber(const BitStream& sent, const BitStream& recovered) {
  if (sent.bits.size() != recovered.bits.size()) throw validation_error("bit stream length mismatch");
  if (sent.bits.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < sent.bits.size(); ++i) diff += (sent.bits[i] != recovered.bits[i]);
  return static_cast<double>(diff) / static_cast<double>(sent.bits.size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the combined state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kBlockSymbols = 1 << 16;

LinkStats simulate_block(const Constellation& c, ChannelKind channel, double snr_db,
                         std::uint64_t symbols, std::uint64_t seed, Detection detection) {
  const unsigned n = c.bits_per_symbol();
  std::mt19937_64 rng(seed);
  BitStream sent;
  sent.bits.resize(symbols * n);
  std::uint64_t word = 0;
  int left = 0;
  for (auto& b : sent.bits) {
    if (left == 0) {
      word = rng();
      left = 64;
    }
    b = word & 1u;
    word >>= 1;
    --left;
  }
  const auto x = modulate(sent, c);
  const auto r = apply_channel(x, {channel, snr_db, rng()});
  const auto y = detection == Detection::kLmmse ? lmmse_equalize(r) : SymbolBlock{r.received};
  const auto got = ml_demodulate(y, c, r.noise_var);

  LinkStats s;
  s.bits = sent.bits.size();
  s.symbols = symbols;
  for (std::uint64_t i = 0; i < symbols; ++i) {
    bool wrong = false;
    for (unsigned b = 0; b < n; ++b) {
      if (sent.bits[i * n + b] != got.bits[i * n + b]) {
        ++s.bit_errors;
        wrong = true;
      }
    }
    s.symbol_errors += wrong;
  }
  return s;
}

}  // namespace

LinkStats simulate_link(Scheme scheme, ChannelKind channel, double snr_db, std::uint64_t symbols,
                        std::uint64_t seed, Detection detection, unsigned threads) {
  const Constellation c(scheme);
  const std::uint64_t blocks = (symbols + kBlockSymbols - 1) / kBlockSymbols;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(blocks, 1)));

  std::vector<LinkStats> partial(blocks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      const std::uint64_t len = std::min(kBlockSymbols, symbols - b * kBlockSymbols);
      partial[b] = simulate_block(c, channel, snr_db, len, derive_seed(seed, b), detection);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  LinkStats total;
  for (const auto& p : partial) {
    total.bits += p.bits;
    total.bit_errors += p.bit_errors;
    total.symbols += p.symbols;
    total.symbol_errors += p.symbol_errors;
  }
  return total;
}

}  // namespace opensc
