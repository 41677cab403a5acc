#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "opensc/error.hpp"
#include "opensc/eval.hpp"

namespace opensc {

std::string to_string(DetectionMode d) {
  switch (d) {
    case DetectionMode::kAuto: return "auto";
    case DetectionMode::kRaw: return "raw";
    case DetectionMode::kLmmse: return "lmmse";
  }
  return "?";
}

DetectionMode parse_detection(std::string_view name) {
  if (name == "auto") return DetectionMode::kAuto;
  if (name == "raw" || name == "none") return DetectionMode::kRaw;
  if (name == "lmmse") return DetectionMode::kLmmse;
  throw validation_error("unknown detection mode '" + std::string(name) + "'");
}

namespace {

// Runs one stage, tagging any failure with the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), e.what(), std::string("stage ") + name);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kRuntime, e.what(), std::string("stage ") + name);
  }
}

}  // namespace

Transmission transmit(const SceneGraph& graph, const Vocabulary& vocab, const PipelineConfig& cfg) {
  const Constellation constellation(cfg.scheme);
  const unsigned n = constellation.bits_per_symbol();
  if (cfg.token_width % n != 0) {
    throw validation_error("token width " + std::to_string(cfg.token_width) + " is not divisible by " +
                           std::to_string(n) + " bits per symbol of " + to_string(cfg.scheme));
  }

  Transmission t;
  t.sent_text = stage("serialize", [&] {
    validate(graph);
    return serialize_triples(graph);
  });
  t.sent = stage("tokenize", [&] {
    vocab.check_width(cfg.token_width);
    return wordpiece_tokenize(t.sent_text, vocab);
  });
  const auto bits = stage("bits", [&] { return ids_to_bits(t.sent, cfg.token_width); });
  const auto symbols = stage("modulate", [&] { return modulate(bits, constellation); });
  const auto channel = stage("channel", [&] { return apply_channel(symbols, cfg.channel); });

  const bool equalize = cfg.detection == DetectionMode::kLmmse ||
                        (cfg.detection == DetectionMode::kAuto && cfg.channel.kind == ChannelKind::kRayleigh);
  const auto estimate =
      stage("equalize", [&] { return equalize ? lmmse_equalize(channel) : SymbolBlock{channel.received}; });
  const auto recovered =
      stage("demodulate", [&] { return ml_demodulate(estimate, constellation, channel.noise_var, cfg.token_width); });
  const auto decoded = stage("reassemble", [&] { return bits_to_ids(recovered, vocab); });
  t.received = decoded.frame;
  t.corrupted_ids = decoded.corrupted;
  t.received_text = stage("detokenize", [&] { return detokenize(t.received, vocab); });

  t.tokens = t.sent.ids.size();
  for (std::size_t i = 0; i < t.tokens; ++i) t.token_errors += t.sent.ids[i] != t.received.ids[i];
  t.bits = bits.bits.size();
  t.symbols = symbols.symbols.size();
  t.noise_var = channel.noise_var;
  for (std::size_t s = 0; s < t.symbols; ++s) {
    bool wrong = false;
    for (unsigned b = 0; b < n; ++b) {
      if (bits.bits[s * n + b] != recovered.bits[s * n + b]) {
        ++t.bit_errors;
        wrong = true;
      }
    }
    t.symbol_errors += wrong;
  }
  return t;
}

Answered answer_question(const StructuredSummary& repaired, std::string_view question,
                         const PipelineConfig& cfg, Clients& clients) {
  Answered out;
  const auto chunks = stage("chunk", [&] { return chunk_summary(repaired); });
  std::vector<Chunk> context;
  if (!chunks.empty()) {
    out.retrieved = stage("retrieve", [&] {
      const auto store = build_store(chunks, clients.embedder);
      return retrieve_top_k(store, clients.embedder.embed(question), cfg.top_k);
    });
    for (const auto& s : out.retrieved) context.push_back(s.chunk);
  }
  out.prompt = build_prompt(question, context, cfg.model);
  out.answer = stage("answer", [&] { return answer(out.prompt, clients.llm, clients.transcript); });
  return out;
}

PipelineResult run_pipeline(const SceneGraph& graph, std::string_view question, const Vocabulary& vocab,
                            const PipelineConfig& cfg, Clients& clients) {
  PipelineResult r;
  r.transmission = transmit(graph, vocab, cfg);
  // The clean structured summary is the receiver's shared knowledge.
  r.repair = stage("repair", [&] {
    return repair_with_structure(r.transmission.received_text, summarize(graph), clients.llm,
                                 clients.transcript, cfg.model);
  });
  r.answered = answer_question(r.repair.summary, question, cfg, clients);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Cell {
  ChannelKind channel;
  Scheme scheme;
  double snr_db;
};

struct CellResult {
  std::array<double, 4> recall_sum{};
  std::array<double, 4> f1_sum{};
  std::array<std::size_t, 4> answered{};
  std::uint64_t tokens = 0, token_errors = 0;
  std::uint64_t bits = 0, bit_errors = 0;
  std::uint64_t symbols = 0, symbol_errors = 0;
  std::size_t transmissions = 0;
  std::vector<std::string> failures;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string cell_name(const Cell& c) {
  return to_string(c.channel) + "/" + to_string(c.scheme) + "/" + fmt("%g", c.snr_db) + "dB";
}

}  // namespace

EvalReport snr_sweep(const SweepConfig& cfg, const std::vector<SceneGraph>& corpus,
                     const Vocabulary& vocab, const ClaimExtractor& extractor, Clients& clients) {
  if (corpus.empty()) throw validation_error("empty corpus");
  if (cfg.snrs_db.empty() || cfg.schemes.empty() || cfg.channels.empty()) {
    throw validation_error("sweep needs at least one SNR, scheme and channel");
  }

  std::vector<Cell> cells;
  for (const auto ch : cfg.channels) {
    for (const auto sc : cfg.schemes) {
      for (const double snr : cfg.snrs_db) cells.push_back({ch, sc, snr});
    }
  }

  std::vector<std::array<ItemSet, 4>> truth(corpus.size());
  std::uint64_t tokens_per_pass = 0;
  for (std::size_t g = 0; g < corpus.size(); ++g) {
    const auto clean = summarize(corpus[g]);
    for (std::size_t q = 0; q < 4; ++q) truth[g][q] = ground_truth(clean, all_question_types()[q]);
    tokens_per_pass += wordpiece_tokenize(serialize_triples(corpus[g]), vocab).ids.size();
  }
  std::size_t passes = std::max<std::size_t>(cfg.trials, 1);
  if (cfg.min_tokens > 0 && tokens_per_pass > 0) {
    passes = std::max<std::size_t>(passes, (cfg.min_tokens + tokens_per_pass - 1) / tokens_per_pass);
  }

  std::vector<CellResult> results(cells.size());
  auto run_cell = [&](std::size_t c) {
    const Cell& cell = cells[c];
    CellResult& res = results[c];
    PipelineConfig pc = cfg.pipeline;
    pc.scheme = cell.scheme;
    pc.channel.kind = cell.channel;
    pc.channel.snr_db = cell.snr_db;
    const std::uint64_t cell_seed = derive_seed(cfg.seed, c);
    for (std::size_t pass = 0; pass < passes; ++pass) {
      for (std::size_t g = 0; g < corpus.size(); ++g) {
        pc.channel.seed = derive_seed(cell_seed, pass * corpus.size() + g);
        try {
          const auto t = transmit(corpus[g], vocab, pc);
          res.tokens += t.tokens;
          res.token_errors += t.token_errors;
          res.bits += t.bits;
          res.bit_errors += t.bit_errors;
          res.symbols += t.symbols;
          res.symbol_errors += t.symbol_errors;
          ++res.transmissions;
          const auto repaired =
              repair_with_structure(t.received_text, summarize(corpus[g]), clients.llm, clients.transcript, pc.model);
          for (std::size_t q = 0; q < 4; ++q) {
            const auto qtype = all_question_types()[q];
            const auto a = answer_question(repaired.summary, default_question(qtype), pc, clients);
            const auto s = score(extractor.extract(a.answer, qtype), truth[g][q]);
            res.recall_sum[q] += s.recall;
            res.f1_sum[q] += s.f1;
            ++res.answered[q];
          }
        } catch (const std::exception& e) {
          res.failures.push_back(cell_name(cell) + " graph " + std::to_string(g) + " pass " +
                                 std::to_string(pass) + ": " + e.what());
        }
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) run_cell(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& res = results[c];
      ReportRow row{all_question_types()[q], cells[c].channel, cells[c].scheme, cells[c].snr_db};
      if (res.answered[q]) {
        row.recall = res.recall_sum[q] / static_cast<double>(res.answered[q]);
        row.f1 = res.f1_sum[q] / static_cast<double>(res.answered[q]);
      }
      row.token_error_rate = res.tokens ? static_cast<double>(res.token_errors) / res.tokens : 0.0;
      row.ber = res.bits ? static_cast<double>(res.bit_errors) / res.bits : 0.0;
      row.symbols = res.transmissions ? static_cast<double>(res.symbols) / res.transmissions : 0.0;
      row.trials = res.transmissions;
      report.rows.push_back(row);
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& res = results[c];
    PhyRow row{cells[c].scheme, cells[c].channel, cells[c].snr_db, res.transmissions};
    row.ber = res.bits ? static_cast<double>(res.bit_errors) / res.bits : 0.0;
    row.ser = res.symbols ? static_cast<double>(res.symbol_errors) / res.symbols : 0.0;
    row.token_error_rate = res.tokens ? static_cast<double>(res.token_errors) / res.tokens : 0.0;
    row.tokens = res.tokens;
    report.phy.push_back(row);
    report.failures.insert(report.failures.end(), res.failures.begin(), res.failures.end());
  }
  return report;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "qtype,channel,scheme,snr_db,recall,f1,token_error_rate,ber,symbols,trials\n";
  for (const auto& r : rows) {
    out << to_string(r.qtype) << ',' << to_string(r.channel) << ',' << to_string(r.scheme) << ','
        << fmt("%g", r.snr_db) << ',' << fmt("%.6f", r.recall) << ',' << fmt("%.6f", r.f1) << ','
        << fmt("%.6e", r.token_error_rate) << ',' << fmt("%.6e", r.ber) << ',' << fmt("%.2f", r.symbols) << ','
        << r.trials << '\n';
  }
  return out.str();
}

std::string EvalReport::phy_csv() const {
  std::ostringstream out;
  out << "scheme,channel,snr_db,trials,ber,ser,token_error_rate\n";
  for (const auto& r : phy) {
    out << to_string(r.scheme) << ',' << to_string(r.channel) << ',' << fmt("%g", r.snr_db) << ',' << r.trials
        << ',' << fmt("%.6e", r.ber) << ',' << fmt("%.6e", r.ser) << ',' << fmt("%.6e", r.token_error_rate)
        << '\n';
  }
  return out.str();
}

std::string EvalReport::svg(QuestionType q) const {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 160, kTop = 40, kBottom = 50;
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> series;
  double lo = 0, hi = 1;
  bool first = true;
  for (const auto& r : rows) {
    if (r.qtype != q) continue;
    series[{to_string(r.scheme), to_string(r.channel)}].emplace_back(r.snr_db, r.recall);
    if (first) {
      lo = hi = r.snr_db;
      first = false;
    }
    lo = std::min(lo, r.snr_db);
    hi = std::max(hi, r.snr_db);
  }
  if (hi == lo) hi = lo + 1;
  const double plot_w = kW - kLeft - kRight, plot_h = kH - kTop - kBottom;
  auto px = [&](double snr) { return kLeft + (snr - lo) / (hi - lo) * plot_w; };
  auto py = [&](double recall) { return kTop + (1.0 - recall) * plot_h; };

  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << to_string(q)
    << " recall vs SNR (Es/N0, dB)</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << py(0)
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kLeft << "\" y2=\"" << py(1)
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << fmt("%.2f", v) << "</text>\n";
  }
  s << "<text x=\"" << px(lo) << "\" y=\"" << py(0) + 18 << "\" font-family=\"sans-serif\" font-size=\"11\">"
    << fmt("%g", lo) << "</text>\n";
  s << "<text x=\"" << px(hi) << "\" y=\"" << py(0) + 18
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt("%g", hi) << "</text>\n";
  std::size_t idx = 0;
  for (auto& [key, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = kColors[idx % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      s << (i ? " " : "") << fmt("%.1f", px(pts[i].first)) << "," << fmt("%.1f", py(pts[i].second));
    }
    s << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(idx);
    s << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\" "
      << "fill=\"" << color << "\">" << key.first << " " << key.second << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace opensc
