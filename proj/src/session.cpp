#include "opensc/session.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "opensc/error.hpp"

namespace opensc {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string api_key(const RunConfig& c) {
  if (!c.llm.api_key_env.empty()) {
    if (const char* v = std::getenv(c.llm.api_key_env.c_str()); v && *v) return v;
  }
  return c.llm.api_key;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write file", path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed", path.string());
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Session::Session(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  vocab_ = std::make_unique<Vocabulary>(Vocabulary::load(config_.vocab));
  vocab_->check_width(config_.token_width);
  categories_ = LabelList::load(config_.categories);
  predicates_ = LabelList::load(config_.predicates);

  const auto key = api_key(config_);
  if (!config_.offline && !config_.llm.endpoint.empty()) {
    llm_ = std::make_unique<HttpLlmClient>(HttpClientConfig{config_.llm.endpoint, config_.llm.model, key,
                                                            std::chrono::milliseconds(config_.llm.timeout_ms),
                                                            config_.llm.max_retries});
  } else if (!config_.llm.mock_script.empty()) {
    llm_ = MockLlm::from_file(config_.llm.mock_script);
  } else {
    llm_ = std::make_unique<MockLlm>();
  }
  if (!config_.offline && config_.embedder.kind == "http") {
    embedder_ = std::make_unique<HttpEmbedder>(HttpClientConfig{config_.embedder.endpoint, config_.embedder.model,
                                                                key, std::chrono::milliseconds(config_.llm.timeout_ms),
                                                                config_.llm.max_retries});
  } else {
    embedder_ = std::make_unique<HashEmbedder>(config_.embedder.dim);
  }
  if (!config_.llm.transcript.empty()) {
    transcript_ = std::make_unique<TranscriptLog>(config_.llm.transcript);
    transcript_->add_secret(key);
  }
}

Session::~Session() = default;

PipelineConfig Session::pipeline_config() const {
  PipelineConfig pc;
  pc.scheme = config_.schemes.front();
  pc.channel.kind = config_.channels.front();
  pc.channel.snr_db = config_.snrs_db.empty() ? 0.0 : config_.snrs_db.front();
  pc.channel.seed = config_.seed;
  pc.detection = config_.detection;
  pc.token_width = config_.token_width;
  pc.top_k = config_.top_k;
  pc.model = config_.llm.model;
  return pc;
}

std::vector<SceneGraph> Session::load_corpus(const std::vector<std::string>& graph_paths) const {
  const auto files = expand_corpus(graph_paths.empty() ? config_.corpus : graph_paths);
  if (files.empty()) throw validation_error("empty corpus", "corpus");
  const GraphValidation labels{&categories_, &predicates_};
  std::vector<SceneGraph> corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) corpus.push_back(load_scene_graph_file(f, labels));
  return corpus;
}

std::string Session::tokenize_report(std::string_view text) const {
  const auto frame = wordpiece_tokenize(text, *vocab_);
  std::ostringstream out;
  out << "tokens " << frame.ids.size() << "\n";
  out << "ids";
  for (const auto id : frame.ids) out << ' ' << id;
  out << "\npieces";
  for (const auto id : frame.ids) out << ' ' << vocab_->token(id);
  const std::uint64_t bits = static_cast<std::uint64_t>(frame.ids.size()) * config_.token_width;
  out << "\nbits " << bits << " (m=" << config_.token_width << ")\n";
  for (const auto s : {Scheme::kBpsk, Scheme::k4Qam, Scheme::k16Qam}) {
    out << "symbols " << to_string(s) << ' ' << opensc::count_symbols(bits, bits_per_symbol(s)) << "\n";
  }
  return out.str();
}

std::string Session::simulate(const std::string& graph_path, const std::string& question,
                              const SimulateOptions& options) {
  const auto graph = load_scene_graph_file(graph_path, GraphValidation{&categories_, &predicates_});
  PipelineConfig pc = pipeline_config();
  if (options.scheme) pc.scheme = *options.scheme;
  if (options.channel) pc.channel.kind = *options.channel;
  if (options.snr_db) pc.channel.snr_db = *options.snr_db;
  if (options.detection) pc.detection = *options.detection;
  if (pc.token_width % bits_per_symbol(pc.scheme) != 0) {
    throw validation_error("token width is not divisible by the bits per symbol of " + to_string(pc.scheme),
                           "token_width");
  }
  std::string q = question;
  if (q.empty()) q = default_question(options.qtype.value_or(QuestionType::kCategory));

  Clients clients{*llm_, *embedder_, transcript_.get()};
  const auto r = run_pipeline(graph, q, *vocab_, pc, clients);
  const auto& t = r.transmission;

  std::ostringstream out;
  out << "scheme " << to_string(pc.scheme) << " channel " << to_string(pc.channel.kind) << " snr_db "
      << fmt("%g", pc.channel.snr_db) << " detection " << to_string(pc.detection) << " seed " << pc.channel.seed
      << "\n";
  out << "sent: " << t.sent_text << "\n";
  out << "received: " << t.received_text << "\n";
  out << "tokens " << t.tokens << " token_errors " << t.token_errors << " corrupted_ids " << t.corrupted_ids
      << " token_error_rate " << fmt("%.6e", t.token_error_rate()) << "\n";
  out << "bits " << t.bits << " bit_errors " << t.bit_errors << " ber " << fmt("%.6e", t.ber()) << "\n";
  out << "symbols " << t.symbols << " symbol_errors " << t.symbol_errors << " noise_var "
      << fmt("%.6e", t.noise_var) << "\n";
  if (r.repair.fallback) {
    out << "repair: fallback (" << r.repair.warning << ")\n";
  } else {
    out << "repair: accepted\n";
  }
  out << "structure: " << to_json(r.repair.summary) << "\n";
  out << "retrieved:\n";
  for (std::size_t i = 0; i < r.answered.retrieved.size(); ++i) {
    const auto& s = r.answered.retrieved[i];
    out << "  [" << (i + 1) << "] " << s.chunk.category << ' ' << fmt("%.6f", s.similarity) << "\n";
  }
  out << "question: " << q << "\n";
  out << "answer:\n" << r.answered.answer << "\n";
  if (options.qtype) {
    const ClaimExtractor extractor(categories_, predicates_);
    const auto s =
        score(extractor.extract(r.answered.answer, *options.qtype), ground_truth(summarize(graph), *options.qtype));
    out << "score " << to_string(*options.qtype) << " recall " << fmt("%.6f", s.recall) << " precision "
        << fmt("%.6f", s.precision) << " f1 " << fmt("%.6f", s.f1) << " truth " << s.truth << " predicted "
        << s.predicted << " matched " << s.matched << "\n";
  }
  return out.str();
}

SweepOutput Session::sweep(const std::vector<std::string>& graph_paths) {
  config_.validate(true);
  const auto corpus = load_corpus(graph_paths);
  SweepConfig sc;
  sc.snrs_db = config_.snrs_db;
  sc.schemes = config_.schemes;
  sc.channels = config_.channels;
  sc.trials = config_.trials;
  sc.min_tokens = config_.min_tokens;
  sc.seed = config_.seed;
  sc.pipeline = pipeline_config();
  sc.threads = config_.threads ? config_.threads : std::max(1u, std::thread::hardware_concurrency());

  const ClaimExtractor extractor(categories_, predicates_);
  Clients clients{*llm_, *embedder_, transcript_.get()};
  SweepOutput result;
  result.report = snr_sweep(sc, corpus, *vocab_, extractor, clients);

  const fs::path dir(config_.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory: " + ec.message(), dir.string());
  write_file(dir / "report.csv", result.report.to_csv());
  result.written.push_back((dir / "report.csv").string());
  write_file(dir / "phy_sweep.csv", result.report.phy_csv());
  result.written.push_back((dir / "phy_sweep.csv").string());
  if (config_.svg) {
    for (const auto q : all_question_types()) {
      const auto name = dir / ("recall_" + lower(to_string(q)) + ".svg");
      write_file(name, result.report.svg(q));
      result.written.push_back(name.string());
    }
  }
  if (!result.report.failures.empty()) {
    std::string text;
    for (const auto& f : result.report.failures) text += f + "\n";
    write_file(dir / "failures.txt", text);
    result.written.push_back((dir / "failures.txt").string());
  }
  return result;
}

std::string Session::count_symbols(const std::vector<std::string>& graph_paths) const {
  const auto corpus = load_corpus(graph_paths);
  std::vector<std::string> texts;
  std::vector<std::size_t> tokens;
  std::string all;
  for (const auto& g : corpus) {
    texts.push_back(serialize_triples(g));
    tokens.push_back(wordpiece_tokenize(texts.back(), *vocab_).ids.size());
    all += texts.back();
  }
  const auto table = HuffmanTable::build(all);
  const double count = static_cast<double>(corpus.size());

  std::ostringstream out;
  out << "method,bits,n,symbols,ratio_vs_opensc\n";
  for (const auto scheme : config_.schemes) {
    const unsigned n = bits_per_symbol(scheme);
    double sums[3][2] = {};
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const SymbolCount rows[3] = {count_opensc(tokens[i], config_.token_width, n),
                                   count_five_bit_rs(texts[i], config_.rs, n),
                                   count_huffman_rs(texts[i], table, config_.rs, n)};
      for (int m = 0; m < 3; ++m) {
        sums[m][0] += static_cast<double>(rows[m].bits);
        sums[m][1] += static_cast<double>(rows[m].symbols);
      }
    }
    const Method methods[3] = {Method::kOpenSC, Method::kFiveBitRs, Method::kHuffmanRs};
    for (int m = 0; m < 3; ++m) {
      // Symbols each method needs per OpenSC symbol.
      const double ratio = sums[0][1] > 0 ? sums[m][1] / sums[0][1] : 0.0;
      out << to_string(methods[m]) << ',' << fmt("%.2f", sums[m][0] / count) << ',' << n << ','
          << fmt("%.2f", sums[m][1] / count) << ',' << fmt("%.4f", ratio) << "\n";
    }
  }
  out << "# graphs " << corpus.size() << ", m=" << config_.token_width << ", RS(" << config_.rs.n << ","
      << config_.rs.k << ")\n";
  out << "# reference (not asserted): 1040 tokens at m=16 take 4160 16QAM symbols\n";
  return out.str();
}

std::string Session::evaluate(const std::vector<std::string>& graph_paths) {
  std::vector<std::string> names;
  for (const auto& f : expand_corpus(graph_paths.empty() ? config_.corpus : graph_paths)) {
    names.push_back(fs::path(f).stem().string());
  }
  const auto corpus = load_corpus(graph_paths);
  const ClaimExtractor extractor(categories_, predicates_);
  Clients clients{*llm_, *embedder_, transcript_.get()};
  PipelineConfig pc = pipeline_config();

  std::ostringstream out;
  out << "graph,qtype,recall,precision,f1,truth,predicted,matched\n";
  std::array<Score, 4> mean{};
  for (std::size_t g = 0; g < corpus.size(); ++g) {
    pc.channel.seed = derive_seed(config_.seed, g);
    const auto t = transmit(corpus[g], *vocab_, pc);
    const auto clean = summarize(corpus[g]);
    const auto repaired =
        repair_with_structure(t.received_text, clean, *llm_, transcript_.get(), pc.model);
    for (std::size_t q = 0; q < 4; ++q) {
      const auto qtype = all_question_types()[q];
      const auto a = answer_question(repaired.summary, default_question(qtype), pc, clients);
      const auto s = score(extractor.extract(a.answer, qtype), ground_truth(clean, qtype));
      out << names[g] << ',' << to_string(qtype) << ',' << fmt("%.6f", s.recall) << ','
          << fmt("%.6f", s.precision) << ',' << fmt("%.6f", s.f1) << ',' << s.truth << ',' << s.predicted << ','
          << s.matched << "\n";
      mean[q].recall += s.recall;
      mean[q].precision += s.precision;
      mean[q].f1 += s.f1;
    }
  }
  const double n = static_cast<double>(corpus.size());
  for (std::size_t q = 0; q < 4; ++q) {
    out << "mean," << to_string(all_question_types()[q]) << ',' << fmt("%.6f", mean[q].recall / n) << ','
        << fmt("%.6f", mean[q].precision / n) << ',' << fmt("%.6f", mean[q].f1 / n) << ",,,\n";
  }
  out << "# scheme " << to_string(pc.scheme) << ", channel " << to_string(pc.channel.kind) << ", snr_db "
      << fmt("%g", pc.channel.snr_db) << "\n";
  return out.str();
}

}  // namespace opensc
