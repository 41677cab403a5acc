// opensc command line. Talks to the library only through the C interface.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opensc/opensc.h"

namespace {

int exit_code(opensc_status s) {
  switch (s) {
    case OPENSC_OK: return 0;
    case OPENSC_ERR_RUNTIME: return 2;
    case OPENSC_ERR_EXTERNAL: return 3;
    default: return 1;
  }
}

int fail(opensc_status s, const char* what) {
  std::cerr << "opensc: " << what << " failed (" << opensc_status_name(s) << "): " << opensc_last_error() << "\n";
  return exit_code(s);
}

// Prints and frees a library-owned string.
void emit(char* text, std::ostream& out = std::cout) {
  if (text) out << text;
  opensc_string_free(text);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opensc: scene-graph semantic communication over simulated links"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool offline = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out-dir", out_dir, "output directory for sweep artifacts");
  app.add_flag("--offline", offline, "force the mock model and hash embedder");

  auto* tokenize = app.add_subcommand("tokenize", "WordPiece ids, bit length and symbol counts of a text file");
  std::string text_file;
  tokenize->add_option("file", text_file, "text file")->required();

  auto* simulate = app.add_subcommand("simulate", "one end-to-end run on a scene graph");
  std::string graph_file, question;
  std::optional<std::string> scheme, channel, detection, qtype;
  std::optional<double> snr;
  simulate->add_option("graph", graph_file, "scene graph JSON")->required();
  simulate->add_option("--question,-q", question, "question text");
  simulate->add_option("--qtype", qtype, "Category, Quantity, Location or Relationship; scores the answer");
  simulate->add_option("--scheme", scheme, "BPSK, 4QAM or 16QAM");
  simulate->add_option("--channel", channel, "AWGN or Rayleigh");
  simulate->add_option("--snr", snr, "Es/N0 in dB (inf for a noiseless link)");
  simulate->add_option("--detection", detection, "auto, raw or lmmse");

  std::vector<std::string> graphs;
  auto* sweep = app.add_subcommand("sweep", "SNR x scheme x channel sweep; writes report.csv and phy_sweep.csv");
  sweep->add_option("graphs", graphs, "graph files or directories (default: configured corpus)");
  auto* count = app.add_subcommand("count-symbols", "average transmitted symbols per method");
  count->add_option("graphs", graphs, "graph files or directories (default: configured corpus)");
  auto* evaluate = app.add_subcommand("evaluate", "per-graph recall / precision / F1 for every question type");
  evaluate->add_option("graphs", graphs, "graph files or directories (default: configured corpus)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  opensc_overrides overrides{};
  if (seed) {
    overrides.has_seed = 1;
    overrides.seed = *seed;
  }
  overrides.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
  overrides.offline = offline ? 1 : 0;

  opensc_session* session = nullptr;
  if (const auto s = opensc_session_open(config_path.empty() ? nullptr : config_path.c_str(), &overrides, &session)) {
    return fail(s, "loading configuration");
  }

  opensc_status status = OPENSC_OK;
  char* out = nullptr;
  const char* what = "";
  if (*tokenize) {
    what = "tokenize";
    std::ifstream in(text_file, std::ios::binary);
    if (!in) {
      std::cerr << "opensc: cannot open " << text_file << "\n";
      opensc_session_free(session);
      return 1;
    }
    std::ostringstream text;
    text << in.rdbuf();
    status = opensc_session_tokenize(session, text.str().c_str(), &out);
  } else if (*simulate) {
    what = "simulate";
    opensc_simulate_options o{};
    o.scheme = scheme ? scheme->c_str() : nullptr;
    o.channel = channel ? channel->c_str() : nullptr;
    o.detection = detection ? detection->c_str() : nullptr;
    o.qtype = qtype ? qtype->c_str() : nullptr;
    if (snr) {
      o.has_snr = 1;
      o.snr_db = *snr;
    }
    status = opensc_session_simulate(session, graph_file.c_str(), question.c_str(), &o, &out);
  } else {
    const auto argv_graphs = c_strings(graphs);
    if (*sweep) {
      what = "sweep";
      status = opensc_session_sweep(session, argv_graphs.data(), argv_graphs.size(), &out);
      if (status == OPENSC_OK) {
        emit(out, std::cerr);
        out = nullptr;
      }
    } else if (*count) {
      what = "count-symbols";
      status = opensc_session_count_symbols(session, argv_graphs.data(), argv_graphs.size(), &out);
    } else {
      what = "evaluate";
      status = opensc_session_evaluate(session, argv_graphs.data(), argv_graphs.size(), &out);
    }
  }
  opensc_session_free(session);
  if (status != OPENSC_OK) return fail(status, what);
  emit(out);
  return 0;
}
