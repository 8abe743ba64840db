// tocdex command-line driver. JSON results go to stdout, logs to stderr.
//
// Exit codes: 0 ok, 1 usage, 2 input, 3 extraction, 4 transport.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tocdex/bench.hpp"
#include "tocdex/corpusgen.hpp"
#include "tocdex/evaluator.hpp"
#include "tocdex/locator.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/pipeline.hpp"
#include "tocdex/service.hpp"
#include "tocdex/tocindex.hpp"

namespace fs = std::filesystem;
using namespace tocdex;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kInput = 2, kExtraction = 3, kTransport = 4 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TransportError:
      return kTransport;
    case ErrorKind::NoTocFound:
    case ErrorKind::NoRecognizableStructure:
    case ErrorKind::SchemaViolation:
    case ErrorKind::EmptyReply:
    case ErrorKind::UnboundPlaceholder:
      return kExtraction;
    default:
      return kInput;
  }
}

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// .json inputs are paged documents; anything else is form-feed separated text.
PagedDocument load_document(const std::string& path) {
  const auto bytes = read_input(path);
  if (ends_with(path, ".json")) return ingest_paged_json(bytes);
  return ingest_plain_text(bytes, kFormFeedDelimiter, fs::path(path).stem().string());
}

TocIndex load_index(const std::string& path) {
  try {
    return parse_index(read_input(path));
  } catch (const Error& e) {
    // A bad index file is an input problem, not an extraction failure.
    if (e.kind() == ErrorKind::SchemaViolation) throw Error(ErrorKind::MalformedInput, e.message(), e.details());
    throw;
  }
}

void emit(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << '\n'; }

struct BackendOptions {
  std::string backend = "heuristic";
  std::string classifier_path;
  std::string mock_fixtures;
  std::string llm_config_path;

  ClassifierConfig classifier() const {
    return classifier_path.empty() ? ClassifierConfig{} : load_classifier_config(classifier_path);
  }

  Pipeline pipeline() const {
    TransportFactory t;
    if (!mock_fixtures.empty()) t.mock = std::make_shared<MockTransport>(mock_fixtures);
    return Pipeline(classifier(), std::move(t));
  }

  BackendSpec spec() const {
    const auto kind = backend_kind_from_string(backend);
    if (kind == BackendKind::Mock && mock_fixtures.empty()) {
      throw Error(ErrorKind::ConfigError, "--backend mock needs --mock-fixtures");
    }
    if (kind != BackendKind::Llm) return {kind, std::nullopt};
    if (llm_config_path.empty()) return BackendSpec::llm(LlmConfig{});
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_input(llm_config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ConfigError, std::string("LLM config is not JSON: ") + e.what());
    }
    return BackendSpec::llm(llm_config_from_json(j));
  }

  void attach(CLI::App* cmd, bool with_backend) {
    if (with_backend) cmd->add_option("--backend", backend, "heuristic | llm | mock")->capture_default_str();
    cmd->add_option("--classifier", classifier_path, "classifier config JSON");
    cmd->add_option("--mock-fixtures", mock_fixtures, "directory of <sha256>.reply files");
    cmd->add_option("--llm-config", llm_config_path, "LLM config JSON (key read from the env var it names)");
  }
};

std::atomic<Service*> g_service{nullptr};

void on_signal(int) {
  if (auto* s = g_service.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tocdex: locate, structure and score tables of contents"};
  app.set_version_flag("--version", std::string(kPipelineVersion));
  app.require_subcommand(1);

  std::string file;
  BackendOptions opts;

  auto* ingest = app.add_subcommand("ingest", "normalize a document and print it with its doc_id");
  ingest->add_option("file", file, ".pgdoc.json or form-feed separated text")->required();

  auto* classify = app.add_subcommand("classify", "label every page as toc or other");
  classify->add_option("file", file)->required();
  opts.attach(classify, false);

  std::string out_path, store_root;
  auto* index = app.add_subcommand("index", "extract the ToC index of a document");
  index->add_option("file", file)->required();
  index->add_option("--out", out_path, "also write the index JSON to this file");
  index->add_option("--store", store_root, "also persist the record under this store root");
  opts.attach(index, true);

  std::string pred_path, gold_path, policy_name = "normalized";
  auto* eval = app.add_subcommand("eval", "score a predicted index against gold");
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--gold", gold_path)->required();
  eval->add_option("--policy", policy_name)->check(CLI::IsMember({"exact", "normalized"}))->capture_default_str();

  CorpusSpec corpus_spec;
  std::string format_name = "B", noise_preset;
  std::size_t n_docs = 20;
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus with gold labels");
  gen->add_option("--seed", corpus_spec.seed)->required();
  gen->add_option("--format", format_name)->check(CLI::IsMember({"A", "B"}))->capture_default_str();
  gen->add_option("--docs", n_docs)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--out", out_path)->required();
  gen->add_option("--noise", noise_preset, "preset: none | decorative")->check(CLI::IsMember({"none", "decorative"}));
  gen->add_option("--dot-leader-prob", corpus_spec.noise.dot_leader_prob)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--trailing-pageno-prob", corpus_spec.noise.trailing_pageno_prob)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--header-footer-prob", corpus_spec.noise.header_footer_prob)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--blank-page-prob", corpus_spec.noise.blank_page_prob)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--title-corruption-prob", corpus_spec.noise.title_corruption_prob)->check(CLI::Range(0.0, 1.0));

  std::string corpus_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* bench = app.add_subcommand("bench", "run a backend over a corpus and report HN/HT/SHN/SHT/Avrg");
  bench->add_option("--corpus", corpus_dir)->required();
  bench->add_option("--backend", opts.backend, "heuristic | llm | mock | fixture")->capture_default_str();
  bench->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  bench->add_option("--policy", policy_name)->check(CLI::IsMember({"exact", "normalized"}))->capture_default_str();
  opts.attach(bench, false);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--config", config_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, std::cerr, std::cerr);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) {
      const auto doc = load_document(file);
      auto j = doc.to_json();
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      out["doc_id"] = doc.doc_id();
      for (auto& [k, v] : j.items()) out[k] = v;
      emit(out);
    } else if (*classify) {
      const auto doc = load_document(file);
      auto labels = nlohmann::ordered_json::array();
      for (const auto& l : classify_document(doc, opts.classifier())) labels.push_back(to_json(l));
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      out["doc_id"] = doc.doc_id();
      out["pages"] = std::move(labels);
      emit(out);
    } else if (*index) {
      const auto doc = load_document(file);
      const auto pipeline = opts.pipeline();
      const auto backend = opts.spec();
      TocIndex result;
      std::vector<std::string> diagnostics;
      if (!store_root.empty()) {
        IndexStore store(store_root);
        auto record = pipeline.run(doc, backend, store);
        result = std::move(record.index);
        diagnostics = std::move(record.diagnostics);
        std::cerr << "stored " << doc.doc_id() << " under " << store_root << '\n';
      } else {
        auto ex = pipeline.extract(doc, backend);
        result = std::move(ex.index);
        diagnostics = std::move(ex.diagnostics);
      }
      for (const auto& d : diagnostics) std::cerr << "diagnostic: " << d << '\n';
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error(ErrorKind::MalformedInput, "cannot write " + out_path);
        out << to_json(result).dump(2) << '\n';
        std::cerr << "wrote " << out_path << '\n';
      }
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      out["doc_id"] = doc.doc_id();
      out["index"] = to_json(result);
      out["diagnostics"] = diagnostics;
      emit(out);
    } else if (*eval) {
      const auto policy = policy_name == "exact" ? MatchPolicy::exact() : MatchPolicy{};
      emit(to_json(evaluate(load_index(pred_path), load_index(gold_path), policy)));
    } else if (*gen) {
      corpus_spec.format = format_name == "A" ? FormatKind::FormatA : FormatKind::FormatB;
      if (noise_preset == "decorative") {
        corpus_spec.noise.dot_leader_prob = 0.5;
        corpus_spec.noise.trailing_pageno_prob = 0.5;
        corpus_spec.noise.header_footer_prob = 0.3;
        corpus_spec.noise.blank_page_prob = 0.1;
      }
      write_corpus(out_path, corpus_spec, n_docs);
      std::cerr << "wrote " << n_docs << " documents to " << out_path << '\n';
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      out["out"] = out_path;
      out["documents"] = n_docs;
      out["spec"] = to_json(corpus_spec);
      emit(out);
    } else if (*bench) {
      const auto corpus = read_corpus(corpus_dir);
      const auto policy = policy_name == "exact" ? MatchPolicy::exact() : MatchPolicy{};
      const auto backend = opts.backend == "fixture" ? BenchBackend::fixture() : BenchBackend::of(opts.spec());
      const auto result = run_bench(corpus, backend, opts.pipeline(), jobs, policy);
      for (const auto& d : result.documents) {
        if (d.error) std::cerr << d.name << ": " << *d.error << '\n';
      }
      const auto table = bench_table(result);
      std::cerr << table;
      auto j = to_json(result);
      j["table"] = table;
      emit(j);
    } else if (*serve) {
      Service service(load_service_config(config_path));
      const int port = service.bind();
      if (port < 0) throw Error(ErrorKind::ConfigError, "cannot bind the configured address");
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on port " << port << '\n';
      service.serve();
      g_service = nullptr;
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      out["stopped"] = true;
      out["port"] = port;
      emit(out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& d : e.details()) std::cerr << "  " << d << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kOk;
}
