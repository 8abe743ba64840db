#pragma once

// Corpus benchmark: run a backend over every document of a generated corpus,
// score against gold, and summarize as HN / HT / SHN / SHT / Avrg.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tocdex/corpusgen.hpp"
#include "tocdex/evaluator.hpp"
#include "tocdex/locator.hpp"
#include "tocdex/pipeline.hpp"

namespace tocdex {

/// Which predictions to score: a pipeline backend, or the prediction
/// fixtures stored in the corpus.
struct BenchBackend {
  std::optional<BackendSpec> pipeline;  // empty means "fixture"

  static BenchBackend fixture() { return {}; }
  static BenchBackend of(BackendSpec b) { return {std::move(b)}; }
  std::string name() const { return pipeline ? std::string(to_string(pipeline->kind)) : "fixture"; }
};

struct ClassifierStats {
  std::size_t toc_pages = 0;
  std::size_t toc_found = 0;        // gold ToC predicted ToC
  std::size_t other_predicted = 0;  // pages predicted Other
  std::size_t other_correct = 0;    // ... that really are Other

  double toc_recall() const { return toc_pages == 0 ? 1.0 : double(toc_found) / double(toc_pages); }
  double other_precision() const {
    return other_predicted == 0 ? 1.0 : double(other_correct) / double(other_predicted);
  }
};

struct DocOutcome {
  std::string name;
  std::optional<std::string> error;
  EvalReport report;
};

struct BenchResult {
  std::string backend;
  EvalReport pooled;
  ClassifierStats classifier;
  std::vector<DocOutcome> documents;
  double seconds = 0.0;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(documents.begin(), documents.end(),
                                                  [](const DocOutcome& d) { return d.error.has_value(); }));
  }
};

inline ClassifierStats classifier_stats(const std::vector<CorpusEntry>& corpus, const ClassifierConfig& config) {
  ClassifierStats s;
  for (const auto& e : corpus) {
    auto labels = classify_document(e.document, config);
    for (const auto& gold : e.labels) {
      const bool predicted_toc = labels.at(static_cast<std::size_t>(gold.page - 1)).label == PageClass::Toc;
      if (gold.is_toc) {
        ++s.toc_pages;
        s.toc_found += predicted_toc;
      }
      if (!predicted_toc) {
        ++s.other_predicted;
        s.other_correct += !gold.is_toc;
      }
    }
  }
  return s;
}

/// Documents are processed on up to `jobs` threads; results keep corpus order.
inline BenchResult run_bench(const std::vector<CorpusEntry>& corpus, const BenchBackend& backend,
                             const Pipeline& pipeline, unsigned jobs, const MatchPolicy& policy = {}) {
  if (corpus.empty()) throw Error(ErrorKind::PreconditionViolation, "corpus is empty");
  const auto start = std::chrono::steady_clock::now();
  std::vector<DocOutcome> outcomes(corpus.size());
  std::vector<std::pair<TocIndex, TocIndex>> pairs(corpus.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      const auto& e = corpus[i];
      outcomes[i].name = e.name;
      TocIndex predicted;
      if (!backend.pipeline) {
        predicted = e.predicted;
      } else {
        try {
          predicted = pipeline.extract(e.document, *backend.pipeline).index;
        } catch (const Error& err) {
          outcomes[i].error = err.what();
        }
      }
      outcomes[i].report = evaluate(predicted, e.gold, policy);
      outcomes[i].report.unmatched.clear();
      pairs[i] = {std::move(predicted), e.gold};
    }
  };
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(corpus.size()));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  BenchResult r;
  r.backend = backend.name();
  r.pooled = evaluate_corpus(pairs, policy);
  r.classifier = classifier_stats(corpus, pipeline.classifier());
  r.documents = std::move(outcomes);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline nlohmann::ordered_json to_json(const BenchResult& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["backend"] = r.backend;
  j["documents"] = r.documents.size();
  j["failures"] = r.failures();
  j["HN"] = r.pooled.hn_acc();
  j["HT"] = r.pooled.ht_acc();
  j["SHN"] = r.pooled.shn_acc();
  j["SHT"] = r.pooled.sht_acc();
  j["Avrg"] = r.pooled.macro_avg();
  auto report = to_json(r.pooled);
  report.erase("unmatched");
  j["report"] = std::move(report);
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  c["toc_pages"] = r.classifier.toc_pages;
  c["toc_recall"] = r.classifier.toc_recall();
  c["other_predicted"] = r.classifier.other_predicted;
  c["other_precision"] = r.classifier.other_precision();
  j["classifier"] = std::move(c);
  auto docs = nlohmann::ordered_json::array();
  for (const auto& d : r.documents) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    e["name"] = d.name;
    e["macro_avg"] = d.report.macro_avg();
    e["error"] = d.error ? nlohmann::ordered_json(*d.error) : nlohmann::ordered_json(nullptr);
    docs.push_back(std::move(e));
  }
  j["per_document"] = std::move(docs);
  j["seconds"] = r.seconds;
  return j;
}

inline std::string bench_table(const BenchResult& r) {
  char row[160];
  std::string out = "backend        HN     HT     SHN    SHT    Avrg\n";
  std::snprintf(row, sizeof row, "%-12s %6.3f %6.3f %6.3f %6.3f %6.3f\n", r.backend.c_str(), r.pooled.hn_acc(),
                r.pooled.ht_acc(), r.pooled.shn_acc(), r.pooled.sht_acc(), r.pooled.macro_avg());
  out += row;
  return out;
}

}  // namespace tocdex
