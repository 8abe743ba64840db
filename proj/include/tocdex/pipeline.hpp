#pragma once

// ingest -> locate -> extract -> persist, plus the file-backed index store.
//
// Store layout, one directory per document:
//   <root>/<doc_id>/document.pgdoc.json   canonical document bytes
//   <root>/<doc_id>/index.json            canonical index JSON
//   <root>/<doc_id>/meta.json             backend, timestamps, version, digests
// Every file is written to a temporary name and renamed into place; meta.json
// goes last and carries the digests that get() verifies.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tocdex/digest.hpp"
#include "tocdex/error.hpp"
#include "tocdex/grammar.hpp"
#include "tocdex/llm.hpp"
#include "tocdex/locator.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/tocindex.hpp"

#ifndef TOCDEX_VERSION
#define TOCDEX_VERSION "0.0.0"
#endif

namespace tocdex {

inline constexpr std::string_view kPipelineVersion = TOCDEX_VERSION;

enum class BackendKind { Heuristic, Llm, Mock };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Heuristic: return "heuristic";
    case BackendKind::Llm: return "llm";
    case BackendKind::Mock: return "mock";
  }
  return "unknown";
}

inline BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "heuristic") return BackendKind::Heuristic;
  if (s == "llm") return BackendKind::Llm;
  if (s == "mock") return BackendKind::Mock;
  throw Error(ErrorKind::ConfigError, "unknown backend \"" + std::string(s) + "\"");
}

struct BackendSpec {
  BackendKind kind = BackendKind::Heuristic;
  std::optional<LlmConfig> llm_config;  // present iff kind == Llm

  static BackendSpec heuristic() { return {BackendKind::Heuristic, std::nullopt}; }
  static BackendSpec mock() { return {BackendKind::Mock, std::nullopt}; }
  static BackendSpec llm(LlmConfig c) { return {BackendKind::Llm, std::move(c)}; }

  void validate() const {
    if ((kind == BackendKind::Llm) != llm_config.has_value()) {
      throw Error(ErrorKind::ConfigError, "llm_config must be present exactly for the llm backend");
    }
    if (llm_config) llm_config->validate();
  }

  friend bool operator==(const BackendSpec&, const BackendSpec&) = default;
};

inline nlohmann::ordered_json to_json(const BackendSpec& b) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["kind"] = to_string(b.kind);
  if (b.llm_config) {
    auto c = to_json(*b.llm_config);
    j["llm"] = std::move(c);
  }
  return j;
}

inline BackendSpec backend_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw Error(ErrorKind::ConfigError, "backend descriptor needs a \"kind\"");
  }
  BackendSpec b{backend_kind_from_string(j.at("kind").get<std::string>()), std::nullopt};
  if (j.contains("llm")) b.llm_config = llm_config_from_json(j.at("llm"));
  b.validate();
  return b;
}

struct IndexRecord {
  std::string doc_id;
  TocIndex index;
  BackendSpec backend;
  std::string created_at;  // UTC, ISO 8601 with milliseconds
  std::vector<std::string> diagnostics;
  std::string pipeline_version{kPipelineVersion};

  friend bool operator==(const IndexRecord&, const IndexRecord&) = default;
};

inline nlohmann::ordered_json to_json(const IndexRecord& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["doc_id"] = r.doc_id;
  j["index"] = to_json(r.index);
  j["backend"] = to_json(r.backend);
  j["created_at"] = r.created_at;
  j["diagnostics"] = r.diagnostics;
  j["pipeline_version"] = r.pipeline_version;
  return j;
}

inline std::string utc_timestamp_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

struct StoreEntry {
  std::string doc_id;
  std::string created_at;
  BackendKind backend = BackendKind::Heuristic;
};

class IndexStore {
public:
  using Clock = std::function<std::string()>;

  explicit IndexStore(std::filesystem::path root, Clock clock = utc_timestamp_now)
      : root_(std::move(root)), clock_(std::move(clock)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (!std::filesystem::is_directory(root_)) {
      throw Error(ErrorKind::ConfigError, "store root is not a directory: " + root_.string());
    }
  }

  const std::filesystem::path& root() const noexcept { return root_; }
  std::string now() const { return clock_(); }

  /// Returns true when the document was newly stored.
  bool put_document(const PagedDocument& doc) {
    auto lock = lock_for(doc.doc_id());
    const auto dir = root_ / doc.doc_id();
    const auto path = dir / "document.pgdoc.json";
    if (std::filesystem::exists(path)) return false;
    std::filesystem::create_directories(dir);
    write_atomic(path, canonical_serialize(doc));
    return true;
  }

  bool has_document(std::string_view doc_id) const {
    return is_hex_digest(doc_id) && std::filesystem::exists(root_ / std::string(doc_id) / "document.pgdoc.json");
  }

  PagedDocument get_document(std::string_view doc_id) const {
    if (!has_document(doc_id)) throw Error(ErrorKind::NotFound, "no document " + std::string(doc_id));
    auto bytes = read_file(root_ / std::string(doc_id) / "document.pgdoc.json");
    if (sha256_hex(bytes) != doc_id) {
      throw Error(ErrorKind::StorageCorrupt, "document bytes do not hash to " + std::string(doc_id));
    }
    return ingest_paged_json(bytes);
  }

  /// Writes document (if new), index and meta; returns the record directory.
  std::filesystem::path put(const IndexRecord& record, const PagedDocument& doc) {
    if (record.doc_id != doc.doc_id()) {
      throw Error(ErrorKind::PreconditionViolation, "record does not belong to this document");
    }
    put_document(doc);
    auto lock = lock_for(record.doc_id);
    const auto dir = root_ / record.doc_id;
    const std::string index_bytes = serialize_index(record.index);
    const std::string doc_bytes = canonical_serialize(doc);

    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    meta["doc_id"] = record.doc_id;
    meta["backend"] = to_json(record.backend);
    meta["created_at"] = record.created_at;
    meta["pipeline_version"] = record.pipeline_version;
    meta["diagnostics"] = record.diagnostics;
    nlohmann::ordered_json digests = nlohmann::ordered_json::object();
    digests["document.pgdoc.json"] = sha256_hex(doc_bytes);
    digests["index.json"] = sha256_hex(index_bytes);
    meta["digests"] = std::move(digests);

    write_atomic(dir / "index.json", index_bytes);
    write_atomic(dir / "meta.json", meta.dump(2) + "\n");
    return dir;
  }

  IndexRecord get(std::string_view doc_id) const {
    // A concurrent re-run swaps index.json and meta.json with two renames;
    // a reader caught between them sees a digest mismatch, so look again
    // before calling the record corrupt.
    for (int attempt = 0;; ++attempt) {
      try {
        return get_once(doc_id);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::StorageCorrupt || attempt == 2) throw;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
  }

  /// Indexed documents ordered by created_at, then doc_id.
  std::vector<StoreEntry> list() const {
    std::vector<StoreEntry> out;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      const auto meta_path = entry.path() / "meta.json";
      if (!std::filesystem::exists(meta_path)) continue;
      try {
        auto meta = nlohmann::json::parse(read_file(meta_path));
        out.push_back({meta.at("doc_id").get<std::string>(), meta.at("created_at").get<std::string>(),
                       backend_kind_from_string(meta.at("backend").at("kind").get<std::string>())});
      } catch (const std::exception&) {
        // Skipped here; get() reports it as StorageCorrupt.
      }
    }
    std::sort(out.begin(), out.end(), [](const StoreEntry& a, const StoreEntry& b) {
      return std::tie(a.created_at, a.doc_id) < std::tie(b.created_at, b.doc_id);
    });
    return out;
  }

private:
  IndexRecord get_once(std::string_view doc_id) const {
    if (!is_hex_digest(doc_id)) throw Error(ErrorKind::NotFound, "no record " + std::string(doc_id));
    const auto dir = root_ / std::string(doc_id);
    if (!std::filesystem::exists(dir / "meta.json")) {
      throw Error(ErrorKind::NotFound, "no index stored for " + std::string(doc_id));
    }
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::StorageCorrupt, std::string("meta.json unreadable: ") + e.what());
    }
    try {
      const auto& digests = meta.at("digests");
      const auto index_bytes = read_file(dir / "index.json");
      const auto doc_bytes = read_file(dir / "document.pgdoc.json");
      if (sha256_hex(index_bytes) != digests.at("index.json").get<std::string>()) {
        throw Error(ErrorKind::StorageCorrupt, "index.json digest mismatch for " + std::string(doc_id));
      }
      if (sha256_hex(doc_bytes) != digests.at("document.pgdoc.json").get<std::string>() ||
          sha256_hex(doc_bytes) != doc_id) {
        throw Error(ErrorKind::StorageCorrupt, "document digest mismatch for " + std::string(doc_id));
      }
      IndexRecord r;
      r.doc_id = meta.at("doc_id").get<std::string>();
      r.index = parse_index(index_bytes);
      r.backend = backend_from_json(meta.at("backend"));
      r.created_at = meta.at("created_at").get<std::string>();
      r.diagnostics = meta.at("diagnostics").get<std::vector<std::string>>();
      r.pipeline_version = meta.at("pipeline_version").get<std::string>();
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::StorageCorrupt, std::string("meta.json malformed: ") + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::StorageCorrupt) throw;
      throw Error(ErrorKind::StorageCorrupt, e.message());
    }
  }

  static std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::StorageCorrupt, "missing " + p.filename().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void write_atomic(const std::filesystem::path& target, std::string_view bytes) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    const auto tmp = target.parent_path() / ("." + target.filename().string() + ".tmp" + std::to_string(rng()));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + tmp.string());
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.flush();
      if (!out) throw Error(ErrorKind::ConfigError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  }

  std::unique_lock<std::mutex> lock_for(const std::string& doc_id) {
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard<std::mutex> guard(locks_mutex_);
      auto& slot = locks_[doc_id];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    std::unique_lock<std::mutex> lock(*m);
    // The map keeps the mutex alive for the lifetime of the store.
    return lock;
  }

  std::filesystem::path root_;
  Clock clock_;
  std::mutex locks_mutex_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> locks_;
};

struct Extraction {
  TocIndex index;
  std::vector<std::string> diagnostics;
  std::vector<int> toc_pages;  // heuristic path only
};

/// Builds transports for the LLM-backed paths.
struct TransportFactory {
  std::function<std::shared_ptr<ChatTransport>(const LlmConfig&)> llm = [](const LlmConfig& c) {
    return std::make_shared<HttpTransport>(c);
  };
  std::shared_ptr<ChatTransport> mock;  // used by BackendKind::Mock
};

class Pipeline {
public:
  Pipeline(ClassifierConfig classifier, TransportFactory transports = {},
           FewShotExample example = default_few_shot_example())
      : classifier_(std::move(classifier)), transports_(std::move(transports)), example_(std::move(example)) {
    classifier_.validate();
  }

  const ClassifierConfig& classifier() const noexcept { return classifier_; }

  /// Runs the chosen backend without persisting. Errors carry the stage that
  /// raised them.
  Extraction extract(const PagedDocument& doc, const BackendSpec& backend) const {
    backend.validate();
    if (backend.kind == BackendKind::Heuristic) return extract_heuristic(doc);
    std::shared_ptr<ChatTransport> transport;
    LlmConfig config;
    if (backend.kind == BackendKind::Mock) {
      if (!transports_.mock) throw Error(ErrorKind::ConfigError, "mock backend has no fixture transport");
      transport = transports_.mock;
      config = mock_llm_config();
    } else {
      config = *backend.llm_config;
      transport = transports_.llm(config);
    }
    LlmClient client(config, transport);
    Extraction out;
    CallStats stats;
    std::vector<std::string> lines;
    try {
      lines = client.retrieve_toc_text(doc, &stats);
    } catch (const Error& e) {
      throw e.with_stage("retrieve");
    }
    try {
      out.index = client.structure_toc(lines, example_, &stats);
    } catch (const Error& e) {
      throw e.with_stage("structure");
    }
    out.diagnostics = std::move(stats.diagnostics);
    out.diagnostics.push_back("llm requests: " + std::to_string(stats.requests));
    return out;
  }

  /// Extracts, persists and returns the stored record.
  IndexRecord run(const PagedDocument& doc, const BackendSpec& backend, IndexStore& store) const {
    auto ex = extract(doc, backend);
    IndexRecord record;
    record.doc_id = doc.doc_id();
    record.index = std::move(ex.index);
    record.backend = backend;
    record.created_at = store.now();
    record.diagnostics = std::move(ex.diagnostics);
    store.put(record, doc);
    return record;
  }

private:
  Extraction extract_heuristic(const PagedDocument& doc) const {
    auto labels = locate_toc(doc, classifier_);
    if (labels.empty()) throw Error(ErrorKind::NoTocFound, "no page classified as ToC").with_stage("locate");
    Extraction out;
    out.toc_pages = page_numbers(labels);
    try {
      auto parsed = parse_document(doc, out.toc_pages);
      out.index = std::move(parsed.index);
      out.diagnostics = std::move(parsed.diagnostics);
    } catch (const Error& e) {
      throw e.with_stage("parse");
    }
    return out;
  }

  ClassifierConfig classifier_;
  TransportFactory transports_;
  FewShotExample example_;
};

}  // namespace tocdex
