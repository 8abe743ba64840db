#pragma once

// JSON-over-HTTP front end for the pipeline.
//
//   POST /documents                       upload a .pgdoc.json body -> {"doc_id"}
//   POST /documents/{id}/index?backend=b  run the pipeline, store and return the record
//   GET  /documents/{id}/index            stored record
//   GET  /documents                       indexed documents ordered by created_at
//   POST /evaluate                        {"predicted", "gold", "policy"?} -> EvalReport
//   GET  /healthz                         liveness and version

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "tocdex/error.hpp"
#include "tocdex/evaluator.hpp"
#include "tocdex/locator.hpp"
#include "tocdex/pipeline.hpp"

namespace tocdex {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store_root = "store";
  BackendKind default_backend = BackendKind::Heuristic;
  std::size_t max_upload_bytes = 16u * 1024u * 1024u;
  std::optional<std::filesystem::path> classifier_config_path;
  std::optional<std::filesystem::path> mock_fixture_dir;
  std::optional<LlmConfig> llm;
};

/// Relative paths in the file resolve against the file's directory.
inline ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open service config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ServiceConfig c;
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  try {
    auto j = nlohmann::json::parse(ss.str());
    if (j.contains("host")) c.host = j.at("host").get<std::string>();
    if (j.contains("port")) c.port = j.at("port").get<int>();
    if (j.contains("store_root")) c.store_root = resolve(j.at("store_root").get<std::string>());
    if (j.contains("default_backend")) c.default_backend = backend_kind_from_string(j.at("default_backend").get<std::string>());
    if (j.contains("max_upload_bytes")) c.max_upload_bytes = j.at("max_upload_bytes").get<std::size_t>();
    if (j.contains("classifier_config")) c.classifier_config_path = resolve(j.at("classifier_config").get<std::string>());
    if (j.contains("mock_fixtures")) c.mock_fixture_dir = resolve(j.at("mock_fixtures").get<std::string>());
    if (j.contains("llm")) c.llm = llm_config_from_json(j.at("llm"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad service config: ") + e.what());
  }
  return c;
}

/// HTTP status for a pipeline or store error.
inline int http_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedInput:
    case ErrorKind::InvariantViolation:
    case ErrorKind::PreconditionViolation:
    case ErrorKind::ConfigError:
      return 400;
    case ErrorKind::NotFound:
      return 404;
    case ErrorKind::NoTocFound:
    case ErrorKind::NoRecognizableStructure:
      return 422;
    case ErrorKind::TransportError:
    case ErrorKind::EmptyReply:
    case ErrorKind::SchemaViolation:
      return 502;
    case ErrorKind::StorageCorrupt:
    case ErrorKind::UnboundPlaceholder:
      return 500;
  }
  return 500;
}

class Service {
public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        store_(config_.store_root),
        pipeline_(config_.classifier_config_path ? load_classifier_config(config_.classifier_config_path->string())
                                                 : ClassifierConfig{},
                  make_transports(config_)) {
    check_writable();
    server_.set_payload_max_length(config_.max_upload_bytes);
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to config port (0 picks a free port); returns the bound port or -1.
  int bind() {
    if (config_.port == 0) return server_.bind_to_any_port(config_.host);
    return server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }

  /// Blocks serving requests until stop().
  bool serve() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

  IndexStore& store() noexcept { return store_; }

private:
  static TransportFactory make_transports(const ServiceConfig& c) {
    TransportFactory t;
    if (c.mock_fixture_dir) t.mock = std::make_shared<MockTransport>(*c.mock_fixture_dir);
    return t;
  }

  void check_writable() {
    const auto probe = store_.root() / ".write-probe";
    std::ofstream out(probe);
    if (!out) throw Error(ErrorKind::ConfigError, "store root is not writable: " + store_.root().string());
    out.close();
    std::filesystem::remove(probe);
  }

  static void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
  }

  static void send_error(httplib::Response& res, int status, const Error& e) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["error"] = to_string(e.kind());
    j["message"] = e.message();
    if (!e.stage().empty()) j["stage"] = e.stage();
    if (!e.details().empty()) j["details"] = e.details();
    send_json(res, status, j.dump());
  }

  BackendSpec backend_for(const httplib::Request& req) const {
    BackendKind kind = config_.default_backend;
    if (req.has_param("backend")) kind = backend_kind_from_string(req.get_param_value("backend"));
    if (kind == BackendKind::Llm) {
      if (!config_.llm) throw Error(ErrorKind::ConfigError, "llm backend is not configured");
      return BackendSpec::llm(*config_.llm);
    }
    return {kind, std::nullopt};
  }

  template <typename Handler>
  auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_error(res, http_status_for(e.kind()), e);
      } catch (const std::exception& e) {
        send_error(res, 500, Error(ErrorKind::StorageCorrupt, e.what()));
      }
    };
  }

  void routes() {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      j["status"] = "ok";
      j["version"] = kPipelineVersion;
      send_json(res, 200, j.dump());
    });

    server_.Post("/documents", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto doc = ingest_paged_json(req.body);
      const bool created = store_.put_document(doc);
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      j["doc_id"] = doc.doc_id();
      send_json(res, created ? 201 : 200, j.dump());
    }));

    server_.Get("/documents", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto docs = nlohmann::ordered_json::array();
      for (const auto& e : store_.list()) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        j["doc_id"] = e.doc_id;
        j["created_at"] = e.created_at;
        j["backend"] = to_string(e.backend);
        docs.push_back(std::move(j));
      }
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      j["documents"] = std::move(docs);
      send_json(res, 200, j.dump());
    }));

    server_.Post(R"(/documents/([0-9a-f]{64})/index)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const std::string doc_id = req.matches[1];
                   const auto backend = backend_for(req);
                   const auto doc = store_.get_document(doc_id);
                   pipeline_.run(doc, backend, store_);
                   send_json(res, 200, to_json(store_.get(doc_id)).dump());
                 }));

    server_.Get(R"(/documents/([0-9a-f]{64})/index)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, to_json(store_.get(std::string(req.matches[1]))).dump());
                }));

    // Ids that are not 64 lowercase hex digits can never exist.
    auto unknown = [](const httplib::Request& req, httplib::Response& res) {
      send_error(res, 404, Error(ErrorKind::NotFound, "no document " + std::string(req.matches[1])));
    };
    server_.Post(R"(/documents/([^/]+)/index)", unknown);
    server_.Get(R"(/documents/([^/]+)/index)", unknown);

    server_.Post("/evaluate", [](const httplib::Request& req, httplib::Response& res) {
      try {
        auto j = nlohmann::json::parse(req.body);
        if (!j.is_object() || !j.contains("predicted") || !j.contains("gold")) {
          throw Error(ErrorKind::MalformedInput, "body needs \"predicted\" and \"gold\"");
        }
        auto predicted = index_from_json(j.at("predicted"));
        auto gold = index_from_json(j.at("gold"));
        auto policy = policy_from_json(j.contains("policy") ? j.at("policy") : nlohmann::json());
        send_json(res, 200, to_json(evaluate(predicted, gold, policy)).dump());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, Error(ErrorKind::MalformedInput, e.what()));
      } catch (const Error& e) {
        // Schema problems in the request body are client errors here.
        send_error(res, 400, e);
      }
    });
  }

  ServiceConfig config_;
  IndexStore store_;
  Pipeline pipeline_;
  httplib::Server server_;
};

}  // namespace tocdex
