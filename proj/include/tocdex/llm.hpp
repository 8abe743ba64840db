#pragma once

// Two-prompt LLM extraction over a chat-completions endpoint.
//
// The retrieval prompt asks the model for the ToC text contained in a
// document's raw page text; the structuring prompt shows one worked example
// plus the index JSON schema and asks for JSON only. Replies that fail to
// parse or validate get a repair turn while request budget remains.
//
// Wire format: POST {base_url}/v1/chat/completions with
//   {"model": ..., "temperature": ..., "messages": [{"role": ..., "content": ...}]}
// and the model text read from choices[0].message.content.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "tocdex/digest.hpp"
#include "tocdex/error.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/text.hpp"
#include "tocdex/tocindex.hpp"

namespace tocdex {

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

enum class PromptId { TocRetrieval, FewShotStructuring };

struct PromptTemplate {
  PromptId id;
  std::string system_text;
  std::string user_text_template;
};

namespace prompts {

inline const PromptTemplate& toc_retrieval() {
  static const PromptTemplate kTemplate{
      PromptId::TocRetrieval,
      "You are a document analysis assistant. You read raw text extracted from construction "
      "specification documents and locate their table of contents.",
      "The text below was extracted from a specification document, one page at a time. Each page "
      "begins with a line of the form \"=== PAGE n ===\".\n"
      "\n"
      "Find the table of contents and return its text exactly as it appears, one entry per line, "
      "in the original order. Keep every heading number, heading title, subheading number and "
      "subheading title. Leave out running headers, footers, page numbers and any text that is not "
      "part of the table of contents. Reply with the table of contents text only, without "
      "commentary.\n"
      "\n"
      "RAW TEXT:\n"
      "{{RAW_TEXT}}\n"};
  return kTemplate;
}

inline const PromptTemplate& few_shot_structuring() {
  static const PromptTemplate kTemplate{
      PromptId::FewShotStructuring,
      "You extract key information from the table of contents of a specification document and "
      "return it as JSON. You always follow the provided schema and reply with JSON only.",
      "Extract the heading numbers (hn), heading titles (ht), subheading numbers (shn) and "
      "subheading titles (sht) from the table of contents below. Format the output according to "
      "the provided schema, following the example. Do not include page numbers or dot leaders in "
      "titles.\n"
      "\n"
      "SCHEMA:\n"
      "{{SCHEMA}}\n"
      "\n"
      "EXAMPLE INPUT:\n"
      "{{EXAMPLE_IN}}\n"
      "\n"
      "EXAMPLE OUTPUT:\n"
      "{{EXAMPLE_OUT}}\n"
      "\n"
      "INPUT:\n"
      "{{TOC_TEXT}}\n"
      "\n"
      "OUTPUT:\n"};
  return kTemplate;
}

inline constexpr std::string_view kRepairInstruction = "Return only valid JSON matching the schema.";

}  // namespace prompts

using PromptBindings = std::map<std::string, std::string, std::less<>>;

namespace llm_detail {

/// Substitutes {{NAME}} placeholders in one pass; bound values are inserted
/// verbatim and never rescanned.
inline std::string substitute(std::string_view tmpl, const PromptBindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(ErrorKind::UnboundPlaceholder, "unterminated placeholder in template");
    }
    auto name = tmpl.substr(open + 2, close - open - 2);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw Error(ErrorKind::UnboundPlaceholder, "placeholder {{" + std::string(name) + "}} is not bound");
    }
    out.append(tmpl.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace llm_detail

/// Returns [system, user]. Every placeholder in the template must be bound.
inline std::vector<ChatMessage> render_prompt(const PromptTemplate& tmpl, const PromptBindings& bindings) {
  return {{"system", llm_detail::substitute(tmpl.system_text, bindings)},
          {"user", llm_detail::substitute(tmpl.user_text_template, bindings)}};
}

/// Page text as shown to the retrieval prompt.
inline std::string raw_text_of(const PagedDocument& doc) {
  std::string out;
  for (const auto& page : doc.pages()) {
    if (!out.empty()) out += '\n';
    out += "=== PAGE " + std::to_string(page.number) + " ===";
    for (const auto& line : page.lines) {
      out += '\n';
      out += line;
    }
  }
  return out;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

struct FewShotExample {
  std::string input_text;
  TocIndex output_index;
};

inline const FewShotExample& default_few_shot_example() {
  static const FewShotExample kExample{
      "TABLE OF CONTENTS\n"
      "DIVISION 03 - CONCRETE\n"
      "03 10 00 Concrete Forming and Accessories ........ 12\n"
      "03 30 00 Cast-in-Place Concrete ........ 18\n"
      "DIVISION 26 - ELECTRICAL\n"
      "26 05 00 Common Work Results for Electrical ........ 40\n"
      "26 24 16 Panelboards ........ 47",
      TocIndex{{
          Heading{"03", "CONCRETE",
                  {{"031000", "Concrete Forming and Accessories"}, {"033000", "Cast-in-Place Concrete"}}},
          Heading{"26", "ELECTRICAL",
                  {{"260500", "Common Work Results for Electrical"}, {"262416", "Panelboards"}}},
      }}};
  return kExample;
}

inline std::vector<ChatMessage> render_retrieval_prompt(const PagedDocument& doc) {
  return render_prompt(prompts::toc_retrieval(), {{"RAW_TEXT", raw_text_of(doc)}});
}

inline std::vector<ChatMessage> render_structuring_prompt(const std::vector<std::string>& toc_lines,
                                                         const FewShotExample& example) {
  return render_prompt(prompts::few_shot_structuring(),
                       {{"SCHEMA", std::string(kIndexJsonSchema)},
                        {"EXAMPLE_IN", example.input_text},
                        {"EXAMPLE_OUT", to_json(example.output_index).dump(2)},
                        {"TOC_TEXT", join_lines(toc_lines)}});
}

struct LlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_retries = 2;
  int timeout_seconds = 60;
  std::string api_key_source = "LLM_API_KEY";

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorKind::ConfigError, "temperature must be >= 0");
    if (max_retries < 0) throw Error(ErrorKind::ConfigError, "max_retries must be >= 0");
    if (timeout_seconds <= 0) throw Error(ErrorKind::ConfigError, "timeout must be positive");
    if (model_name.empty()) throw Error(ErrorKind::ConfigError, "model name is empty");
  }

  friend bool operator==(const LlmConfig&, const LlmConfig&) = default;
};

inline nlohmann::ordered_json to_json(const LlmConfig& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["base_url"] = c.base_url;
  j["model"] = c.model_name;
  j["temperature"] = c.temperature;
  j["max_retries"] = c.max_retries;
  j["timeout_seconds"] = c.timeout_seconds;
  j["api_key_env"] = c.api_key_source;
  return j;
}

inline LlmConfig llm_config_from_json(const nlohmann::json& j) {
  LlmConfig c;
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "LLM config must be an object");
  try {
    if (j.contains("base_url")) c.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model")) c.model_name = j.at("model").get<std::string>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
    if (j.contains("timeout_seconds")) c.timeout_seconds = j.at("timeout_seconds").get<int>();
    if (j.contains("api_key_env")) c.api_key_source = j.at("api_key_env").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad LLM config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Configuration used with the mock transport; fixture digests depend on it.
inline LlmConfig mock_llm_config() {
  LlmConfig c;
  c.base_url = "mock://fixtures";
  c.model_name = "mock-model";
  return c;
}

/// Exact request body bytes for a message list.
inline std::string chat_request_body(const LlmConfig& config, const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["model"] = config.model_name;
  j["temperature"] = config.temperature;
  auto msgs = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    nlohmann::ordered_json jm = nlohmann::ordered_json::object();
    jm["role"] = m.role;
    jm["content"] = m.content;
    msgs.push_back(std::move(jm));
  }
  j["messages"] = std::move(msgs);
  return j.dump();
}

inline std::string chat_reply_body(std::string_view content) {
  nlohmann::ordered_json msg = nlohmann::ordered_json::object();
  msg["role"] = "assistant";
  msg["content"] = content;
  nlohmann::ordered_json choice = nlohmann::ordered_json::object();
  choice["index"] = 0;
  choice["message"] = std::move(msg);
  choice["finish_reason"] = "stop";
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["object"] = "chat.completion";
  j["choices"] = nlohmann::ordered_json::array({std::move(choice)});
  return j.dump();
}

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Delivers one chat-completions request body and returns the raw reply.
/// Connection failures throw TransportError; HTTP errors come back as status.
class ChatTransport {
public:
  virtual ~ChatTransport() = default;
  virtual HttpReply post(const std::string& request_body) = 0;
};

class HttpTransport : public ChatTransport {
public:
  explicit HttpTransport(LlmConfig config) : config_(std::move(config)) {
    config_.validate();
    auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "base_url needs a scheme: " + config_.base_url);
    }
    auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = config_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpReply post(const std::string& request_body) override {
    httplib::Client client(origin_);
    if (!client.is_valid()) throw Error(ErrorKind::TransportError, "unsupported base_url " + config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_source.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(prefix_ + "/v1/chat/completions", headers, request_body, "application/json");
    if (!res) {
      throw Error(ErrorKind::TransportError,
                  "request to " + config_.base_url + " failed: " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  }

private:
  LlmConfig config_;
  std::string origin_;
  std::string prefix_;
};

/// Replies from a fixture directory: `<sha256 of request body>.reply` holds
/// the canned model text. Unknown requests get HTTP 404 naming the digest.
class MockTransport : public ChatTransport {
public:
  explicit MockTransport(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {
    if (!std::filesystem::is_directory(dir_)) {
      throw Error(ErrorKind::ConfigError, "mock fixture directory not found: " + dir_.string());
    }
  }

  static std::string digest_of(const std::string& request_body) { return sha256_hex(request_body); }

  HttpReply post(const std::string& request_body) override {
    const auto digest = digest_of(request_body);
    std::ifstream in(dir_ / (digest + ".reply"), std::ios::binary);
    if (!in) return {404, R"({"error":"no mock fixture for request digest )" + digest + "\"}"};
    std::ostringstream ss;
    ss << in.rdbuf();
    return {200, chat_reply_body(ss.str())};
  }

private:
  std::filesystem::path dir_;
};

/// Transport backed by a callable; handy for scripted tests.
class FunctionTransport : public ChatTransport {
public:
  using Handler = std::function<HttpReply(const std::string&)>;
  explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}
  HttpReply post(const std::string& request_body) override { return handler_(request_body); }

private:
  Handler handler_;
};

/// Strips an optional surrounding markdown code fence (``` or ```json).
inline std::string strip_code_fences(std::string_view reply) {
  std::string_view s = text::trim(reply);
  if (s.substr(0, 3) != "```") return std::string(s);
  s.remove_prefix(3);
  std::size_t tag = 0;
  while (tag < s.size() && ((s[tag] >= 'a' && s[tag] <= 'z') || (s[tag] >= 'A' && s[tag] <= 'Z'))) ++tag;
  s.remove_prefix(tag);
  s = text::trim(s);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s.remove_suffix(3);
  return std::string(text::trim(s));
}

struct CallStats {
  std::size_t requests = 0;
  std::vector<std::string> diagnostics;
};

class LlmClient {
public:
  LlmClient(LlmConfig config, std::shared_ptr<ChatTransport> transport)
      : config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
    if (!transport_) throw Error(ErrorKind::ConfigError, "LLM client needs a transport");
  }

  const LlmConfig& config() const noexcept { return config_; }

  /// Sends the retrieval prompt; transport failures are retried up to
  /// max_retries times.
  std::vector<std::string> retrieve_toc_text(const PagedDocument& doc, CallStats* stats = nullptr) const {
    const auto messages = render_retrieval_prompt(doc);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      auto content = send(messages, last_error, stats);
      if (!content) continue;
      std::vector<std::string> lines;
      for (auto& l : text::split_lines(*content)) {
        auto t = text::rtrim(l);
        if (!text::trim(t).empty()) lines.emplace_back(t);
      }
      if (lines.empty()) throw Error(ErrorKind::EmptyReply, "model returned no ToC text");
      return lines;
    }
    throw Error(ErrorKind::TransportError, last_error);
  }

  /// Sends the few-shot structuring prompt. At most 1 + max_retries requests
  /// are made in total, shared between transport retries and repair turns.
  TocIndex structure_toc(const std::vector<std::string>& toc_lines, const FewShotExample& example,
                         CallStats* stats = nullptr) const {
    if (toc_lines.empty()) throw Error(ErrorKind::PreconditionViolation, "no ToC lines to structure");
    auto messages = render_structuring_prompt(toc_lines, example);
    std::string last_error;
    bool last_was_transport = true;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      auto content = send(messages, last_error, stats);
      if (!content) {
        last_was_transport = true;
        continue;
      }
      if (text::trim(*content).empty()) throw Error(ErrorKind::EmptyReply, "model returned an empty reply");
      try {
        return parse_index(strip_code_fences(*content));
      } catch (const Error& e) {
        last_error = e.message();
        last_was_transport = false;
        if (stats) stats->diagnostics.push_back("attempt " + std::to_string(attempt + 1) + ": " + last_error);
        messages.push_back({"assistant", *content});
        messages.push_back({"user", "The previous reply could not be used: " + last_error + "\n" +
                                        std::string(prompts::kRepairInstruction)});
      }
    }
    throw Error(last_was_transport ? ErrorKind::TransportError : ErrorKind::SchemaViolation,
                last_error + " (after " + std::to_string(config_.max_retries + 1) + " attempts)");
  }

private:
  std::optional<std::string> send(const std::vector<ChatMessage>& messages, std::string& error,
                                  CallStats* stats) const {
    if (stats) ++stats->requests;
    HttpReply reply;
    try {
      reply = transport_->post(chat_request_body(config_, messages));
    } catch (const Error& e) {
      error = e.message();
      return std::nullopt;
    }
    if (reply.status != 200) {
      error = "endpoint returned HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200);
      return std::nullopt;
    }
    try {
      auto j = nlohmann::json::parse(reply.body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_null()) return std::string();
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      error = std::string("malformed completion envelope: ") + e.what();
      return std::nullopt;
    }
  }

  LlmConfig config_;
  std::shared_ptr<ChatTransport> transport_;
};

}  // namespace tocdex
