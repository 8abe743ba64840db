#pragma once

// The structured ToC index and its canonical JSON form:
//   {"toc":[{"hn": string, "ht": string, "sh":[{"shn": string, "sht": string}]}]}
// hn/ht are a heading's number and title, shn/sht a subheading's.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tocdex/error.hpp"
#include "tocdex/text.hpp"

namespace tocdex {

struct Subheading {
  std::string shn;
  std::string sht;

  friend bool operator==(const Subheading&, const Subheading&) = default;
};

struct Heading {
  std::string hn;
  std::string ht;
  std::vector<Subheading> subheadings;

  friend bool operator==(const Heading&, const Heading&) = default;
};

struct TocIndex {
  std::vector<Heading> headings;

  std::size_t subheading_count() const {
    std::size_t n = 0;
    for (const auto& h : headings) n += h.subheadings.size();
    return n;
  }

  friend bool operator==(const TocIndex&, const TocIndex&) = default;
};

inline nlohmann::ordered_json to_json(const TocIndex& index) {
  auto toc = nlohmann::ordered_json::array();
  for (const auto& h : index.headings) {
    nlohmann::ordered_json jh = nlohmann::ordered_json::object();
    jh["hn"] = h.hn;
    jh["ht"] = h.ht;
    auto sh = nlohmann::ordered_json::array();
    for (const auto& s : h.subheadings) {
      nlohmann::ordered_json js = nlohmann::ordered_json::object();
      js["shn"] = s.shn;
      js["sht"] = s.sht;
      sh.push_back(std::move(js));
    }
    jh["sh"] = std::move(sh);
    toc.push_back(std::move(jh));
  }
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["toc"] = std::move(toc);
  return j;
}

inline std::string serialize_index(const TocIndex& index) { return to_json(index).dump(); }

namespace detail {

template <typename Json>
std::string required_text(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorKind::SchemaViolation, where + ": \"" + key + "\" must be a string");
  }
  auto value = it->template get<std::string>();
  if (text::trim(value).empty()) {
    throw Error(ErrorKind::SchemaViolation, where + ": \"" + key + "\" must be non-empty");
  }
  return value;
}

template <typename Json>
void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto k : allowed) known = known || it.key() == k;
    if (!known) {
      throw Error(ErrorKind::SchemaViolation, where + ": unexpected key \"" + it.key() + "\"");
    }
  }
}

}  // namespace detail

/// Strict schema check: every member required, no extra keys, no empty
/// numbers or titles. Throws SchemaViolation naming the offending path.
template <typename Json>
TocIndex index_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::SchemaViolation, "index must be a JSON object");
  detail::reject_unknown_keys(j, {"toc"}, "$");
  auto toc = j.find("toc");
  if (toc == j.end() || !toc->is_array()) {
    throw Error(ErrorKind::SchemaViolation, "$: \"toc\" must be an array");
  }
  TocIndex index;
  for (std::size_t i = 0; i < toc->size(); ++i) {
    const auto& jh = (*toc)[i];
    std::string where = "$.toc[" + std::to_string(i) + "]";
    if (!jh.is_object()) throw Error(ErrorKind::SchemaViolation, where + " must be an object");
    detail::reject_unknown_keys(jh, {"hn", "ht", "sh"}, where);
    Heading h;
    h.hn = detail::required_text(jh, "hn", where);
    h.ht = detail::required_text(jh, "ht", where);
    auto sh = jh.find("sh");
    if (sh == jh.end() || !sh->is_array()) {
      throw Error(ErrorKind::SchemaViolation, where + ": \"sh\" must be an array");
    }
    for (std::size_t k = 0; k < sh->size(); ++k) {
      const auto& js = (*sh)[k];
      std::string swhere = where + ".sh[" + std::to_string(k) + "]";
      if (!js.is_object()) throw Error(ErrorKind::SchemaViolation, swhere + " must be an object");
      detail::reject_unknown_keys(js, {"shn", "sht"}, swhere);
      h.subheadings.push_back(
          {detail::required_text(js, "shn", swhere), detail::required_text(js, "sht", swhere)});
    }
    index.headings.push_back(std::move(h));
  }
  return index;
}

inline TocIndex parse_index(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("invalid JSON: ") + e.what());
  }
  return index_from_json(j);
}

/// JSON Schema of the canonical index, shown to the LLM and shipped with
/// the service documentation.
inline constexpr std::string_view kIndexJsonSchema = R"({
  "type": "object",
  "required": ["toc"],
  "additionalProperties": false,
  "properties": {
    "toc": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["hn", "ht", "sh"],
        "additionalProperties": false,
        "properties": {
          "hn": {"type": "string", "minLength": 1},
          "ht": {"type": "string", "minLength": 1},
          "sh": {
            "type": "array",
            "items": {
              "type": "object",
              "required": ["shn", "sht"],
              "additionalProperties": false,
              "properties": {
                "shn": {"type": "string", "minLength": 1},
                "sht": {"type": "string", "minLength": 1}
              }
            }
          }
        }
      }
    }
  }
})";

}  // namespace tocdex
