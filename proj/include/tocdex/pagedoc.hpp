#pragma once

// Paged documents: ordered page texts with a content-addressed identifier.
//
// Interchange format (.pgdoc.json):
//   {"title": string?, "pages": [{"number": int, "lines": [string]}]}
// Page numbers run 1..N without gaps. The canonical serialization emits the
// keys in that fixed order with no insignificant whitespace; the document id
// is the SHA-256 of those bytes.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tocdex/digest.hpp"
#include "tocdex/error.hpp"
#include "tocdex/text.hpp"

namespace tocdex {

inline constexpr std::size_t kMaxLineChars = 4096;

struct PageText {
  int number = 0;
  std::vector<std::string> lines;

  friend bool operator==(const PageText&, const PageText&) = default;
};

namespace detail {

/// Applies the line hygiene rules: embedded CR/LF split a line, trailing
/// whitespace goes, and anything past kMaxLineChars wraps onto a new line.
inline void append_normalized(std::vector<std::string>& out, std::string_view raw) {
  for (const auto& piece : text::split_lines(raw)) {
    std::string_view trimmed = text::rtrim(piece);
    if (text::utf8_length(trimmed) <= kMaxLineChars) {
      out.emplace_back(trimmed);
      continue;
    }
    for (auto& chunk : text::hard_wrap(trimmed, kMaxLineChars)) {
      out.emplace_back(text::rtrim(chunk));
    }
  }
}

}  // namespace detail

class PagedDocument {
public:
  /// Validates and normalizes. Page numbers must already be 1..N.
  PagedDocument(std::optional<std::string> title, std::vector<PageText> pages)
      : title_(std::move(title)) {
    if (pages.empty()) {
      throw Error(ErrorKind::MalformedInput, "document has no pages");
    }
    if (title_ && !text::is_valid_utf8(*title_)) {
      throw Error(ErrorKind::MalformedInput, "title is not valid UTF-8");
    }
    pages_.reserve(pages.size());
    for (std::size_t i = 0; i < pages.size(); ++i) {
      auto& page = pages[i];
      if (page.number != static_cast<int>(i) + 1) {
        throw Error(ErrorKind::InvariantViolation,
                    "page numbers must be contiguous from 1; position " + std::to_string(i + 1) +
                        " has number " + std::to_string(page.number));
      }
      PageText clean{page.number, {}};
      clean.lines.reserve(page.lines.size());
      for (const auto& line : page.lines) {
        if (!text::is_valid_utf8(line)) {
          throw Error(ErrorKind::MalformedInput,
                      "page " + std::to_string(page.number) + " contains invalid UTF-8");
        }
        detail::append_normalized(clean.lines, line);
      }
      pages_.push_back(std::move(clean));
    }
    doc_id_ = sha256_hex(canonical_bytes());
  }

  const std::string& doc_id() const noexcept { return doc_id_; }
  const std::optional<std::string>& title() const noexcept { return title_; }
  const std::vector<PageText>& pages() const noexcept { return pages_; }
  std::size_t page_count() const noexcept { return pages_.size(); }

  /// 1-based lookup.
  const PageText& page(int number) const {
    if (number < 1 || number > static_cast<int>(pages_.size())) {
      throw Error(ErrorKind::PreconditionViolation,
                  "page " + std::to_string(number) + " is outside the document");
    }
    return pages_[static_cast<std::size_t>(number - 1)];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (title_) j["title"] = *title_;
    auto pages = nlohmann::ordered_json::array();
    for (const auto& p : pages_) {
      nlohmann::ordered_json page = nlohmann::ordered_json::object();
      page["number"] = p.number;
      page["lines"] = p.lines;
      pages.push_back(std::move(page));
    }
    j["pages"] = std::move(pages);
    return j;
  }

  std::string canonical_bytes() const { return to_json().dump(); }

  friend bool operator==(const PagedDocument& a, const PagedDocument& b) {
    return a.title_ == b.title_ && a.pages_ == b.pages_;
  }

private:
  std::optional<std::string> title_;
  std::vector<PageText> pages_;
  std::string doc_id_;
};

inline std::string canonical_serialize(const PagedDocument& doc) { return doc.canonical_bytes(); }

/// Builds a document from an already parsed interchange object. Any "doc_id"
/// member is ignored; the id is always recomputed.
inline PagedDocument document_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::MalformedInput, "document must be a JSON object");
  std::optional<std::string> title;
  if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorKind::MalformedInput, "\"title\" must be a string");
    title = it->get<std::string>();
  }
  auto pages_it = j.find("pages");
  if (pages_it == j.end()) throw Error(ErrorKind::MalformedInput, "missing \"pages\"");
  if (!pages_it->is_array()) throw Error(ErrorKind::MalformedInput, "\"pages\" must be an array");
  if (pages_it->empty()) throw Error(ErrorKind::MalformedInput, "\"pages\" is empty");

  std::vector<PageText> pages;
  pages.reserve(pages_it->size());
  for (const auto& p : *pages_it) {
    if (!p.is_object()) throw Error(ErrorKind::MalformedInput, "page entry must be an object");
    auto num = p.find("number");
    if (num == p.end() || !num->is_number_integer()) {
      throw Error(ErrorKind::MalformedInput, "page entry needs an integer \"number\"");
    }
    PageText page;
    page.number = num->get<int>();
    if (auto lines = p.find("lines"); lines != p.end()) {
      if (!lines->is_array()) throw Error(ErrorKind::MalformedInput, "\"lines\" must be an array");
      for (const auto& line : *lines) {
        if (!line.is_string()) throw Error(ErrorKind::MalformedInput, "lines must be strings");
        page.lines.push_back(line.get<std::string>());
      }
    }
    pages.push_back(std::move(page));
  }
  return PagedDocument(std::move(title), std::move(pages));
}

inline PagedDocument ingest_paged_json(std::string_view bytes) {
  if (!text::is_valid_utf8(bytes)) throw Error(ErrorKind::MalformedInput, "input is not valid UTF-8");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedInput, std::string("invalid JSON: ") + e.what());
  }
  return document_from_json(j);
}

inline constexpr std::string_view kFormFeedDelimiter = "\f";

/// Splits dumped text into pages at lines equal to `page_delimiter`.
/// A single trailing newline does not produce an extra empty line.
inline PagedDocument ingest_plain_text(std::string_view text_in,
                                       std::string_view page_delimiter = kFormFeedDelimiter,
                                       std::optional<std::string> title = std::nullopt) {
  if (text_in.empty()) throw Error(ErrorKind::MalformedInput, "empty text");
  if (page_delimiter.empty()) {
    throw Error(ErrorKind::PreconditionViolation, "page delimiter must be non-empty");
  }
  if (!text::is_valid_utf8(text_in)) throw Error(ErrorKind::MalformedInput, "text is not valid UTF-8");

  auto lines = text::split_lines(text_in);
  if (lines.size() > 1 && lines.back().empty()) lines.pop_back();

  std::vector<PageText> pages(1);
  pages.back().number = 1;
  for (auto& line : lines) {
    if (line == page_delimiter) {
      pages.push_back(PageText{static_cast<int>(pages.size()) + 1, {}});
      continue;
    }
    pages.back().lines.push_back(std::move(line));
  }
  return PagedDocument(std::move(title), std::move(pages));
}

}  // namespace tocdex
