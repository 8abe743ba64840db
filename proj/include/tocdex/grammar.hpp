#pragma once

// Line grammars for the two specification ToC layouts.
//
//   FormatA (section / article):
//     A1 heading     ^SECTION\s+(\d{4,6})\s*[-–—:]\s*(.+)$
//     A2 subheading  ^(\d+(\.\d+)+)\s+(.+?)(\s*\.{3,}\s*\d+)?$
//   FormatB (MasterFormat division / section):
//     B1 heading     ^DIVISION\s+(\d{1,2})\s*[-–—:]?\s*(.+)$
//     B2 subheading  ^(\d{2}\s?\d{2}\s?\d{2})\s+(.+?)(\s*\.{3,}\s*\d+)?$
//
// Keywords are case-insensitive; \s is the ASCII whitespace set and the
// dash class holds the hyphen, en dash and em dash as whole characters.
// The matchers below are hand-written but reproduce the backtracking result
// of the patterns exactly (the tests check them against std::regex).

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tocdex/error.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/text.hpp"
#include "tocdex/tocindex.hpp"

namespace tocdex {

enum class FormatKind { FormatA, FormatB };

inline std::string_view to_string(FormatKind f) { return f == FormatKind::FormatA ? "A" : "B"; }

/// Raw capture groups of a rule, before title cleanup.
struct RuleMatch {
  std::string number;
  std::string title;
};

namespace grammar {

namespace detail {

inline std::size_t count_spaces(std::string_view s, std::size_t pos) {
  std::size_t n = 0;
  while (pos + n < s.size() && text::is_space(s[pos + n])) ++n;
  return n;
}

inline std::size_t count_digits(std::string_view s, std::size_t pos) {
  std::size_t n = 0;
  while (pos + n < s.size() && text::is_digit(s[pos + n])) ++n;
  return n;
}

/// Byte length of a heading separator at `pos` ('-', ':', en dash, em dash), or 0.
inline std::size_t separator_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  if (s[pos] == '-' || s[pos] == ':') return 1;
  if (s.substr(pos, 3) == "\xE2\x80\x93" || s.substr(pos, 3) == "\xE2\x80\x94") return 3;
  return 0;
}

/// Shared tail of the heading rules: \s* SEP \s* (.+)$ where SEP may be optional.
/// Tries the alternatives in the order a backtracking engine would.
inline std::optional<std::string> heading_tail(std::string_view s, std::size_t q, bool sep_optional) {
  const std::size_t w1max = count_spaces(s, q);
  for (std::size_t w1 = w1max + 1; w1-- > 0;) {
    const std::size_t r = q + w1;
    const std::size_t sep = separator_at(s, r);
    for (int take = 1; take >= 0; --take) {
      if (take == 1 && sep == 0) continue;
      if (take == 0 && !sep_optional) continue;
      const std::size_t start = r + (take == 1 ? sep : 0);
      const std::size_t w2max = count_spaces(s, start);
      for (std::size_t w2 = w2max + 1; w2-- > 0;) {
        if (start + w2 < s.size()) return std::string(s.substr(start + w2));
      }
    }
  }
  return std::nullopt;
}

/// Earliest start of a suffix matching \s*\.{3,}\s*\d+$ , or npos.
inline std::size_t leader_suffix_start(std::string_view s) {
  std::size_t b = s.size();
  std::size_t digits = 0;
  while (b > 0 && text::is_digit(s[b - 1])) --b, ++digits;
  if (digits == 0) return std::string_view::npos;
  while (b > 0 && text::is_space(s[b - 1])) --b;
  std::size_t c = b;
  while (c > 0 && s[c - 1] == '.') --c;
  if (b - c < 3) return std::string_view::npos;
  while (c > 0 && text::is_space(s[c - 1])) --c;
  return c;
}

/// Lazy (.+?) followed by an optional page-reference suffix and $.
/// Valid suffix starts form the range [first, last]; returns the title group.
inline std::optional<std::string> lazy_title(std::string_view s, std::size_t t) {
  if (t >= s.size()) return std::nullopt;
  std::size_t end = s.size();
  if (std::size_t first = leader_suffix_start(s); first != std::string_view::npos) {
    // Later starts inside the dot run stay valid while at least three dots remain.
    std::size_t digits_begin = s.size();
    while (digits_begin > 0 && text::is_digit(s[digits_begin - 1])) --digits_begin;
    std::size_t b = digits_begin;
    while (b > 0 && text::is_space(s[b - 1])) --b;
    const std::size_t last = b - 3;
    if (first >= t + 1) {
      end = first;
    } else if (last >= t + 1) {
      end = t + 1;
    }
  }
  return std::string(s.substr(t, end - t));
}

/// \s+ then the lazy title; backtracks the whitespace run if nothing follows it.
inline std::optional<std::string> spaced_lazy_title(std::string_view s, std::size_t q) {
  const std::size_t wmax = count_spaces(s, q);
  for (std::size_t w = wmax; w >= 1; --w) {
    if (auto title = lazy_title(s, q + w)) return title;
  }
  return std::nullopt;
}

}  // namespace detail

/// B1: DIVISION heading.
inline std::optional<RuleMatch> match_division(std::string_view line) {
  constexpr std::string_view kKeyword = "DIVISION";
  if (!text::iequals_prefix(line, kKeyword)) return std::nullopt;
  std::size_t p = kKeyword.size();
  const std::size_t ws = detail::count_spaces(line, p);
  if (ws == 0) return std::nullopt;
  p += ws;
  const std::size_t digits = detail::count_digits(line, p);
  for (std::size_t k = std::min<std::size_t>(2, digits); k >= 1; --k) {
    if (auto title = detail::heading_tail(line, p + k, /*sep_optional=*/true)) {
      return RuleMatch{std::string(line.substr(p, k)), std::move(*title)};
    }
  }
  return std::nullopt;
}

/// B2: six-digit MasterFormat section, optionally spaced "03 30 00".
/// The returned number keeps its original spacing.
inline std::optional<RuleMatch> match_masterformat_section(std::string_view line) {
  auto two_digits = [&](std::size_t pos) {
    return pos + 2 <= line.size() && text::is_digit(line[pos]) && text::is_digit(line[pos + 1]);
  };
  if (!two_digits(0)) return std::nullopt;
  for (int first = 1; first >= 0; --first) {
    std::size_t p = 2;
    if (first == 1) {
      if (p >= line.size() || !text::is_space(line[p])) continue;
      ++p;
    }
    if (!two_digits(p)) continue;
    p += 2;
    for (int second = 1; second >= 0; --second) {
      std::size_t q = p;
      if (second == 1) {
        if (q >= line.size() || !text::is_space(line[q])) continue;
        ++q;
      }
      if (!two_digits(q)) continue;
      q += 2;
      if (auto title = detail::spaced_lazy_title(line, q)) {
        return RuleMatch{std::string(line.substr(0, q)), std::move(*title)};
      }
    }
  }
  return std::nullopt;
}

/// A1: SECTION heading with a 4-6 digit number.
inline std::optional<RuleMatch> match_section(std::string_view line) {
  constexpr std::string_view kKeyword = "SECTION";
  if (!text::iequals_prefix(line, kKeyword)) return std::nullopt;
  std::size_t p = kKeyword.size();
  const std::size_t ws = detail::count_spaces(line, p);
  if (ws == 0) return std::nullopt;
  p += ws;
  const std::size_t digits = detail::count_digits(line, p);
  if (digits < 4) return std::nullopt;
  for (std::size_t k = std::min<std::size_t>(6, digits); k >= 4; --k) {
    if (auto title = detail::heading_tail(line, p + k, /*sep_optional=*/false)) {
      return RuleMatch{std::string(line.substr(p, k)), std::move(*title)};
    }
  }
  return std::nullopt;
}

/// A2: dotted article number such as 1.1 or 2.3.4.
inline std::optional<RuleMatch> match_article(std::string_view line) {
  std::size_t p = detail::count_digits(line, 0);
  if (p == 0) return std::nullopt;
  int groups = 0;
  while (p + 1 < line.size() && line[p] == '.' && text::is_digit(line[p + 1])) {
    p += 1 + detail::count_digits(line, p + 1);
    ++groups;
  }
  if (groups == 0) return std::nullopt;
  if (auto title = detail::spaced_lazy_title(line, p)) {
    return RuleMatch{std::string(line.substr(0, p)), std::move(*title)};
  }
  return std::nullopt;
}

inline bool matches_any_rule(std::string_view line) {
  return match_division(line) || match_masterformat_section(line) || match_section(line) ||
         match_article(line);
}

/// Strips trailing dot leaders and trailing page references from a captured
/// title. A trailing integer counts as a page reference when whitespace or a
/// run of three or more dots separates it from the title text.
inline std::string clean_title(std::string_view raw) {
  std::string_view t = text::trim(raw);
  for (bool changed = true; changed && !t.empty();) {
    changed = false;
    std::size_t a = t.size();
    while (a > 0 && text::is_digit(t[a - 1])) --a;
    if (a < t.size() && a > 0) {
      std::size_t dots = 0;
      while (a > dots && t[a - 1 - dots] == '.') ++dots;
      if (text::is_space(t[a - 1]) || dots >= 3) {
        t = text::rtrim(t.substr(0, a));
        changed = true;
      }
    }
    std::size_t d = t.size();
    while (d > 0 && t[d - 1] == '.') --d;
    if (t.size() - d >= 3) {
      t = text::rtrim(t.substr(0, d));
      changed = true;
    }
  }
  return std::string(t);
}

}  // namespace grammar

struct ParseResult {
  TocIndex index;
  FormatKind format = FormatKind::FormatA;
  std::vector<std::string> diagnostics;
};

namespace detail {

struct SourceLine {
  std::string_view text;
  std::string where;
};

inline FormatKind detect_format_impl(std::span<const SourceLine> lines) {
  if (lines.empty()) throw Error(ErrorKind::PreconditionViolation, "no lines to inspect");
  std::size_t a1 = 0;
  std::size_t b1 = 0;
  bool any = false;
  for (const auto& l : lines) {
    const bool is_b1 = grammar::match_division(l.text).has_value();
    const bool is_a1 = grammar::match_section(l.text).has_value();
    b1 += is_b1;
    a1 += is_a1;
    any = any || is_a1 || is_b1 || grammar::match_masterformat_section(l.text) ||
          grammar::match_article(l.text);
  }
  if (!any) throw Error(ErrorKind::NoRecognizableStructure, "no line matches any ToC rule");
  return b1 > a1 ? FormatKind::FormatB : FormatKind::FormatA;
}

inline ParseResult parse_impl(std::span<const SourceLine> lines, FormatKind format) {
  if (lines.empty()) throw Error(ErrorKind::PreconditionViolation, "no lines to parse");
  ParseResult result;
  result.format = format;
  auto& headings = result.index.headings;
  auto& diags = result.diagnostics;
  bool after_subheading = false;

  for (const auto& line : lines) {
    if (text::trim(line.text).empty()) continue;
    const bool a = format == FormatKind::FormatA;
    if (auto h = a ? grammar::match_section(line.text) : grammar::match_division(line.text)) {
      auto title = grammar::clean_title(h->title);
      if (title.empty()) {
        diags.push_back(line.where + ": heading without title skipped: " + std::string(line.text));
        after_subheading = false;
        continue;
      }
      headings.push_back(Heading{std::move(h->number), std::move(title), {}});
      after_subheading = false;
      continue;
    }
    auto s = a ? grammar::match_article(line.text) : grammar::match_masterformat_section(line.text);
    if (s) {
      if (headings.empty()) {
        diags.push_back(line.where + ": OrphanSubheading: " + std::string(line.text));
        after_subheading = false;
        continue;
      }
      auto title = grammar::clean_title(s->title);
      if (title.empty()) {
        diags.push_back(line.where + ": subheading without title skipped: " + std::string(line.text));
        after_subheading = false;
        continue;
      }
      std::string number = a ? std::move(s->number) : text::remove_whitespace(s->number);
      headings.back().subheadings.push_back(Subheading{std::move(number), std::move(title)});
      after_subheading = true;
      continue;
    }
    diags.push_back(line.where + (after_subheading ? ": unmatched line after subheading (not joined): "
                                                   : ": unmatched line skipped: ") +
                    std::string(line.text));
    after_subheading = false;
  }
  if (headings.empty()) {
    throw Error(ErrorKind::NoRecognizableStructure, "no headings recognised", diags);
  }
  return result;
}

inline std::vector<SourceLine> number_lines(std::span<const std::string> lines) {
  std::vector<SourceLine> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back({lines[i], "line " + std::to_string(i + 1)});
  }
  return out;
}

}  // namespace detail

/// FormatB when more lines match the DIVISION rule than the SECTION rule.
inline FormatKind detect_format(std::span<const std::string> lines) {
  auto src = detail::number_lines(lines);
  return detail::detect_format_impl(src);
}

inline ParseResult parse_toc(std::span<const std::string> lines, FormatKind format) {
  auto src = detail::number_lines(lines);
  return detail::parse_impl(src, format);
}

/// Parses the given ToC pages of `doc` as one line stream, in page order.
inline ParseResult parse_document(const PagedDocument& doc, std::span<const int> toc_pages) {
  if (toc_pages.empty()) throw Error(ErrorKind::PreconditionViolation, "no ToC pages given");
  std::vector<int> pages(toc_pages.begin(), toc_pages.end());
  std::sort(pages.begin(), pages.end());
  pages.erase(std::unique(pages.begin(), pages.end()), pages.end());

  std::vector<detail::SourceLine> src;
  for (int number : pages) {
    const auto& page = doc.page(number);
    for (std::size_t i = 0; i < page.lines.size(); ++i) {
      src.push_back({page.lines[i], "page " + std::to_string(number) + " line " + std::to_string(i + 1)});
    }
  }
  if (src.empty()) {
    throw Error(ErrorKind::NoRecognizableStructure, "ToC pages contain no text");
  }
  const FormatKind format = detail::detect_format_impl(src);
  return detail::parse_impl(src, format);
}

}  // namespace tocdex
