#pragma once

// Seeded generator of synthetic specification documents.
//
// Each document is cover pages, ToC pages and body pages. ToC entries are
// rendered with exactly the line grammars of grammar.hpp and decorated with
// optional noise (dot leaders, page references, running headers and footers,
// blank pages). Alongside the document the generator returns the gold index,
// gold page labels, and a prediction fixture: the gold index with injected
// title corruptions, each recorded in the corruption log.
//
// Random draws use std::mt19937_64 with hand-rolled range reduction so output
// is byte-identical across standard library implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tocdex/digest.hpp"
#include "tocdex/error.hpp"
#include "tocdex/grammar.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/tocindex.hpp"

namespace tocdex {

struct IntRange {
  int lo = 0;
  int hi = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct NoiseSpec {
  double dot_leader_prob = 0.0;
  double trailing_pageno_prob = 0.0;
  double header_footer_prob = 0.0;
  double blank_page_prob = 0.0;
  /// Applies to the emitted prediction fixture only; gold is never touched.
  double title_corruption_prob = 0.0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct CorpusSpec {
  std::uint64_t seed = 0;
  FormatKind format = FormatKind::FormatB;
  IntRange n_headings{3, 12};
  IntRange subheadings_per_heading{2, 8};
  NoiseSpec noise;
  IntRange n_cover_pages{1, 2};
  IntRange n_body_pages{5, 30};
  /// Entry lines per ToC page; further entries spill onto a new page.
  int toc_lines_per_page = 40;

  void validate() const;
  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

struct GoldPageLabel {
  int page = 0;
  bool is_toc = false;

  friend bool operator==(const GoldPageLabel&, const GoldPageLabel&) = default;
};

struct Corruption {
  std::string field;  // "ht" or "sht"
  std::size_t heading = 0;
  std::optional<std::size_t> subheading;
  std::string gold;
  std::string corrupted;

  friend bool operator==(const Corruption&, const Corruption&) = default;
};

struct GeneratedDoc {
  std::uint64_t seed = 0;
  FormatKind format = FormatKind::FormatB;
  PagedDocument document;
  TocIndex gold;
  std::vector<GoldPageLabel> labels;
  TocIndex predicted;
  std::vector<Corruption> corruptions;

  std::vector<int> toc_pages() const {
    std::vector<int> out;
    for (const auto& l : labels) {
      if (l.is_toc) out.push_back(l.page);
    }
    return out;
  }
};

namespace corpus_detail {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1)); }
  int range(const IntRange& r) { return range(r.lo, r.hi); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return p > 0.0 && unit() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

private:
  std::mt19937_64 engine_;
};

struct Division {
  const char* number;
  const char* title;
};

inline const std::vector<Division>& divisions() {
  static const std::vector<Division> kDivisions = {
      {"00", "PROCUREMENT AND CONTRACTING REQUIREMENTS"},
      {"01", "GENERAL REQUIREMENTS"},
      {"02", "EXISTING CONDITIONS"},
      {"03", "CONCRETE"},
      {"04", "MASONRY"},
      {"05", "METALS"},
      {"06", "WOOD, PLASTICS, AND COMPOSITES"},
      {"07", "THERMAL AND MOISTURE PROTECTION"},
      {"08", "OPENINGS"},
      {"09", "FINISHES"},
      {"10", "SPECIALTIES"},
      {"11", "EQUIPMENT"},
      {"12", "FURNISHINGS"},
      {"13", "SPECIAL CONSTRUCTION"},
      {"14", "CONVEYING EQUIPMENT"},
      {"21", "FIRE SUPPRESSION"},
      {"22", "PLUMBING"},
      {"23", "HEATING, VENTILATING, AND AIR CONDITIONING (HVAC)"},
      {"25", "INTEGRATED AUTOMATION"},
      {"26", "ELECTRICAL"},
      {"27", "COMMUNICATIONS"},
      {"28", "ELECTRONIC SAFETY AND SECURITY"},
      {"31", "EARTHWORK"},
      {"32", "EXTERIOR IMPROVEMENTS"},
      {"33", "UTILITIES"},
  };
  return kDivisions;
}

inline const std::vector<std::string>& section_titles() {
  static const std::vector<std::string> kTitles = {
      "Summary of Work", "Allowances", "Alternates", "Project Management and Coordination",
      "Submittal Procedures", "Quality Requirements", "Temporary Facilities and Controls",
      "Product Requirements", "Execution and Closeout Requirements", "Selective Demolition",
      "Concrete Forming and Accessories", "Concrete Reinforcing", "Cast-in-Place Concrete",
      "Precast Structural Concrete", "Unit Masonry", "Stone Masonry", "Structural Steel Framing",
      "Steel Joist Framing", "Steel Decking", "Cold-Formed Metal Framing", "Metal Fabrications",
      "Rough Carpentry", "Finish Carpentry", "Architectural Woodwork", "Dampproofing and Waterproofing",
      "Thermal Insulation", "Weather Barriers", "Metal Roof Panels", "Sheet Metal Flashing and Trim",
      "Joint Sealants", "Hollow Metal Doors and Frames", "Flush Wood Doors", "Aluminum-Framed Entrances",
      "Door Hardware", "Glazing", "Gypsum Board", "Ceramic Tiling", "Acoustical Panel Ceilings",
      "Resilient Flooring", "Tile Carpeting", "Interior Painting", "Exterior Painting",
      "Toilet Compartments", "Toilet Accessories", "Fire Extinguishers", "Signage",
      "Residential Appliances", "Window Treatments", "Hydraulic Elevators", "Wet-Pipe Sprinkler Systems",
      "Common Work Results for Plumbing", "Domestic Water Piping", "Sanitary Waste and Vent Piping",
      "Plumbing Fixtures", "Hydronic Piping", "Air Distribution", "Testing, Adjusting, and Balancing",
      "Instrumentation and Control for HVAC", "Common Work Results for Electrical",
      "Low-Voltage Electrical Power Conductors and Cables", "Grounding and Bonding for Electrical Systems",
      "Panelboards", "Wiring Devices", "Interior Lighting", "Exterior Lighting",
      "Structured Cabling", "Fire Detection and Alarm", "Site Clearing", "Earth Moving",
      "Asphalt Paving", "Concrete Paving", "Turf and Grasses", "Water Utility Distribution Piping",
      "Storm Utility Drainage Piping",
  };
  return kTitles;
}

inline const std::vector<std::string>& article_titles() {
  static const std::vector<std::string> kTitles = {
      "RELATED DOCUMENTS", "SUMMARY", "DEFINITIONS", "REFERENCES", "ACTION SUBMITTALS",
      "INFORMATIONAL SUBMITTALS", "QUALITY ASSURANCE", "DELIVERY, STORAGE, AND HANDLING",
      "FIELD CONDITIONS", "WARRANTY", "MANUFACTURERS", "MATERIALS", "PERFORMANCE REQUIREMENTS",
      "ACCESSORIES", "SOURCE QUALITY CONTROL", "EXAMINATION", "PREPARATION", "INSTALLATION",
      "FIELD QUALITY CONTROL", "ADJUSTING", "CLEANING", "PROTECTION", "COORDINATION",
      "SEQUENCING AND SCHEDULING", "MAINTENANCE MATERIAL SUBMITTALS", "CLOSEOUT SUBMITTALS",
  };
  return kTitles;
}

inline const std::vector<std::string>& project_names() {
  static const std::vector<std::string> kNames = {
      "MIDTOWN BRANCH LIBRARY RENOVATION", "RIVERSIDE ELEMENTARY SCHOOL ADDITION",
      "HARBOR POINT FIRE STATION", "NORTHGATE TRANSIT MAINTENANCE FACILITY",
      "COUNTY COURTHOUSE ANNEX", "WESTFIELD COMMUNITY RECREATION CENTER",
      "UNIVERSITY SCIENCE HALL MODERNIZATION", "LAKESHORE WATER TREATMENT PLANT UPGRADE",
  };
  return kNames;
}

inline const std::vector<std::string>& body_sentences() {
  static const std::vector<std::string> kSentences = {
      "Drawings and general provisions of the Contract apply to this Section.",
      "Coordinate work of this Section with adjacent construction.",
      "Submit product data for each type of product indicated.",
      "Comply with requirements of authorities having jurisdiction.",
      "Deliver materials in original packages with labels intact.",
      "Store products off the ground and protect from weather.",
      "Examine substrates for compliance with installation tolerances.",
      "Proceed with installation only after unsatisfactory conditions have been corrected.",
      "Install products according to manufacturer's written instructions.",
      "Repair or replace damaged work as directed by the Architect.",
      "Clean exposed surfaces after installation is complete.",
      "Provide products from a single manufacturer for each system.",
      "Testing agency shall be qualified according to recognized standards.",
      "Maintain temporary protection until Substantial Completion.",
      "Remove debris from the site daily.",
  };
  return kSentences;
}

inline std::string two_digit(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

inline std::string upper(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return s;
}

/// Title variant whose normalized form differs from the original.
inline std::string corrupt_title(const std::string& title) {
  auto pos = title.find_last_of(' ');
  if (pos != std::string::npos && pos > 0) return title.substr(0, pos);
  return title + " Annex";
}

}  // namespace corpus_detail

inline void CorpusSpec::validate() const {
  auto check_range = [](const IntRange& r, int min_lo, const char* name) {
    if (r.lo < min_lo || r.hi < r.lo) {
      throw Error(ErrorKind::ConfigError, std::string("invalid range for ") + name);
    }
  };
  check_range(n_headings, 1, "n_headings");
  check_range(subheadings_per_heading, 0, "subheadings_per_heading");
  check_range(n_cover_pages, 0, "n_cover_pages");
  check_range(n_body_pages, 0, "n_body_pages");
  if (format == FormatKind::FormatB &&
      n_headings.hi > static_cast<int>(corpus_detail::divisions().size())) {
    throw Error(ErrorKind::ConfigError, "FormatB supports at most " +
                                            std::to_string(corpus_detail::divisions().size()) + " headings");
  }
  if (format == FormatKind::FormatA && n_headings.hi > 400) {
    throw Error(ErrorKind::ConfigError, "FormatA supports at most 400 headings");
  }
  if (subheadings_per_heading.hi > 90) {
    throw Error(ErrorKind::ConfigError, "at most 90 subheadings per heading");
  }
  if (toc_lines_per_page < 1) throw Error(ErrorKind::ConfigError, "toc_lines_per_page must be >= 1");
  for (double p : {noise.dot_leader_prob, noise.trailing_pageno_prob, noise.header_footer_prob,
                   noise.blank_page_prob, noise.title_corruption_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::ConfigError, "noise probabilities must lie in [0,1]");
  }
}

inline GeneratedDoc generate(const CorpusSpec& spec) {
  using namespace corpus_detail;
  spec.validate();
  Rng rng(spec.seed);
  const bool format_b = spec.format == FormatKind::FormatB;

  // Structure first, so the gold index does not depend on noise settings.
  TocIndex gold;
  const int n_headings = rng.range(spec.n_headings);
  const auto& sections = section_titles();
  std::size_t title_cursor = rng.below(sections.size());
  auto next_section_title = [&] { return sections[title_cursor++ % sections.size()]; };

  if (format_b) {
    const auto& divs = divisions();
    std::vector<std::size_t> chosen(divs.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng.below(i)]);
    chosen.resize(static_cast<std::size_t>(n_headings));
    std::sort(chosen.begin(), chosen.end());
    for (auto idx : chosen) {
      Heading h{divs[idx].number, divs[idx].title, {}};
      const int n_sub = rng.range(spec.subheadings_per_heading);
      std::set<int> codes;
      while (static_cast<int>(codes.size()) < n_sub) codes.insert(rng.range(1, 98) * 100 + rng.range(0, 9) * 10);
      for (int code : codes) {
        h.subheadings.push_back({h.hn + two_digit(code / 100) + two_digit(code % 100), next_section_title()});
      }
      gold.headings.push_back(std::move(h));
    }
  } else {
    const bool six_digit = rng.chance(0.5);
    std::set<int> numbers;
    while (static_cast<int>(numbers.size()) < n_headings) numbers.insert(rng.range(10, 499) * 100);
    const auto& articles = article_titles();
    for (int n : numbers) {
      std::string hn = six_digit ? std::to_string(n * 10) : std::to_string(n);
      hn.insert(0, (six_digit ? 6 : 5) - hn.size(), '0');
      Heading h{hn, upper(next_section_title()), {}};
      const int n_sub = rng.range(spec.subheadings_per_heading);
      int part = 1;
      int article = 0;
      std::size_t art_cursor = rng.below(articles.size());
      for (int k = 0; k < n_sub; ++k) {
        if (article > 0 && rng.chance(0.2) && part < 3) {
          ++part;
          article = 0;
        }
        ++article;
        h.subheadings.push_back({std::to_string(part) + "." + std::to_string(article),
                                 articles[art_cursor++ % articles.size()]});
      }
      gold.headings.push_back(std::move(h));
    }
  }

  // Surface style, fixed per document.
  static const std::vector<std::string> kSeparatorsA = {" - ", " \xE2\x80\x93 ", " \xE2\x80\x94 ", ": ", "-"};
  static const std::vector<std::string> kSeparatorsB = {" - ", " \xE2\x80\x93 ", " \xE2\x80\x94 ", ": ", " "};
  static const std::vector<std::string> kKeywordsA = {"SECTION", "Section"};
  static const std::vector<std::string> kKeywordsB = {"DIVISION", "Division"};
  const std::string separator = format_b ? rng.pick(kSeparatorsB) : rng.pick(kSeparatorsA);
  const std::string keyword = format_b ? rng.pick(kKeywordsB) : rng.pick(kKeywordsA);
  const bool spaced_codes = rng.chance(0.7);
  const std::string project = rng.pick(project_names());

  int page_ref = rng.range(1, 5);
  auto decorate = [&](std::string line) {
    page_ref += rng.range(1, 4);
    if (rng.chance(spec.noise.dot_leader_prob)) {
      const int dots = rng.range(3, 24);
      const bool tight = rng.chance(0.3);
      line += (tight ? "" : " ") + std::string(static_cast<std::size_t>(dots), '.') + (tight ? "" : " ") +
              std::to_string(page_ref);
    } else if (rng.chance(spec.noise.trailing_pageno_prob)) {
      line += std::string(static_cast<std::size_t>(rng.range(1, 6)), ' ') + std::to_string(page_ref);
    }
    return line;
  };

  std::vector<std::string> entries;
  for (const auto& h : gold.headings) {
    entries.push_back(decorate(keyword + " " + h.hn + separator + h.ht));
    for (const auto& s : h.subheadings) {
      std::string shn = s.shn;
      if (format_b && spaced_codes) shn = shn.substr(0, 2) + " " + shn.substr(2, 2) + " " + shn.substr(4, 2);
      entries.push_back(decorate(shn + " " + s.sht));
    }
  }

  std::vector<PageText> pages;
  std::vector<GoldPageLabel> labels;
  auto add_page = [&](std::vector<std::string> lines, bool is_toc) {
    const int number = static_cast<int>(pages.size()) + 1;
    pages.push_back(PageText{number, std::move(lines)});
    labels.push_back({number, is_toc});
  };
  auto maybe_blank = [&] {
    if (rng.chance(spec.noise.blank_page_prob)) {
      if (rng.chance(0.5)) {
        add_page({}, false);
      } else {
        add_page({"", "THIS PAGE INTENTIONALLY LEFT BLANK", ""}, false);
      }
    }
  };
  auto running_header = [&](std::vector<std::string>& lines) {
    if (rng.chance(spec.noise.header_footer_prob)) {
      lines.push_back(project);
      lines.push_back("Project No. " + std::to_string(1000 + rng.range(0, 8999)));
    }
  };
  auto running_footer = [&](std::vector<std::string>& lines, const std::string& folio) {
    if (rng.chance(spec.noise.header_footer_prob)) {
      lines.push_back("");
      lines.push_back(folio);
    }
  };

  const int n_cover = rng.range(spec.n_cover_pages);
  for (int i = 0; i < n_cover; ++i) {
    std::vector<std::string> lines;
    if (i == 0) {
      lines = {"PROJECT MANUAL", "", project, "", "VOLUME 1", "ISSUED FOR BID", "", "October 2026"};
    } else {
      lines = {"PROJECT DIRECTORY", "", "Owner: City Facilities Department",
               "Architect: Northbay Design Collaborative", "Structural Engineer: Ferro Associates",
               "MEP Engineer: Linden Engineering Group"};
    }
    add_page(std::move(lines), false);
    maybe_blank();
  }

  const auto per_page = static_cast<std::size_t>(spec.toc_lines_per_page);
  int toc_page_index = 0;
  for (std::size_t start = 0; start < entries.size(); start += per_page) {
    std::vector<std::string> lines;
    running_header(lines);
    lines.push_back(toc_page_index == 0 ? "TABLE OF CONTENTS" : "TABLE OF CONTENTS (CONTINUED)");
    lines.push_back("");
    const std::size_t end = std::min(entries.size(), start + per_page);
    for (std::size_t i = start; i < end; ++i) lines.push_back(entries[i]);
    running_footer(lines, "TOC - " + std::to_string(toc_page_index + 1));
    add_page(std::move(lines), true);
    ++toc_page_index;
  }

  const int n_body = rng.range(spec.n_body_pages);
  const auto& sentences = body_sentences();
  for (int i = 0; i < n_body; ++i) {
    std::vector<std::string> lines;
    running_header(lines);
    const auto& h = gold.headings[rng.below(gold.headings.size())];
    if (i % 3 == 0) {
      const std::string number = format_b ? h.hn + " " + two_digit(rng.range(10, 90)) + " 00" : h.hn;
      lines.push_back("SECTION " + number + " - " + upper(h.ht));
      lines.push_back("");
      lines.push_back("PART 1 - GENERAL");
      lines.push_back("1." + std::to_string(rng.range(1, 9)) + " " + rng.pick(article_titles()));
    }
    const int n_lines = rng.range(18, 40);
    char item = 'A';
    for (int k = 0; k < n_lines; ++k) {
      if (k % 4 == 0) lines.push_back("");
      lines.push_back(std::string(1, item) + ". " + rng.pick(sentences));
      item = item == 'Z' ? 'A' : static_cast<char>(item + 1);
    }
    running_footer(lines, upper(h.ht) + " " + std::to_string(i + 1));
    add_page(std::move(lines), false);
    maybe_blank();
  }

  // Prediction fixture: gold with title corruptions, drawn from a separate
  // stream so the document does not change with the corruption rate.
  Rng corrupt_rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
  TocIndex predicted = gold;
  std::vector<Corruption> log;
  for (std::size_t hi = 0; hi < predicted.headings.size(); ++hi) {
    auto& h = predicted.headings[hi];
    if (corrupt_rng.chance(spec.noise.title_corruption_prob)) {
      auto bad = corrupt_title(h.ht);
      log.push_back({"ht", hi, std::nullopt, h.ht, bad});
      h.ht = std::move(bad);
    }
    for (std::size_t si = 0; si < h.subheadings.size(); ++si) {
      auto& s = h.subheadings[si];
      if (corrupt_rng.chance(spec.noise.title_corruption_prob)) {
        auto bad = corrupt_title(s.sht);
        log.push_back({"sht", hi, si, s.sht, bad});
        s.sht = std::move(bad);
      }
    }
  }

  return GeneratedDoc{spec.seed,
                      spec.format,
                      PagedDocument(project, std::move(pages)),
                      std::move(gold),
                      std::move(labels),
                      std::move(predicted),
                      std::move(log)};
}

/// Document `i` of a corpus uses seed `spec.seed + i`.
inline GeneratedDoc generate_nth(const CorpusSpec& spec, std::size_t i) {
  CorpusSpec s = spec;
  s.seed = spec.seed + i;
  return generate(s);
}

struct CorpusSplit {
  std::vector<GeneratedDoc> train;
  std::vector<GeneratedDoc> test;
};

inline std::size_t train_size(std::size_t n_docs, double train_fraction) {
  // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
  return static_cast<std::size_t>(std::floor(static_cast<double>(n_docs) * train_fraction + 1e-9));
}

/// Seeded shuffle of the document ordinals, then a floor(n * fraction) cut.
inline CorpusSplit generate_split(const CorpusSpec& spec, std::size_t n_docs, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::PreconditionViolation, "train_fraction must lie strictly between 0 and 1");
  }
  if (n_docs < 2) throw Error(ErrorKind::PreconditionViolation, "need at least two documents to split");
  corpus_detail::Rng rng(spec.seed);
  std::vector<std::size_t> order(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) order[i] = i;
  for (std::size_t i = n_docs; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n_train = train_size(n_docs, train_fraction);
  CorpusSplit split;
  for (std::size_t k = 0; k < n_docs; ++k) {
    (k < n_train ? split.train : split.test).push_back(generate_nth(spec, order[k]));
  }
  return split;
}

// ---------------------------------------------------------------------------
// On-disk corpus: <name>.pgdoc.json, <name>.toc.json, <name>.labels.json,
// <name>.pred.toc.json, <name>.corruptions.json and a manifest.json listing
// every file with its SHA-256.

inline nlohmann::ordered_json to_json(const NoiseSpec& n) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["dot_leader_prob"] = n.dot_leader_prob;
  j["trailing_pageno_prob"] = n.trailing_pageno_prob;
  j["header_footer_prob"] = n.header_footer_prob;
  j["blank_page_prob"] = n.blank_page_prob;
  j["title_corruption_prob"] = n.title_corruption_prob;
  return j;
}

inline nlohmann::ordered_json to_json(const CorpusSpec& s) {
  auto range = [](const IntRange& r) { return nlohmann::ordered_json::array({r.lo, r.hi}); };
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["seed"] = s.seed;
  j["format"] = to_string(s.format);
  j["n_headings"] = range(s.n_headings);
  j["subheadings_per_heading"] = range(s.subheadings_per_heading);
  j["noise"] = to_json(s.noise);
  j["n_cover_pages"] = range(s.n_cover_pages);
  j["n_body_pages"] = range(s.n_body_pages);
  j["toc_lines_per_page"] = s.toc_lines_per_page;
  return j;
}

inline nlohmann::ordered_json labels_to_json(const std::vector<GoldPageLabel>& labels) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& l : labels) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    e["page"] = l.page;
    e["label"] = l.is_toc ? "toc" : "other";
    j.push_back(std::move(e));
  }
  return j;
}

inline std::vector<GoldPageLabel> labels_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::MalformedInput, "labels must be an array");
  std::vector<GoldPageLabel> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("page") || !e.contains("label")) {
      throw Error(ErrorKind::MalformedInput, "label entries need \"page\" and \"label\"");
    }
    const auto label = e.at("label").get<std::string>();
    if (label != "toc" && label != "other") throw Error(ErrorKind::MalformedInput, "unknown label " + label);
    out.push_back({e.at("page").get<int>(), label == "toc"});
  }
  return out;
}

inline nlohmann::ordered_json corruptions_to_json(const std::vector<Corruption>& log) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& c : log) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    e["field"] = c.field;
    e["heading"] = c.heading;
    e["subheading"] = c.subheading ? nlohmann::ordered_json(*c.subheading) : nlohmann::ordered_json(nullptr);
    e["gold"] = c.gold;
    e["corrupted"] = c.corrupted;
    j.push_back(std::move(e));
  }
  return j;
}

inline std::vector<Corruption> corruptions_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::MalformedInput, "corruption log must be an array");
  std::vector<Corruption> out;
  try {
    for (const auto& e : j) {
      Corruption c;
      c.field = e.at("field").get<std::string>();
      c.heading = e.at("heading").get<std::size_t>();
      if (!e.at("subheading").is_null()) c.subheading = e.at("subheading").get<std::size_t>();
      c.gold = e.at("gold").get<std::string>();
      c.corrupted = e.at("corrupted").get<std::string>();
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::MalformedInput, std::string("bad corruption log: ") + ex.what());
  }
  return out;
}

namespace corpus_detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string doc_name(std::size_t ordinal) {
  std::string n = std::to_string(ordinal + 1);
  return "doc-" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

}  // namespace corpus_detail

/// Writes `n_docs` documents (seeds spec.seed .. spec.seed + n_docs - 1) and
/// the manifest into `dir`, creating it if needed.
inline void write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec, std::size_t n_docs) {
  using corpus_detail::write_file;
  spec.validate();
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
  manifest["generator"] = "tocdex-corpusgen";
  manifest["spec"] = to_json(spec);
  auto docs = nlohmann::ordered_json::array();
  auto files = nlohmann::ordered_json::array();
  auto emit = [&](const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    nlohmann::ordered_json f = nlohmann::ordered_json::object();
    f["path"] = name;
    f["sha256"] = sha256_hex(bytes);
    files.push_back(std::move(f));
  };
  for (std::size_t i = 0; i < n_docs; ++i) {
    const auto g = generate_nth(spec, i);
    const auto name = corpus_detail::doc_name(i);
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    d["name"] = name;
    d["seed"] = g.seed;
    d["format"] = to_string(g.format);
    d["doc_id"] = g.document.doc_id();
    d["document"] = name + ".pgdoc.json";
    d["gold"] = name + ".toc.json";
    d["labels"] = name + ".labels.json";
    d["predicted"] = name + ".pred.toc.json";
    d["corruptions"] = name + ".corruptions.json";
    docs.push_back(std::move(d));
    emit(name + ".pgdoc.json", canonical_serialize(g.document));
    emit(name + ".toc.json", serialize_index(g.gold));
    emit(name + ".labels.json", labels_to_json(g.labels).dump());
    emit(name + ".pred.toc.json", serialize_index(g.predicted));
    emit(name + ".corruptions.json", corruptions_to_json(g.corruptions).dump());
  }
  manifest["documents"] = std::move(docs);
  manifest["files"] = std::move(files);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct CorpusEntry {
  std::string name;
  PagedDocument document;
  TocIndex gold;
  std::vector<GoldPageLabel> labels;
  TocIndex predicted;
  std::vector<Corruption> corruptions;
};

/// Loads a corpus written by write_corpus, verifying every file digest.
inline std::vector<CorpusEntry> read_corpus(const std::filesystem::path& dir) {
  using corpus_detail::read_file;
  std::vector<CorpusEntry> out;
  try {
    const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    std::map<std::string, std::string> digests;
    for (const auto& f : manifest.at("files")) {
      digests[f.at("path").get<std::string>()] = f.at("sha256").get<std::string>();
    }
    auto load = [&](const std::string& name) {
      auto bytes = read_file(dir / name);
      if (auto it = digests.find(name); it == digests.end() || it->second != sha256_hex(bytes)) {
        throw Error(ErrorKind::StorageCorrupt, "digest mismatch for " + name);
      }
      return bytes;
    };
    for (const auto& d : manifest.at("documents")) {
      auto json_of = [&](const char* key) { return nlohmann::json::parse(load(d.at(key).get<std::string>())); };
      out.push_back(CorpusEntry{d.at("name").get<std::string>(),
                                ingest_paged_json(load(d.at("document").get<std::string>())),
                                index_from_json(json_of("gold")),
                                labels_from_json(json_of("labels")),
                                index_from_json(json_of("predicted")),
                                corruptions_from_json(json_of("corruptions"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("bad corpus: ") + e.what());
  }
  std::sort(out.begin(), out.end(), [](const CorpusEntry& a, const CorpusEntry& b) { return a.name < b.name; });
  return out;
}

}  // namespace tocdex
