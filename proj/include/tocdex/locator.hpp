#pragma once

// ToC page classification by weighted text features.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tocdex/error.hpp"
#include "tocdex/grammar.hpp"
#include "tocdex/pagedoc.hpp"
#include "tocdex/text.hpp"

namespace tocdex {

namespace feature {
inline constexpr std::string_view kMarkerHit = "marker_hit";
inline constexpr std::string_view kNumberedLineRatio = "numbered_line_ratio";
inline constexpr std::string_view kDotLeaderRatio = "dot_leader_ratio";
inline constexpr std::string_view kTrailingPagenoRatio = "trailing_pageno_ratio";
inline constexpr std::string_view kDensity = "density";

inline constexpr std::string_view kAll[] = {kMarkerHit, kNumberedLineRatio, kDotLeaderRatio,
                                            kTrailingPagenoRatio, kDensity};
}  // namespace feature

/// Lines per page at which the density feature saturates.
inline constexpr double kDensityFullPage = 60.0;

using FeatureMap = std::map<std::string, double, std::less<>>;

struct ClassifierConfig {
  double threshold = 0.5;
  FeatureMap feature_weights = {
      {std::string(feature::kMarkerHit), 0.5},
      {std::string(feature::kNumberedLineRatio), 0.3},
      {std::string(feature::kDotLeaderRatio), 0.1},
      {std::string(feature::kTrailingPagenoRatio), 0.1},
      {std::string(feature::kDensity), 0.0},
  };
  std::vector<std::string> marker_phrases = {"TABLE OF CONTENTS", "CONTENTS", "INDEX OF SECTIONS"};

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw Error(ErrorKind::ConfigError, "threshold must lie in [0,1]");
    }
    bool any_nonzero = false;
    for (const auto& [name, w] : feature_weights) {
      if (std::find(std::begin(feature::kAll), std::end(feature::kAll), name) == std::end(feature::kAll)) {
        throw Error(ErrorKind::ConfigError, "unknown feature \"" + name + "\"");
      }
      if (!std::isfinite(w)) throw Error(ErrorKind::ConfigError, "weight of " + name + " is not finite");
      any_nonzero = any_nonzero || w != 0.0;
    }
    if (!any_nonzero) throw Error(ErrorKind::ConfigError, "at least one feature weight must be nonzero");
  }
};

/// Absent fields keep their defaults. Weights given in the file replace the
/// default for that feature only.
inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j) {
  ClassifierConfig cfg;
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "classifier config must be an object");
  try {
    if (auto it = j.find("threshold"); it != j.end()) cfg.threshold = it->get<double>();
    if (auto it = j.find("feature_weights"); it != j.end()) {
      for (const auto& [name, w] : it->items()) cfg.feature_weights[name] = w.get<double>();
    }
    if (auto it = j.find("marker_phrases"); it != j.end()) {
      cfg.marker_phrases = it->get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("bad classifier config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ClassifierConfig load_classifier_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open classifier config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("classifier config is not JSON: ") + e.what());
  }
  return classifier_config_from_json(j);
}

enum class PageClass { Toc, Other };

inline std::string_view to_string(PageClass c) { return c == PageClass::Toc ? "toc" : "other"; }

struct PageLabel {
  int page_number = 0;
  PageClass label = PageClass::Other;
  double score = 0.0;
  FeatureMap features;
};

inline nlohmann::ordered_json to_json(const PageLabel& l) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["page"] = l.page_number;
  j["label"] = to_string(l.label);
  j["score"] = l.score;
  nlohmann::ordered_json f = nlohmann::ordered_json::object();
  for (const auto& [k, v] : l.features) f[k] = v;
  j["features"] = std::move(f);
  return j;
}

inline FeatureMap extract_features(const PageText& page, const ClassifierConfig& config) {
  FeatureMap f;
  for (auto name : feature::kAll) f[std::string(name)] = 0.0;

  // Ratios are taken over non-empty lines that carry no marker phrase, so
  // adding a marker line can only raise the score.
  std::size_t non_empty = 0;
  std::size_t content = 0;
  std::size_t numbered = 0;
  std::size_t leaders = 0;
  std::size_t pageno = 0;
  bool marker = false;
  for (const auto& line : page.lines) {
    std::string_view t = text::trim(line);
    if (t.empty()) continue;
    ++non_empty;
    bool has_marker = false;
    for (const auto& phrase : config.marker_phrases) {
      if (!phrase.empty() && text::icontains(t, phrase)) {
        has_marker = true;
        break;
      }
    }
    if (has_marker) {
      marker = true;
      continue;
    }
    ++content;
    if (grammar::matches_any_rule(line)) ++numbered;
    if (t.find("...") != std::string_view::npos) ++leaders;
    if (text::is_digit(t.back())) ++pageno;
  }
  if (non_empty == 0) return f;
  f[std::string(feature::kMarkerHit)] = marker ? 1.0 : 0.0;
  if (content > 0) {
    const auto n = static_cast<double>(content);
    f[std::string(feature::kNumberedLineRatio)] = static_cast<double>(numbered) / n;
    f[std::string(feature::kDotLeaderRatio)] = static_cast<double>(leaders) / n;
    f[std::string(feature::kTrailingPagenoRatio)] = static_cast<double>(pageno) / n;
  }
  f[std::string(feature::kDensity)] = std::min(1.0, static_cast<double>(non_empty) / kDensityFullPage);
  return f;
}

inline PageLabel classify_page(const PageText& page, const ClassifierConfig& config) {
  PageLabel label;
  label.page_number = page.number;
  label.features = extract_features(page, config);
  double sum = 0.0;
  for (const auto& [name, value] : label.features) {
    if (auto w = config.feature_weights.find(name); w != config.feature_weights.end()) {
      sum += w->second * value;
    }
  }
  label.score = std::clamp(sum, 0.0, 1.0);
  label.label = label.score >= config.threshold ? PageClass::Toc : PageClass::Other;
  return label;
}

/// Labels for every page, in page order.
inline std::vector<PageLabel> classify_document(const PagedDocument& doc, const ClassifierConfig& config) {
  std::vector<PageLabel> labels;
  labels.reserve(doc.page_count());
  for (const auto& page : doc.pages()) labels.push_back(classify_page(page, config));
  return labels;
}

/// Only the pages labelled Toc, in page order.
inline std::vector<PageLabel> locate_toc(const PagedDocument& doc, const ClassifierConfig& config) {
  auto all = classify_document(doc, config);
  std::erase_if(all, [](const PageLabel& l) { return l.label != PageClass::Toc; });
  return all;
}

inline std::vector<int> page_numbers(const std::vector<PageLabel>& labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.page_number);
  return out;
}

}  // namespace tocdex
