#pragma once

// Per-field exact-match scoring of a predicted ToC index against gold.
//
// Alignment: headings pair first by equal (normalized) number, each gold
// heading taking the earliest unpaired predicted heading with that number;
// leftovers on both sides then pair up in source order. Subheadings inside
// each heading pair are aligned the same way. A field scores when the paired
// values are equal under the MatchPolicy. Unpaired gold entries are misses.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tocdex/error.hpp"
#include "tocdex/text.hpp"
#include "tocdex/tocindex.hpp"

namespace tocdex {

enum class TitleCompare { CaseInsensitiveCollapsedWhitespace, Exact };
enum class NumberCompare { WhitespaceStripped, Exact };

struct MatchPolicy {
  TitleCompare title_compare = TitleCompare::CaseInsensitiveCollapsedWhitespace;
  NumberCompare number_compare = NumberCompare::WhitespaceStripped;

  static MatchPolicy exact() { return {TitleCompare::Exact, NumberCompare::Exact}; }

  std::string normalize_title(std::string_view s) const {
    if (title_compare == TitleCompare::Exact) return std::string(s);
    return text::to_lower(text::collapse_whitespace(s));
  }
  std::string normalize_number(std::string_view s) const {
    if (number_compare == NumberCompare::Exact) return std::string(s);
    return text::remove_whitespace(s);
  }

  friend bool operator==(const MatchPolicy&, const MatchPolicy&) = default;
};

inline nlohmann::ordered_json to_json(const MatchPolicy& p) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["title_compare"] = p.title_compare == TitleCompare::Exact ? "exact" : "case_insensitive_collapsed_whitespace";
  j["number_compare"] = p.number_compare == NumberCompare::Exact ? "exact" : "whitespace_stripped";
  return j;
}

/// Accepts the short CLI names ("exact", "normalized") or the field form
/// {"title_compare": ..., "number_compare": ...}.
inline MatchPolicy policy_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "exact") return MatchPolicy::exact();
    if (s == "normalized" || s == "default") return {};
    throw Error(ErrorKind::MalformedInput, "unknown match policy \"" + s + "\"");
  }
  if (!j.is_object()) throw Error(ErrorKind::MalformedInput, "policy must be a string or object");
  MatchPolicy p;
  if (auto it = j.find("title_compare"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorKind::MalformedInput, "title_compare must be a string");
    auto v = it->get<std::string>();
    if (v == "exact") p.title_compare = TitleCompare::Exact;
    else if (v == "case_insensitive_collapsed_whitespace") p.title_compare = TitleCompare::CaseInsensitiveCollapsedWhitespace;
    else throw Error(ErrorKind::MalformedInput, "unknown title_compare \"" + v + "\"");
  }
  if (auto it = j.find("number_compare"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorKind::MalformedInput, "number_compare must be a string");
    auto v = it->get<std::string>();
    if (v == "exact") p.number_compare = NumberCompare::Exact;
    else if (v == "whitespace_stripped") p.number_compare = NumberCompare::WhitespaceStripped;
    else throw Error(ErrorKind::MalformedInput, "unknown number_compare \"" + v + "\"");
  }
  return p;
}

struct SubheadingPair {
  std::optional<std::size_t> gold;
  std::optional<std::size_t> predicted;
};

struct HeadingPair {
  std::optional<std::size_t> gold;
  std::optional<std::size_t> predicted;
  std::vector<SubheadingPair> subheadings;  // empty unless both sides are present
};

/// Every gold and every predicted entry appears exactly once: paired, or
/// alone with the other side empty. Gold-side order is preserved for pairs.
struct Alignment {
  std::vector<HeadingPair> headings;
};

namespace detail {

/// Number-first greedy pairing, then source-order pairing of the leftovers.
/// `gold_key(i)` / `pred_key(j)` return the normalized number of an entry.
template <typename GoldKey, typename PredKey>
std::vector<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>>
pair_entries(std::size_t n_gold, std::size_t n_pred, GoldKey gold_key, PredKey pred_key) {
  std::vector<std::optional<std::size_t>> match(n_gold);
  std::vector<bool> used(n_pred, false);
  std::vector<std::string> pkeys;
  pkeys.reserve(n_pred);
  for (std::size_t j = 0; j < n_pred; ++j) pkeys.push_back(pred_key(j));

  for (std::size_t i = 0; i < n_gold; ++i) {
    const auto key = gold_key(i);
    for (std::size_t j = 0; j < n_pred; ++j) {
      if (!used[j] && pkeys[j] == key) {
        match[i] = j;
        used[j] = true;
        break;
      }
    }
  }
  std::size_t next = 0;
  for (std::size_t i = 0; i < n_gold; ++i) {
    if (match[i]) continue;
    while (next < n_pred && used[next]) ++next;
    if (next == n_pred) break;
    match[i] = next;
    used[next] = true;
  }

  std::vector<std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> out;
  out.reserve(n_gold + n_pred);
  for (std::size_t i = 0; i < n_gold; ++i) out.emplace_back(i, match[i]);
  for (std::size_t j = 0; j < n_pred; ++j) {
    if (!used[j]) out.emplace_back(std::nullopt, j);
  }
  return out;
}

}  // namespace detail

inline Alignment align(const TocIndex& predicted, const TocIndex& gold, const MatchPolicy& policy = {}) {
  Alignment a;
  const auto& gh = gold.headings;
  const auto& ph = predicted.headings;
  auto pairs = detail::pair_entries(
      gh.size(), ph.size(), [&](std::size_t i) { return policy.normalize_number(gh[i].hn); },
      [&](std::size_t j) { return policy.normalize_number(ph[j].hn); });
  for (auto [gi, pj] : pairs) {
    HeadingPair hp{gi, pj, {}};
    if (gi && pj) {
      const auto& gs = gh[*gi].subheadings;
      const auto& ps = ph[*pj].subheadings;
      auto sub = detail::pair_entries(
          gs.size(), ps.size(), [&](std::size_t i) { return policy.normalize_number(gs[i].shn); },
          [&](std::size_t j) { return policy.normalize_number(ps[j].shn); });
      for (auto [si, sj] : sub) hp.subheadings.push_back({si, sj});
    }
    a.headings.push_back(std::move(hp));
  }
  return a;
}

struct FieldCounts {
  std::size_t matched = 0;
  std::size_t gold_total = 0;
  std::size_t predicted_total = 0;

  /// 0/0 counts as perfect.
  double accuracy() const {
    return gold_total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(gold_total);
  }

  FieldCounts& operator+=(const FieldCounts& o) {
    matched += o.matched;
    gold_total += o.gold_total;
    predicted_total += o.predicted_total;
    return *this;
  }
  friend bool operator==(const FieldCounts&, const FieldCounts&) = default;
};

struct Unmatched {
  std::string field;  // "hn", "ht", "shn" or "sht"
  std::string gold;
  std::optional<std::string> predicted;
};

struct EvalReport {
  FieldCounts hn, ht, shn, sht;
  std::vector<Unmatched> unmatched;
  MatchPolicy policy;
  std::size_t documents = 1;

  double hn_acc() const { return hn.accuracy(); }
  double ht_acc() const { return ht.accuracy(); }
  double shn_acc() const { return shn.accuracy(); }
  double sht_acc() const { return sht.accuracy(); }
  double macro_avg() const { return macro_average(hn_acc(), ht_acc(), shn_acc(), sht_acc()); }

  static double macro_average(double a, double b, double c, double d) { return (a + b + c + d) / 4.0; }
};

inline EvalReport evaluate(const TocIndex& predicted, const TocIndex& gold, const MatchPolicy& policy = {}) {
  EvalReport r;
  r.policy = policy;
  r.hn.gold_total = r.ht.gold_total = gold.headings.size();
  r.hn.predicted_total = r.ht.predicted_total = predicted.headings.size();
  r.shn.gold_total = r.sht.gold_total = gold.subheading_count();
  r.shn.predicted_total = r.sht.predicted_total = predicted.subheading_count();

  auto score = [&](FieldCounts& counts, const char* field, const std::string& g, const std::string* p,
                   bool is_title) {
    const bool ok = p != nullptr && (is_title ? policy.normalize_title(g) == policy.normalize_title(*p)
                                              : policy.normalize_number(g) == policy.normalize_number(*p));
    if (ok) {
      ++counts.matched;
    } else {
      r.unmatched.push_back({field, g, p ? std::optional<std::string>(*p) : std::nullopt});
    }
  };

  const auto alignment = align(predicted, gold, policy);
  for (const auto& hp : alignment.headings) {
    if (!hp.gold) continue;
    const auto& g = gold.headings[*hp.gold];
    const Heading* p = hp.predicted ? &predicted.headings[*hp.predicted] : nullptr;
    score(r.hn, "hn", g.hn, p ? &p->hn : nullptr, false);
    score(r.ht, "ht", g.ht, p ? &p->ht : nullptr, true);
    if (!p) {
      for (const auto& s : g.subheadings) {
        score(r.shn, "shn", s.shn, nullptr, false);
        score(r.sht, "sht", s.sht, nullptr, true);
      }
      continue;
    }
    for (const auto& sp : hp.subheadings) {
      if (!sp.gold) continue;
      const auto& gs = g.subheadings[*sp.gold];
      const Subheading* ps = sp.predicted ? &p->subheadings[*sp.predicted] : nullptr;
      score(r.shn, "shn", gs.shn, ps ? &ps->shn : nullptr, false);
      score(r.sht, "sht", gs.sht, ps ? &ps->sht : nullptr, true);
    }
  }
  return r;
}

/// Pools counts across documents (micro aggregation), then averages the
/// four pooled accuracies.
inline EvalReport evaluate_corpus(const std::vector<std::pair<TocIndex, TocIndex>>& pairs,
                                  const MatchPolicy& policy = {}) {
  if (pairs.empty()) throw Error(ErrorKind::PreconditionViolation, "no documents to evaluate");
  EvalReport total;
  total.policy = policy;
  total.documents = 0;
  for (const auto& [predicted, gold] : pairs) {
    auto r = evaluate(predicted, gold, policy);
    total.hn += r.hn;
    total.ht += r.ht;
    total.shn += r.shn;
    total.sht += r.sht;
    for (auto& u : r.unmatched) total.unmatched.push_back(std::move(u));
    ++total.documents;
  }
  return total;
}

inline nlohmann::ordered_json to_json(const FieldCounts& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["matched"] = c.matched;
  j["gold_total"] = c.gold_total;
  j["predicted_total"] = c.predicted_total;
  return j;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["hn_acc"] = r.hn_acc();
  j["ht_acc"] = r.ht_acc();
  j["shn_acc"] = r.shn_acc();
  j["sht_acc"] = r.sht_acc();
  j["macro_avg"] = r.macro_avg();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  counts["hn"] = to_json(r.hn);
  counts["ht"] = to_json(r.ht);
  counts["shn"] = to_json(r.shn);
  counts["sht"] = to_json(r.sht);
  j["counts"] = std::move(counts);
  j["documents"] = r.documents;
  j["policy"] = to_json(r.policy);
  auto un = nlohmann::ordered_json::array();
  for (const auto& u : r.unmatched) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    e["field"] = u.field;
    e["gold"] = u.gold;
    e["predicted"] = u.predicted ? nlohmann::ordered_json(*u.predicted) : nlohmann::ordered_json(nullptr);
    un.push_back(std::move(e));
  }
  j["unmatched"] = std::move(un);
  return j;
}

}  // namespace tocdex
