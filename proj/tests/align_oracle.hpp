#pragma once

// Exhaustive reference for the evaluator's pairing. It enumerates every
// injective pairing of equal-number entries, keeps those of maximum size,
// pairs the remaining entries positionally (i-th leftover gold with i-th
// leftover predicted), and reports for each field the best matched count
// over all such pairings. Subheadings are enumerated the same way inside
// every heading pair.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tocdex/evaluator.hpp"

namespace align_oracle {

struct Counts {
  std::size_t hn = 0, ht = 0, shn = 0, sht = 0;
};

using Pairing = std::vector<std::optional<std::size_t>>;  // gold index -> predicted index

/// All pairings of maximal number-equal size, completed by the positional zip.
inline std::vector<Pairing> admissible_pairings(const std::vector<std::string>& gold_keys,
                                                const std::vector<std::string>& pred_keys) {
  const std::size_t ng = gold_keys.size(), np = pred_keys.size();
  std::vector<Pairing> equal_only;
  std::size_t best = 0;
  Pairing current(ng);
  std::vector<bool> used(np, false);

  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t size) {
    if (i == ng) {
      if (size > best) {
        best = size;
        equal_only.clear();
      }
      if (size == best) equal_only.push_back(current);
      return;
    }
    current[i] = std::nullopt;
    rec(i + 1, size);
    for (std::size_t j = 0; j < np; ++j) {
      if (used[j] || gold_keys[i] != pred_keys[j]) continue;
      used[j] = true;
      current[i] = j;
      rec(i + 1, size + 1);
      used[j] = false;
    }
    current[i] = std::nullopt;
  };
  rec(0, 0);

  std::vector<Pairing> out;
  for (auto p : equal_only) {
    std::vector<bool> taken(np, false);
    for (const auto& m : p) {
      if (m) taken[*m] = true;
    }
    std::vector<std::size_t> free_pred;
    for (std::size_t j = 0; j < np; ++j) {
      if (!taken[j]) free_pred.push_back(j);
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < ng && k < free_pred.size(); ++i) {
      if (!p[i]) p[i] = free_pred[k++];
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline Counts best_counts(const tocdex::TocIndex& predicted, const tocdex::TocIndex& gold,
                          const tocdex::MatchPolicy& policy = {}) {
  auto num = [&](const std::string& s) { return policy.normalize_number(s); };
  auto title = [&](const std::string& s) { return policy.normalize_title(s); };
  std::vector<std::string> gk, pk;
  for (const auto& h : gold.headings) gk.push_back(num(h.hn));
  for (const auto& h : predicted.headings) pk.push_back(num(h.hn));

  Counts best;
  for (const auto& hp : admissible_pairings(gk, pk)) {
    Counts c;
    for (std::size_t i = 0; i < hp.size(); ++i) {
      if (!hp[i]) continue;
      const auto& g = gold.headings[i];
      const auto& p = predicted.headings[*hp[i]];
      c.hn += num(g.hn) == num(p.hn);
      c.ht += title(g.ht) == title(p.ht);
      std::vector<std::string> gs, ps;
      for (const auto& s : g.subheadings) gs.push_back(num(s.shn));
      for (const auto& s : p.subheadings) ps.push_back(num(s.shn));
      std::size_t best_shn = 0, best_sht = 0;
      for (const auto& sp : admissible_pairings(gs, ps)) {
        std::size_t shn = 0, sht = 0;
        for (std::size_t a = 0; a < sp.size(); ++a) {
          if (!sp[a]) continue;
          shn += gs[a] == ps[*sp[a]];
          sht += title(g.subheadings[a].sht) == title(p.subheadings[*sp[a]].sht);
        }
        best_shn = std::max(best_shn, shn);
        best_sht = std::max(best_sht, sht);
      }
      c.shn += best_shn;
      c.sht += best_sht;
    }
    best.hn = std::max(best.hn, c.hn);
    best.ht = std::max(best.ht, c.ht);
    best.shn = std::max(best.shn, c.shn);
    best.sht = std::max(best.sht, c.sht);
  }
  return best;
}

/// Small random index pair. With `distinct` every hn is unique within an
/// index and every shn is unique within a heading.
inline std::pair<tocdex::TocIndex, tocdex::TocIndex> random_pair(std::mt19937_64& rng, bool distinct) {
  static const std::vector<std::string> kTitles = {"Concrete", "Masonry", "Metals", "Finishes", "concrete",
                                                   "Finishes  ", "Wood"};
  std::uniform_int_distribution<int> n_head(0, 5), n_sub(0, 4), coin(0, 1);
  std::uniform_int_distribution<std::size_t> pick_title(0, kTitles.size() - 1);
  std::uniform_int_distribution<int> small_num(1, distinct ? 9 : 3);

  auto make = [&] {
    tocdex::TocIndex idx;
    std::vector<int> used_h;
    const int nh = n_head(rng);
    for (int h = 0; h < nh; ++h) {
      int hn = small_num(rng);
      if (distinct) {
        while (std::find(used_h.begin(), used_h.end(), hn) != used_h.end()) hn = small_num(rng);
        used_h.push_back(hn);
      }
      tocdex::Heading heading{std::to_string(hn), kTitles[pick_title(rng)], {}};
      std::vector<int> used_s;
      const int ns = n_sub(rng);
      for (int s = 0; s < ns; ++s) {
        int sn = small_num(rng);
        if (distinct) {
          while (std::find(used_s.begin(), used_s.end(), sn) != used_s.end()) sn = small_num(rng);
          used_s.push_back(sn);
        }
        heading.subheadings.push_back({std::to_string(hn) + "." + std::to_string(sn), kTitles[pick_title(rng)]});
      }
      idx.headings.push_back(std::move(heading));
    }
    return idx;
  };

  auto gold = make();
  tocdex::TocIndex pred;
  if (coin(rng)) {
    // Perturb a copy of gold so that many entries line up.
    pred = gold;
    std::shuffle(pred.headings.begin(), pred.headings.end(), rng);
    for (auto& h : pred.headings) {
      if (coin(rng) && coin(rng)) h.ht = kTitles[pick_title(rng)];
      std::shuffle(h.subheadings.begin(), h.subheadings.end(), rng);
      if (!h.subheadings.empty() && coin(rng)) h.subheadings.pop_back();
    }
    if (!pred.headings.empty() && coin(rng)) pred.headings.pop_back();
  } else {
    pred = make();
  }
  return {std::move(pred), std::move(gold)};
}

}  // namespace align_oracle
