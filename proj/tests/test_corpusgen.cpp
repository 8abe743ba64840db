#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "tocdex/corpusgen.hpp"
#include "tocdex/evaluator.hpp"
#include "tocdex/grammar.hpp"

using namespace tocdex;

namespace {

CorpusSpec noisy(std::uint64_t seed, FormatKind format) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.format = format;
  spec.noise = {0.5, 0.5, 0.3, 0.1, 0.3};
  return spec;
}

bool has_marker(const PageText& page) {
  return std::any_of(page.lines.begin(), page.lines.end(),
                     [](const std::string& l) { return l.rfind("TABLE OF CONTENTS", 0) == 0; });
}

}  // namespace

TEST(Generate, SameSeedSameBytes) {
  for (auto format : {FormatKind::FormatA, FormatKind::FormatB}) {
    auto a = generate(noisy(7, format));
    auto b = generate(noisy(7, format));
    EXPECT_EQ(canonical_serialize(a.document), canonical_serialize(b.document));
    EXPECT_EQ(serialize_index(a.gold), serialize_index(b.gold));
    EXPECT_EQ(serialize_index(a.predicted), serialize_index(b.predicted));
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.corruptions, b.corruptions);
  }
  EXPECT_NE(generate(noisy(7, FormatKind::FormatB)).document.doc_id(),
            generate(noisy(8, FormatKind::FormatB)).document.doc_id());
}

TEST(Generate, SmallCleanDocumentParsesToGold) {
  CorpusSpec spec;
  spec.seed = 1;
  spec.n_headings = {3, 3};
  spec.subheadings_per_heading = {2, 2};
  auto g = generate(spec);
  ASSERT_EQ(g.gold.headings.size(), 3u);
  EXPECT_EQ(g.gold.subheading_count(), 6u);
  EXPECT_EQ(parse_document(g.document, g.toc_pages()).index, g.gold);
}

TEST(Generate, TocPaginates) {
  CorpusSpec spec;
  spec.seed = 2;
  spec.n_headings = {2, 2};
  spec.subheadings_per_heading = {4, 4};
  spec.toc_lines_per_page = 5;
  auto g = generate(spec);
  const auto pages = g.toc_pages();
  ASSERT_GE(pages.size(), 2u);
  for (std::size_t i = 1; i < pages.size(); ++i) EXPECT_EQ(pages[i], pages[i - 1] + 1);
  EXPECT_EQ(parse_document(g.document, pages).index, g.gold);
}

TEST(Generate, LabelsCoverEveryPageOnce) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto g = generate(noisy(seed, seed % 2 ? FormatKind::FormatA : FormatKind::FormatB));
    ASSERT_EQ(g.labels.size(), static_cast<std::size_t>(g.document.page_count()));
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
      ASSERT_EQ(g.labels[i].page, static_cast<int>(i) + 1);
      ASSERT_EQ(g.labels[i].is_toc, has_marker(g.document.page(g.labels[i].page))) << "seed " << seed;
    }
    ASSERT_FALSE(g.toc_pages().empty());
  }
}

TEST(Generate, CorruptionLogMatchesEvaluatorMisses) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto g = generate(noisy(seed, seed % 2 ? FormatKind::FormatA : FormatKind::FormatB));
    auto r = evaluate(g.predicted, g.gold);
    std::size_t ht = 0, sht = 0;
    for (const auto& c : g.corruptions) {
      (c.field == "ht" ? ht : sht) += 1;
      ASSERT_NE(c.gold, c.corrupted);
    }
    ASSERT_EQ(r.ht.gold_total - r.ht.matched, ht) << seed;
    ASSERT_EQ(r.sht.gold_total - r.sht.matched, sht) << seed;
    ASSERT_EQ(r.unmatched.size(), g.corruptions.size()) << seed;
    ASSERT_EQ(r.hn_acc(), 1.0);
    ASSERT_EQ(r.shn_acc(), 1.0);
  }
}

TEST(Generate, CorruptionRateDoesNotChangeDocument) {
  auto a = noisy(11, FormatKind::FormatB);
  auto b = a;
  b.noise.title_corruption_prob = 0.0;
  auto ga = generate(a), gb = generate(b);
  EXPECT_EQ(ga.document.doc_id(), gb.document.doc_id());
  EXPECT_EQ(ga.gold, gb.gold);
  EXPECT_TRUE(gb.corruptions.empty());
  EXPECT_EQ(gb.predicted, gb.gold);
}

TEST(Generate, FormatShapes) {
  auto b = generate(noisy(3, FormatKind::FormatB));
  for (const auto& h : b.gold.headings) {
    EXPECT_EQ(h.hn.size(), 2u);
    for (const auto& s : h.subheadings) {
      EXPECT_EQ(s.shn.size(), 6u);
      EXPECT_EQ(s.shn.substr(0, 2), h.hn);
    }
  }
  auto a = generate(noisy(3, FormatKind::FormatA));
  for (const auto& h : a.gold.headings) {
    EXPECT_GE(h.hn.size(), 5u);
    for (const auto& s : h.subheadings) EXPECT_NE(s.shn.find('.'), std::string::npos);
  }
}

TEST(Generate, InvalidSpecsRejected) {
  CorpusSpec spec;
  spec.n_headings = {5, 3};
  EXPECT_THROW(generate(spec), Error);
  spec = {};
  spec.n_headings = {3, 26};
  EXPECT_THROW(generate(spec), Error);
  spec = {};
  spec.noise.dot_leader_prob = 1.5;
  EXPECT_THROW(generate(spec), Error);
  spec = {};
  spec.toc_lines_per_page = 0;
  EXPECT_THROW(generate(spec), Error);
}

TEST(Split, NinetyTenOfTwoHundred) {
  CorpusSpec spec;
  spec.seed = 5;
  auto split = generate_split(spec, 200, 0.9);
  EXPECT_EQ(split.train.size(), 180u);
  EXPECT_EQ(split.test.size(), 20u);
  std::set<std::uint64_t> seeds;
  for (const auto& d : split.train) seeds.insert(d.seed);
  for (const auto& d : split.test) seeds.insert(d.seed);
  EXPECT_EQ(seeds.size(), 200u);
  EXPECT_EQ(*seeds.begin(), 5u);
  EXPECT_EQ(*seeds.rbegin(), 204u);
}

TEST(Split, TwoDocumentsSplitOneOne) {
  CorpusSpec spec;
  auto split = generate_split(spec, 2, 0.9);
  EXPECT_EQ(split.train.size(), 1u);
  EXPECT_EQ(split.test.size(), 1u);
}

TEST(Split, MembershipIsDeterministic) {
  CorpusSpec spec;
  spec.seed = 42;
  auto a = generate_split(spec, 30, 0.7);
  auto b = generate_split(spec, 30, 0.7);
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].seed, b.test[i].seed);
  EXPECT_EQ(train_size(100, 0.29), 29u);
}

TEST(Split, BadArguments) {
  CorpusSpec spec;
  EXPECT_THROW(generate_split(spec, 1, 0.5), Error);
  EXPECT_THROW(generate_split(spec, 10, 0.0), Error);
  EXPECT_THROW(generate_split(spec, 10, 1.0), Error);
}

TEST(OnDisk, WriteThenRead) {
  testing_support::TempDir dir;
  auto spec = noisy(21, FormatKind::FormatA);
  write_corpus(dir.path(), spec, 5);
  auto corpus = read_corpus(dir.path());
  ASSERT_EQ(corpus.size(), 5u);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto g = generate_nth(spec, i);
    EXPECT_EQ(corpus[i].name, "doc-000" + std::to_string(i + 1));
    EXPECT_EQ(corpus[i].document, g.document);
    EXPECT_EQ(corpus[i].gold, g.gold);
    EXPECT_EQ(corpus[i].labels, g.labels);
    EXPECT_EQ(corpus[i].predicted, g.predicted);
    EXPECT_EQ(corpus[i].corruptions, g.corruptions);
  }
}

TEST(OnDisk, TamperedFileDetected) {
  testing_support::TempDir dir;
  write_corpus(dir.path(), noisy(1, FormatKind::FormatB), 2);
  auto path = dir / "doc-0002.toc.json";
  auto bytes = testing_support::slurp(path);
  bytes[bytes.find("\"hn\"") + 6] ^= 1;
  testing_support::spit(path, bytes);
  try {
    read_corpus(dir.path());
    FAIL() << "expected StorageCorrupt";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StorageCorrupt);
  }
}

TEST(OnDisk, MissingCorpus) {
  testing_support::TempDir dir;
  EXPECT_THROW(read_corpus(dir / "nope"), Error);
}
