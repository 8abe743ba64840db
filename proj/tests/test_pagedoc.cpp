#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tocdex/pagedoc.hpp"

using namespace tocdex;
using testing_support::random_document;
using testing_support::random_text;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(PagedJson, MinimalDocument) {
  auto doc = ingest_paged_json(R"({"pages":[{"number":1,"lines":["TABLE OF CONTENTS"]}]})");
  ASSERT_EQ(doc.page_count(), 1);
  ASSERT_EQ(doc.page(1).lines.size(), 1u);
  EXPECT_EQ(doc.page(1).lines[0], "TABLE OF CONTENTS");
  EXPECT_FALSE(doc.title().has_value());
  EXPECT_EQ(doc.doc_id().size(), 64u);
  EXPECT_TRUE(is_hex_digest(doc.doc_id()));
}

TEST(PagedJson, EmptyPagesRejected) {
  EXPECT_EQ(kind_of([] { ingest_paged_json(R"({"pages":[]})"); }), ErrorKind::MalformedInput);
  EXPECT_EQ(kind_of([] { ingest_paged_json(R"({})"); }), ErrorKind::MalformedInput);
  EXPECT_EQ(kind_of([] { ingest_paged_json("not json"); }), ErrorKind::MalformedInput);
  EXPECT_EQ(kind_of([] { ingest_paged_json("{\"pages\":[{\"number\":1,\"lines\":[\"\xff\"]}]}"); }),
            ErrorKind::MalformedInput);
}

TEST(PagedJson, NonContiguousPagesRejected) {
  EXPECT_EQ(kind_of([] { ingest_paged_json(R"({"pages":[{"number":1,"lines":[]},{"number":3,"lines":[]}]})"); }),
            ErrorKind::InvariantViolation);
  EXPECT_EQ(kind_of([] { ingest_paged_json(R"({"pages":[{"number":2,"lines":[]}]})"); }),
            ErrorKind::InvariantViolation);
}

TEST(PagedJson, SameBytesSameId) {
  const std::string bytes = R"({"title":"Spec","pages":[{"number":1,"lines":["a","b"]}]})";
  EXPECT_EQ(ingest_paged_json(bytes).doc_id(), ingest_paged_json(bytes).doc_id());
}

TEST(PagedJson, KeyOrderDoesNotChangeId) {
  auto a = ingest_paged_json(R"({"title":"Spec","pages":[{"number":1,"lines":["a","b"]}]})");
  auto b = ingest_paged_json(R"({"pages":[{"lines":["a","b"],"number":1}],"title":"Spec"})");
  EXPECT_EQ(a.doc_id(), b.doc_id());
  EXPECT_EQ(a.doc_id(), sha256_hex(a.canonical_bytes()));
}

TEST(PagedJson, TrailingWhitespaceDoesNotChangeId) {
  auto a = ingest_paged_json(R"({"pages":[{"number":1,"lines":["a   ","b\t"]}]})");
  auto b = ingest_paged_json(R"({"pages":[{"number":1,"lines":["a","b"]}]})");
  EXPECT_EQ(a.doc_id(), b.doc_id());
}

TEST(PagedJson, UnicodeTitleSurvives) {
  PagedDocument doc(std::string("\xC3\x9C" "berbau"), {PageText{1, {"x"}}});
  auto back = ingest_paged_json(canonical_serialize(doc));
  EXPECT_EQ(back.title().value(), "\xC3\x9C" "berbau");
  EXPECT_NE(canonical_serialize(doc).find("\xC3\x9C" "berbau"), std::string::npos);
}

TEST(PagedJson, OutOfRangePage) {
  PagedDocument doc(std::nullopt, {PageText{1, {"x"}}});
  EXPECT_EQ(kind_of([&] { doc.page(0); }), ErrorKind::PreconditionViolation);
  EXPECT_EQ(kind_of([&] { doc.page(2); }), ErrorKind::PreconditionViolation);
}

TEST(PlainText, FormFeedSplitsPages) {
  auto doc = ingest_plain_text("a\n\f\nb");
  ASSERT_EQ(doc.page_count(), 2);
  EXPECT_EQ(doc.page(1).lines, std::vector<std::string>{"a"});
  EXPECT_EQ(doc.page(2).lines, std::vector<std::string>{"b"});
}

TEST(PlainText, NoDelimiterIsOnePage) {
  auto doc = ingest_plain_text("a\nb");
  ASSERT_EQ(doc.page_count(), 1);
  EXPECT_EQ(doc.page(1).lines, (std::vector<std::string>{"a", "b"}));
}

TEST(PlainText, EmptyRejected) {
  EXPECT_EQ(kind_of([] { ingest_plain_text(""); }), ErrorKind::MalformedInput);
}

TEST(PlainText, CustomDelimiterAndLineEndings) {
  auto doc = ingest_plain_text("a  \r\nb\r\n----\r\nc\n", "----", "T");
  ASSERT_EQ(doc.page_count(), 2);
  EXPECT_EQ(doc.page(1).lines, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(doc.page(2).lines, std::vector<std::string>{"c"});
  EXPECT_EQ(doc.title().value(), "T");
}

TEST(LineHygiene, LongLinesAreWrapped) {
  std::string long_line(kMaxLineChars * 2 + 10, 'x');
  PagedDocument doc(std::nullopt, {PageText{1, {long_line}}});
  const auto& lines = doc.page(1).lines;
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].size(), kMaxLineChars);
  EXPECT_EQ(lines[2].size(), 10u);
}

TEST(LineHygiene, WrapCountsCodePointsNotBytes) {
  std::string line;
  for (std::size_t i = 0; i < kMaxLineChars + 1; ++i) line += "\xC3\x9C";
  PagedDocument doc(std::nullopt, {PageText{1, {line}}});
  const auto& lines = doc.page(1).lines;
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(text::utf8_length(lines[0]), kMaxLineChars);
  EXPECT_EQ(lines[1], "\xC3\x9C");
}

TEST(LineHygiene, EmbeddedNewlinesSplit) {
  PagedDocument doc(std::nullopt, {PageText{1, {"a \r\nb\rc\n"}}});
  EXPECT_EQ(doc.page(1).lines, (std::vector<std::string>{"a", "b", "c", ""}));
}

TEST(PagedProperty, RoundTripAndHygiene) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 500; ++i) {
    auto doc = random_document(rng);
    auto bytes = canonical_serialize(doc);
    auto back = ingest_paged_json(bytes);
    ASSERT_EQ(back, doc) << bytes;
    ASSERT_EQ(back.doc_id(), doc.doc_id());
    ASSERT_EQ(canonical_serialize(back), bytes);
    for (const auto& page : back.pages()) {
      for (const auto& line : page.lines) {
        ASSERT_EQ(line.find_first_of("\r\n"), std::string::npos);
        ASSERT_TRUE(line.empty() || !text::is_space(line.back()));
      }
    }
  }
}

TEST(PagedProperty, DocIdIgnoresKeyOrderAndSpacing) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    auto doc = random_document(rng);
    // Re-serialize with default (alphabetical) key order and indentation.
    nlohmann::json j = nlohmann::json::parse(canonical_serialize(doc));
    ASSERT_EQ(ingest_paged_json(j.dump(3)).doc_id(), doc.doc_id());
  }
}
