#include <gtest/gtest.h>

#include <thread>

#include "support.hpp"
#include "tocdex/corpusgen.hpp"
#include "tocdex/pipeline.hpp"

using namespace tocdex;
namespace fs = std::filesystem;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

const fs::path kFixtures = TOCDEX_FIXTURE_DIR;

PagedDocument sample_document() { return ingest_paged_json(slurp(kFixtures / "golden" / "sample.pgdoc.json")); }
TocIndex sample_gold() { return parse_index(slurp(kFixtures / "golden" / "sample.toc.json")); }

Pipeline mock_pipeline() {
  TransportFactory t;
  t.mock = std::make_shared<MockTransport>(kFixtures / "mock");
  return Pipeline({}, t);
}

IndexStore::Clock ticking_clock() {
  auto n = std::make_shared<int>(0);
  return [n] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2024-01-01T00:00:%02d.000Z", (*n)++);
    return std::string(buf);
  };
}

PagedDocument body_only() {
  return PagedDocument(std::nullopt, {PageText{1, {"SECTION 01 10 00 - SUMMARY", "PART 1 - GENERAL"}},
                                      PageText{2, {"A. Comply with the Contract."}}});
}

}  // namespace

TEST(Pipeline, HeuristicMatchesGold) {
  auto ex = Pipeline({}).extract(sample_document(), BackendSpec::heuristic());
  EXPECT_EQ(ex.index, sample_gold());
  EXPECT_EQ(ex.toc_pages, std::vector<int>{2});
}

TEST(Pipeline, MockMatchesHeuristic) {
  auto mock = mock_pipeline().extract(sample_document(), BackendSpec::mock());
  auto heuristic = Pipeline({}).extract(sample_document(), BackendSpec::heuristic());
  EXPECT_EQ(mock.index, heuristic.index);
  EXPECT_EQ(mock.diagnostics.back(), "llm requests: 2");
}

TEST(Pipeline, GeneratedCorpusRoundTrip) {
  const Pipeline p({});
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    CorpusSpec spec;
    spec.seed = seed;
    spec.format = seed % 2 ? FormatKind::FormatA : FormatKind::FormatB;
    auto g = generate(spec);
    EXPECT_EQ(p.extract(g.document, BackendSpec::heuristic()).index, g.gold) << seed;
  }
}

TEST(Pipeline, NoTocReportsStage) {
  try {
    Pipeline({}).extract(body_only(), BackendSpec::heuristic());
    FAIL() << "expected NoTocFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoTocFound);
    EXPECT_EQ(e.stage(), "locate");
  }
}

TEST(Pipeline, UnrecognizedTocReportsParseStage) {
  PagedDocument doc(std::nullopt, {PageText{1, {"TABLE OF CONTENTS", "Introduction", "Acknowledgements"}}});
  try {
    Pipeline({}).extract(doc, BackendSpec::heuristic());
    FAIL() << "expected NoRecognizableStructure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoRecognizableStructure);
    EXPECT_EQ(e.stage(), "parse");
  }
}

TEST(Pipeline, MockMissReportsRetrieveStage) {
  try {
    mock_pipeline().extract(body_only(), BackendSpec::mock());
    FAIL() << "expected TransportError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TransportError);
    EXPECT_EQ(e.stage(), "retrieve");
  }
}

TEST(Pipeline, BackendSpecValidation) {
  EXPECT_THROW(Pipeline({}).extract(sample_document(), BackendSpec{BackendKind::Llm, std::nullopt}), Error);
  EXPECT_THROW(Pipeline({}).extract(sample_document(), BackendSpec::mock()), Error);
  auto b = backend_from_json(nlohmann::json::parse(R"({"kind":"llm","llm":{"model":"m"}})"));
  EXPECT_EQ(b.kind, BackendKind::Llm);
  EXPECT_EQ(backend_from_json(nlohmann::json::parse(to_json(b).dump())), b);
  EXPECT_THROW(backend_from_json(nlohmann::json::parse(R"({"kind":"oracle"})")), Error);
}

TEST(Store, RunThenGet) {
  TempDir dir;
  IndexStore store(dir.path(), ticking_clock());
  auto record = Pipeline({}).run(sample_document(), BackendSpec::heuristic(), store);
  EXPECT_EQ(record.doc_id, sample_document().doc_id());
  EXPECT_EQ(record.created_at, "2024-01-01T00:00:00.000Z");
  EXPECT_EQ(store.get(record.doc_id), record);
  EXPECT_EQ(slurp(dir / record.doc_id / "document.pgdoc.json"), canonical_serialize(sample_document()));
  EXPECT_EQ(store.get_document(record.doc_id), sample_document());
}

TEST(Store, UnknownIdIsNotFound) {
  TempDir dir;
  IndexStore store(dir.path());
  for (const std::string id : {std::string(64, 'a'), std::string("../etc"), std::string()}) {
    try {
      store.get(id);
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NotFound) << id;
    }
  }
  EXPECT_THROW(store.get_document(std::string(64, 'b')), Error);
}

TEST(Store, DocumentWithoutIndexIsNotFound) {
  TempDir dir;
  IndexStore store(dir.path());
  EXPECT_TRUE(store.put_document(sample_document()));
  EXPECT_FALSE(store.put_document(sample_document()));
  try {
    store.get(sample_document().doc_id());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
  EXPECT_TRUE(store.list().empty());
}

TEST(Store, TamperingIsDetected) {
  for (const char* file : {"index.json", "document.pgdoc.json", "meta.json"}) {
    TempDir dir;
    IndexStore store(dir.path());
    auto record = Pipeline({}).run(sample_document(), BackendSpec::heuristic(), store);
    const auto path = dir / record.doc_id / file;
    auto bytes = slurp(path);
    if (std::string(file) == "meta.json") {
      bytes = bytes.substr(0, bytes.size() / 2);
    } else {
      bytes[bytes.find("Summary")] = 's';
    }
    spit(path, bytes);
    try {
      store.get(record.doc_id);
      FAIL() << file;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::StorageCorrupt) << file;
    }
  }
}

TEST(Store, MissingFileIsCorrupt) {
  TempDir dir;
  IndexStore store(dir.path());
  auto record = Pipeline({}).run(sample_document(), BackendSpec::heuristic(), store);
  fs::remove(dir / record.doc_id / "index.json");
  try {
    store.get(record.doc_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StorageCorrupt);
  }
}

TEST(Store, RerunIsByteIdenticalExceptTimestamp) {
  TempDir dir;
  IndexStore store(dir.path(), ticking_clock());
  const Pipeline p({});
  auto first = p.run(sample_document(), BackendSpec::heuristic(), store);
  const auto index_bytes = slurp(dir / first.doc_id / "index.json");
  auto second = p.run(sample_document(), BackendSpec::heuristic(), store);
  EXPECT_EQ(slurp(dir / first.doc_id / "index.json"), index_bytes);
  EXPECT_EQ(second.index, first.index);
  EXPECT_NE(second.created_at, first.created_at);
  EXPECT_EQ(store.get(first.doc_id).created_at, second.created_at);
}

TEST(Store, SurvivesRestart) {
  TempDir dir;
  IndexRecord record;
  {
    IndexStore store(dir.path());
    record = mock_pipeline().run(sample_document(), BackendSpec::mock(), store);
  }
  IndexStore reopened(dir.path());
  EXPECT_EQ(reopened.get(record.doc_id), record);
  ASSERT_EQ(reopened.list().size(), 1u);
  EXPECT_EQ(reopened.list()[0].backend, BackendKind::Mock);
}

TEST(Store, ListOrderedByCreationTime) {
  TempDir dir;
  IndexStore store(dir.path(), ticking_clock());
  const Pipeline p({});
  std::vector<std::string> ids;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CorpusSpec spec;
    spec.seed = seed;
    ids.push_back(p.run(generate(spec).document, BackendSpec::heuristic(), store).doc_id);
  }
  auto entries = store.list();
  ASSERT_EQ(entries.size(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(entries[i].doc_id, ids[i]);
}

TEST(Store, ConcurrentRunsOnOneDocument) {
  TempDir dir;
  IndexStore store(dir.path());
  const Pipeline p({});
  const auto doc = sample_document();
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        try {
          p.run(doc, BackendSpec::heuristic(), store);
          if (store.get(doc.doc_id()).index != sample_gold()) ++failures;
        } catch (const Error&) {
          ++failures;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(store.list().size(), 1u);
}
