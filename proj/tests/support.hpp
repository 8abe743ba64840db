#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tocdex/pagedoc.hpp"
#include "tocdex/tocindex.hpp"

namespace testing_support {

/// Scratch directory removed on scope exit.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tocdex-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline tocdex::TocIndex make_index(
    std::vector<std::pair<std::pair<std::string, std::string>, std::vector<std::pair<std::string, std::string>>>>
        spec) {
  tocdex::TocIndex idx;
  for (auto& [head, subs] : spec) {
    tocdex::Heading h{head.first, head.second, {}};
    for (auto& [n, t] : subs) h.subheadings.push_back({n, t});
    idx.headings.push_back(std::move(h));
  }
  return idx;
}

/// Random printable string over a small alphabet (with some UTF-8).
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool allow_empty = true) {
  static const std::vector<std::string> kAlphabet = {"a", "B", "z", "0", "7", " ", ".", "-", "\"", "\\",
                                                     "/", "\t", "\xC3\x9C", "\xE2\x80\x93", "{", "}"};
  std::uniform_int_distribution<std::size_t> len(allow_empty ? 0 : 1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  std::string s;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s += kAlphabet[pick(rng)];
  return s;
}

inline tocdex::PagedDocument random_document(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_pages(1, 5), n_lines(0, 6), coin(0, 1);
  std::vector<tocdex::PageText> pages;
  const int n = n_pages(rng);
  for (int p = 1; p <= n; ++p) {
    tocdex::PageText page{p, {}};
    const int lines = n_lines(rng);
    for (int l = 0; l < lines; ++l) page.lines.push_back(random_text(rng, 24));
    pages.push_back(std::move(page));
  }
  std::optional<std::string> title;
  if (coin(rng)) title = random_text(rng, 12);
  return tocdex::PagedDocument(std::move(title), std::move(pages));
}

/// Schema-valid index with arbitrary (bracketed, so never blank) field text.
inline tocdex::TocIndex random_index(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_head(0, 5), n_sub(0, 4);
  auto field = [&] { return "[" + random_text(rng, 10) + "]"; };
  tocdex::TocIndex idx;
  const int heads = n_head(rng);
  for (int h = 0; h < heads; ++h) {
    tocdex::Heading head{field(), field(), {}};
    const int subs = n_sub(rng);
    for (int k = 0; k < subs; ++k) head.subheadings.push_back({field(), field()});
    idx.headings.push_back(std::move(head));
  }
  return idx;
}

}  // namespace testing_support
