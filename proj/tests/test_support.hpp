#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "ctxassoc/corpus.hpp"

namespace test_support {

inline const std::filesystem::path kFixtures = CTXASSOC_FIXTURES_DIR;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("ctxassoc-{}-{}-{}", tag, ::getpid(), counter.fetch_add(1));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ctxassoc::Sentence sentence(std::size_t index, const std::string& text) {
  ctxassoc::Sentence s;
  s.index = index;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(' ', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) s.tokens.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return s;
}

/// Document whose sentences are "w0 w1 ... w{len-1}" with `count` sentences.
inline ctxassoc::Document blank_document(const std::string& id, std::size_t count, std::size_t len = 6) {
  ctxassoc::Document doc;
  doc.doc_id = id;
  for (std::size_t i = 0; i < count; ++i) {
    ctxassoc::Sentence s;
    s.index = i;
    for (std::size_t t = 0; t < len; ++t) s.tokens.push_back(fmt::format("s{}w{}", i, t));
    doc.sentences.push_back(std::move(s));
  }
  return doc;
}

inline ctxassoc::ContextTypeId type(const std::string& grounding) {
  return {grounding, ctxassoc::infer_context_category(grounding).value_or(ctxassoc::ContextCategory::species)};
}

inline void add_event(ctxassoc::Document& doc, const std::string& id, std::size_t sentence, std::size_t start,
                      std::size_t end, const std::string& label = "phosphorylation") {
  doc.event_mentions.push_back({id, sentence, {start, end}, label});
}

inline void add_mention(ctxassoc::Document& doc, const std::string& id, std::size_t sentence, std::size_t start,
                        std::size_t end, const std::string& grounding) {
  doc.context_mentions.push_back({id, sentence, {start, end}, type(grounding)});
}

inline void annotate(ctxassoc::Document& doc, const std::string& event, const std::string& grounding) {
  doc.annotations.push_back({event, type(grounding)});
}

}  // namespace test_support
