#include "ctxassoc/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

TokenId SubwordTokenizer::require_special(std::string_view token) const {
  if (auto id = special_id(token)) return *id;
  throw ConfigError(fmt::format("tokenizer has no id for special token {}", token));
}

namespace {

std::string_view canonical_special(std::string_view word) {
  if (word == special::kContextOpenAlias) return special::kContextOpen;
  if (word == special::kContextCloseAlias) return special::kContextClose;
  return word;
}

}  // namespace

WordVocabTokenizer::WordVocabTokenizer(std::vector<std::string> tokens, SeparatorMode sep)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ConfigError(fmt::format("duplicate vocabulary entry '{}'", tokens_[i]));
  }
  auto need = [&](std::string_view t) {
    auto it = ids_.find(std::string(t));
    if (it == ids_.end()) throw ConfigError(fmt::format("vocabulary lacks required token {}", t));
    return it->second;
  };
  bos_ = need("<s>");
  eos_ = need("</s>");
  unk_ = need("<unk>");
  for (auto t : special::kSegmentTokens) need(t);
  sep_ = sep == SeparatorMode::native ? eos_ : need(special::kTruncationSep);
}

WordVocabTokenizer WordVocabTokenizer::from_words(std::vector<std::string> words, SeparatorMode sep) {
  std::vector<std::string> tokens = {"<s>", "<pad>", "</s>", "<unk>"};
  for (auto t : special::kSegmentTokens) tokens.emplace_back(t);
  tokens.emplace_back(special::kTruncationSep);
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (auto& w : words)
    if (std::find(tokens.begin(), tokens.end(), w) == tokens.end()) tokens.push_back(std::move(w));
  return WordVocabTokenizer(std::move(tokens), sep);
}

WordVocabTokenizer WordVocabTokenizer::load(const std::filesystem::path& file, SeparatorMode sep) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("{}: cannot open vocabulary", file.string()));
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return WordVocabTokenizer(std::move(tokens), sep);
}

void WordVocabTokenizer::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw ConfigError(fmt::format("{}: cannot write vocabulary", file.string()));
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<TokenId> WordVocabTokenizer::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> WordVocabTokenizer::encode_word(std::string_view word) const {
  return {lookup(canonical_special(word)).value_or(unk_)};
}

std::string WordVocabTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw ConfigError(fmt::format("token id {} outside vocabulary", id));
    if (!out.empty()) out += ' ';
    out += tokens_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::optional<TokenId> WordVocabTokenizer::special_id(std::string_view token) const {
  token = canonical_special(token);
  if (token == special::kTruncationSep) return sep_;
  for (auto t : special::kSegmentTokens)
    if (t == token) return lookup(token);
  if (token == "<s>" || token == "</s>" || token == "<unk>" || token == "<pad>") return lookup(token);
  return std::nullopt;
}

}  // namespace ctxassoc
