#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ctxassoc {

using TokenId = std::int32_t;

/// Marker and mask words inserted by segmentation. `<CTX>` is accepted as an
/// alias of `<CON>` on input.
namespace special {
inline constexpr std::string_view kEventOpen = "<EVT>";
inline constexpr std::string_view kEventClose = "</EVT>";
inline constexpr std::string_view kContextOpen = "<CON>";
inline constexpr std::string_view kContextClose = "</CON>";
inline constexpr std::string_view kEventMask = "[EVENT]";
inline constexpr std::string_view kContextMask = "[CONTEXT]";
inline constexpr std::string_view kTruncationSep = "<SEP>";

inline constexpr std::string_view kContextOpenAlias = "<CTX>";
inline constexpr std::string_view kContextCloseAlias = "</CTX>";

inline constexpr std::string_view kSegmentTokens[] = {kEventOpen,   kEventClose, kContextOpen,
                                                      kContextClose, kEventMask,  kContextMask};
}  // namespace special

/// How the truncation separator is realized.
enum class SeparatorMode {
  native,     // reuse the tokenizer's own separator (`</s>` for RoBERTa)
  dedicated,  // add `<SEP>` as a new special token
};

/// Word-sequence to subword-id mapping. Implementations are immutable after
/// construction, so concurrent encode calls are safe.
class SubwordTokenizer {
 public:
  virtual ~SubwordTokenizer() = default;

  /// Ids for one pre-tokenized word. Special tokens map to a single id.
  [[nodiscard]] virtual std::vector<TokenId> encode_word(std::string_view word) const = 0;
  [[nodiscard]] virtual std::string decode(std::span<const TokenId> ids) const = 0;
  [[nodiscard]] virtual std::size_t vocab_size() const = 0;

  /// Id of a registered special token, if any.
  [[nodiscard]] virtual std::optional<TokenId> special_id(std::string_view token) const = 0;

  [[nodiscard]] virtual std::optional<TokenId> bos_id() const = 0;
  [[nodiscard]] virtual std::optional<TokenId> eos_id() const = 0;
  [[nodiscard]] virtual TokenId separator_id() const = 0;

  /// Id lookup that throws ConfigError when the token was never registered.
  [[nodiscard]] TokenId require_special(std::string_view token) const;
};

/// One id per word; unseen words map to `<unk>`. Used with the mock
/// encoder. The vocabulary file is one token per line, id = line number.
class WordVocabTokenizer final : public SubwordTokenizer {
 public:
  explicit WordVocabTokenizer(std::vector<std::string> tokens, SeparatorMode sep = SeparatorMode::dedicated);

  /// Builds `<s> <pad> </s> <unk>`, the segment specials, `<SEP>` and then
  /// every distinct corpus word in sorted order.
  static WordVocabTokenizer from_words(std::vector<std::string> words, SeparatorMode sep = SeparatorMode::dedicated);
  static WordVocabTokenizer load(const std::filesystem::path& file, SeparatorMode sep = SeparatorMode::dedicated);
  void save(const std::filesystem::path& file) const;

  [[nodiscard]] std::vector<TokenId> encode_word(std::string_view word) const override;
  [[nodiscard]] std::string decode(std::span<const TokenId> ids) const override;
  [[nodiscard]] std::size_t vocab_size() const override { return tokens_.size(); }
  [[nodiscard]] std::optional<TokenId> special_id(std::string_view token) const override;
  [[nodiscard]] std::optional<TokenId> bos_id() const override { return bos_; }
  [[nodiscard]] std::optional<TokenId> eos_id() const override { return eos_; }
  [[nodiscard]] TokenId separator_id() const override { return sep_; }

  [[nodiscard]] std::optional<TokenId> lookup(std::string_view word) const;
  [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  TokenId bos_ = 0, eos_ = 0, unk_ = 0, sep_ = 0;
};

/// Byte-level BPE as used by RoBERTa (`vocab.json` + `merges.txt`). Words
/// are encoded with a leading space, matching pre-split input with
/// `add_prefix_space`. The six segment specials (and `<SEP>` in dedicated
/// mode) are appended to the vocabulary when missing.
class ByteLevelBpeTokenizer final : public SubwordTokenizer {
 public:
  static ByteLevelBpeTokenizer load(const std::filesystem::path& vocab_json, const std::filesystem::path& merges_txt,
                                    SeparatorMode sep = SeparatorMode::native);

  [[nodiscard]] std::vector<TokenId> encode_word(std::string_view word) const override;
  [[nodiscard]] std::string decode(std::span<const TokenId> ids) const override;
  [[nodiscard]] std::size_t vocab_size() const override { return id_to_token_.size(); }
  [[nodiscard]] std::optional<TokenId> special_id(std::string_view token) const override;
  [[nodiscard]] std::optional<TokenId> bos_id() const override { return bos_; }
  [[nodiscard]] std::optional<TokenId> eos_id() const override { return eos_; }
  [[nodiscard]] TokenId separator_id() const override { return sep_; }

  /// Size of the vocabulary before segment specials were appended.
  [[nodiscard]] std::size_t base_vocab_size() const { return base_vocab_size_; }

 private:
  ByteLevelBpeTokenizer() = default;
  [[nodiscard]] std::vector<std::string> bpe(const std::string& piece) const;

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::map<std::pair<std::string, std::string>, std::size_t> merge_ranks_;
  std::unordered_map<std::string, TokenId> specials_;
  std::size_t base_vocab_size_ = 0;
  TokenId bos_ = 0, eos_ = 2, unk_ = 3, sep_ = 2;
};

/// Splits on the GPT-2 pre-tokenization classes (contractions, letter runs,
/// digit runs, other symbols, whitespace). Non-ASCII code points count as
/// letters.
std::vector<std::string> gpt2_pretokenize(std::string_view text);

}  // namespace ctxassoc
