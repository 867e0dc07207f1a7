#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/errors.hpp"
#include "ctxassoc/tokenizer.hpp"

namespace ctxassoc {

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Decodes one code point starting at text[i]; malformed bytes decode as
// themselves so every byte is consumed.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 1;
  if (i + len > text.size()) len = 1;
  char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b >> 6) != 0x2) {
      len = 1;
      cp = b0;
      break;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

enum class CharClass { letter, number, space, other };

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return CharClass::letter;
    if (cp >= '0' && cp <= '9') return CharClass::number;
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D)) return CharClass::space;
    return CharClass::other;
  }
  if (cp == 0x85 || cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 ||
      cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000)
    return CharClass::space;
  if (cp < 0xC0) {
    if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return CharClass::letter;
    if (cp == 0xB2 || cp == 0xB3 || cp == 0xB9 || (cp >= 0xBC && cp <= 0xBE)) return CharClass::number;
    return CharClass::other;
  }
  if (cp == 0xD7 || cp == 0xF7) return CharClass::other;
  if (cp == 0x2070 || (cp >= 0x2074 && cp <= 0x2079) || (cp >= 0x2080 && cp <= 0x2089) ||
      (cp >= 0x2150 && cp <= 0x2189) || (cp >= 0x2460 && cp <= 0x249B))
    return CharClass::number;
  if ((cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
      (cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0x1F000 && cp <= 0x1FAFF))
    return CharClass::other;
  return CharClass::letter;
}

struct Decoded {
  std::vector<char32_t> cps;
  std::vector<std::size_t> offsets;  // byte offset of each code point, plus end
};

Decoded decode_utf8(std::string_view text) {
  Decoded d;
  std::size_t i = 0;
  while (i < text.size()) {
    d.offsets.push_back(i);
    d.cps.push_back(next_code_point(text, i));
  }
  d.offsets.push_back(text.size());
  return d;
}

const std::array<char32_t, 256>& byte_encoder() {
  static const auto table = [] {
    std::array<char32_t, 256> t{};
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) t[b] = direct[b] ? static_cast<char32_t>(b) : next++;
    return t;
  }();
  return table;
}

const std::unordered_map<char32_t, unsigned char>& byte_decoder() {
  static const auto table = [] {
    std::unordered_map<char32_t, unsigned char> t;
    const auto& enc = byte_encoder();
    for (int b = 0; b < 256; ++b) t[enc[b]] = static_cast<unsigned char>(b);
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> gpt2_pretokenize(std::string_view text) {
  const auto d = decode_utf8(text);
  const auto n = d.cps.size();
  std::vector<std::string> pieces;
  auto emit = [&](std::size_t from, std::size_t to) {
    pieces.emplace_back(text.substr(d.offsets[from], d.offsets[to] - d.offsets[from]));
  };
  auto cls = [&](std::size_t k) { return classify(d.cps[k]); };

  std::size_t i = 0;
  while (i < n) {
    if (d.cps[i] == U'\'' && i + 1 < n) {
      const auto c1 = d.cps[i + 1];
      if (c1 == U's' || c1 == U't' || c1 == U'm' || c1 == U'd') {
        emit(i, i + 2);
        i += 2;
        continue;
      }
      if (i + 2 < n) {
        const auto c2 = d.cps[i + 2];
        if ((c1 == U'r' && c2 == U'e') || (c1 == U'v' && c2 == U'e') || (c1 == U'l' && c2 == U'l')) {
          emit(i, i + 3);
          i += 3;
          continue;
        }
      }
    }
    std::size_t start = i;
    std::size_t body = i;
    if (d.cps[i] == U' ' && i + 1 < n && cls(i + 1) != CharClass::space) body = i + 1;
    const auto c = cls(body);
    if (c != CharClass::space) {
      std::size_t j = body + 1;
      while (j < n && cls(j) == c) ++j;
      emit(start, j);
      i = j;
      continue;
    }
    std::size_t j = i;
    while (j < n && cls(j) == CharClass::space) ++j;
    if (j < n && j - i > 1) {
      emit(i, j - 1);
      i = j - 1;
    } else {
      emit(i, j);
      i = j;
    }
  }
  return pieces;
}

ByteLevelBpeTokenizer ByteLevelBpeTokenizer::load(const std::filesystem::path& vocab_json,
                                                  const std::filesystem::path& merges_txt, SeparatorMode sep) {
  ByteLevelBpeTokenizer tok;
  {
    std::ifstream in(vocab_json);
    if (!in) throw ConfigError(fmt::format("{}: cannot open vocabulary", vocab_json.string()));
    nlohmann::json vocab;
    try {
      in >> vocab;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("{}: {}", vocab_json.string(), e.what()));
    }
    std::size_t max_id = 0;
    for (const auto& [token, id] : vocab.items()) max_id = std::max(max_id, id.get<std::size_t>());
    tok.id_to_token_.assign(vocab.empty() ? 0 : max_id + 1, std::string{});
    for (const auto& [token, id] : vocab.items()) {
      const auto idx = id.get<std::size_t>();
      tok.token_to_id_[token] = static_cast<TokenId>(idx);
      tok.id_to_token_[idx] = token;
    }
  }
  {
    std::ifstream in(merges_txt);
    if (!in) throw ConfigError(fmt::format("{}: cannot open merges", merges_txt.string()));
    std::size_t rank = 0;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.rfind("#version", 0) == 0) continue;
      const auto space = line.find(' ');
      if (space == std::string::npos) throw ParseError(fmt::format("{}: malformed merge '{}'", merges_txt.string(), line));
      tok.merge_ranks_.emplace(std::make_pair(line.substr(0, space), line.substr(space + 1)), rank++);
    }
  }
  tok.base_vocab_size_ = tok.id_to_token_.size();

  auto existing = [&](std::string_view t) -> std::optional<TokenId> {
    auto it = tok.token_to_id_.find(std::string(t));
    if (it == tok.token_to_id_.end()) return std::nullopt;
    return it->second;
  };
  auto add_special = [&](std::string_view t) {
    TokenId id;
    if (auto found = existing(t)) {
      id = *found;
    } else {
      id = static_cast<TokenId>(tok.id_to_token_.size());
      tok.id_to_token_.emplace_back(t);
      tok.token_to_id_.emplace(std::string(t), id);
    }
    tok.specials_.emplace(std::string(t), id);
    return id;
  };
  for (std::string_view t : {"<s>", "<pad>", "</s>", "<unk>", "<mask>"})
    if (auto id = existing(t)) tok.specials_.emplace(std::string(t), *id);
  if (!existing("<s>") || !existing("</s>") || !existing("<unk>"))
    throw ConfigError(fmt::format("{}: vocabulary lacks <s>, </s> or <unk>", vocab_json.string()));
  tok.bos_ = *existing("<s>");
  tok.eos_ = *existing("</s>");
  tok.unk_ = *existing("<unk>");
  for (auto t : special::kSegmentTokens) add_special(t);
  tok.sep_ = sep == SeparatorMode::native ? tok.eos_ : add_special(special::kTruncationSep);
  return tok;
}

std::vector<std::string> ByteLevelBpeTokenizer::bpe(const std::string& piece) const {
  std::vector<std::string> parts;
  {
    const auto& enc = byte_encoder();
    for (unsigned char b : piece) {
      std::string s;
      append_utf8(s, enc[b]);
      parts.push_back(std::move(s));
    }
  }
  while (parts.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      auto it = merge_ranks_.find({parts[i], parts[i + 1]});
      if (it != merge_ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = i;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const std::string left = parts[best];
    const std::string right = parts[best + 1];
    std::vector<std::string> merged;
    merged.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size();) {
      if (i + 1 < parts.size() && parts[i] == left && parts[i + 1] == right) {
        merged.push_back(left + right);
        i += 2;
      } else {
        merged.push_back(parts[i]);
        ++i;
      }
    }
    parts = std::move(merged);
  }
  return parts;
}

std::vector<TokenId> ByteLevelBpeTokenizer::encode_word(std::string_view word) const {
  if (auto id = special_id(word)) return {*id};
  std::vector<TokenId> ids;
  std::string text = " ";
  text += word;
  for (const auto& piece : gpt2_pretokenize(text)) {
    for (const auto& sub : bpe(piece)) {
      auto it = token_to_id_.find(sub);
      ids.push_back(it == token_to_id_.end() ? unk_ : it->second);
    }
  }
  return ids;
}

std::string ByteLevelBpeTokenizer::decode(std::span<const TokenId> ids) const {
  std::string bytes;
  const auto& dec = byte_decoder();
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
      throw ConfigError(fmt::format("token id {} outside vocabulary", id));
    const auto& token = id_to_token_[static_cast<std::size_t>(id)];
    if (specials_.contains(token)) {
      bytes += ' ';
      bytes += token;
      continue;
    }
    const auto d = decode_utf8(token);
    for (auto cp : d.cps) {
      auto it = dec.find(cp);
      if (it != dec.end()) bytes += static_cast<char>(it->second);
      else append_utf8(bytes, cp);
    }
  }
  if (!bytes.empty() && bytes.front() == ' ') bytes.erase(0, 1);
  return bytes;
}

std::optional<TokenId> ByteLevelBpeTokenizer::special_id(std::string_view token) const {
  if (token == special::kContextOpenAlias) token = special::kContextOpen;
  if (token == special::kContextCloseAlias) token = special::kContextClose;
  if (token == special::kTruncationSep) return sep_;
  auto it = specials_.find(std::string(token));
  if (it == specials_.end()) return std::nullopt;
  return it->second;
}

}  // namespace ctxassoc
