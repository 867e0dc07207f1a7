#include "ctxassoc/safetensors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1Fu;
  std::uint32_t mant = h & 0x3FFu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((mant & 0x400u) == 0) {
        mant <<= 1;
        --exp;
      }
      mant &= 0x3FFu;
      bits = sign | (exp << 23) | (mant << 13);
    }
  } else if (exp == 0x1F) {
    bits = sign | 0x7F800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

std::uint64_t read_le64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::map<std::string, Tensor> load_safetensors(const std::filesystem::path& file) {
  static_assert(std::endian::native == std::endian::little, "safetensors loader assumes a little-endian host");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open checkpoint", file.string()));
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) throw ParseError(fmt::format("{}: truncated header", file.string()));
  const auto header_len = read_le64(len_bytes);
  if (header_len > (std::uint64_t{1} << 30)) throw ParseError(fmt::format("{}: implausible header length", file.string()));
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
    throw ParseError(fmt::format("{}: truncated header", file.string()));

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }

  const auto data_start = static_cast<std::streamoff>(8 + header_len);
  std::map<std::string, Tensor> tensors;
  for (const auto& [name, info] : meta.items()) {
    if (name == "__metadata__") continue;
    Tensor t;
    std::string dtype;
    std::uint64_t begin = 0, end = 0;
    try {
      dtype = info.at("dtype").get<std::string>();
      t.shape = info.at("shape").get<std::vector<std::int64_t>>();
      begin = info.at("data_offsets").at(0).get<std::uint64_t>();
      end = info.at("data_offsets").at(1).get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("{}: tensor {}: {}", file.string(), name, e.what()));
    }
    const auto n = static_cast<std::size_t>(t.numel());
    const std::size_t width = dtype == "F32" ? 4 : (dtype == "F16" || dtype == "BF16") ? 2 : 0;
    if (width == 0) throw ParseError(fmt::format("{}: tensor {} has unsupported dtype {}", file.string(), name, dtype));
    if (end < begin || end - begin != n * width)
      throw ParseError(fmt::format("{}: tensor {} byte range does not match its shape", file.string(), name));

    std::vector<unsigned char> raw(end - begin);
    in.seekg(data_start + static_cast<std::streamoff>(begin));
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw ParseError(fmt::format("{}: tensor {} data truncated", file.string(), name));
    t.data.resize(n);
    if (dtype == "F32") {
      std::memcpy(t.data.data(), raw.data(), raw.size());
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        t.data[i] = dtype == "F16" ? half_to_float(v) : std::bit_cast<float>(static_cast<std::uint32_t>(v) << 16);
      }
    }
    tensors.emplace(name, std::move(t));
  }
  return tensors;
}

void save_safetensors(const std::map<std::string, Tensor>& tensors, const std::filesystem::path& file) {
  nlohmann::json meta = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    const auto bytes = t.data.size() * 4;
    meta[name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string header = meta.dump();
  while (header.size() % 8 != 0) header += ' ';
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("{}: cannot write checkpoint", file.string()));
  const std::uint64_t len = header.size();
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((len >> (8 * i)) & 0xFF));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
}

}  // namespace ctxassoc
