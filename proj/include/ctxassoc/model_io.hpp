#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "ctxassoc/heads.hpp"

namespace ctxassoc {

inline constexpr int kModelFormatVersion = 1;

/// What the head was trained on top of; saved so a reload can refuse a
/// mismatched encoder.
struct EncoderReference {
  std::string encoder;  // "mock" or checkpoint directory
  std::size_t embedding_dim = 0;
  std::size_t max_len = 0;
  std::string pooling;
  std::string separator;
};

struct ModelArtifact {
  HeadModel model;
  EncoderReference encoder;
};

/// Writes `manifest.json` and `head.json` into `dir` (created if missing).
void save_model(const ModelArtifact& artifact, const std::filesystem::path& dir);
/// Throws ParseError on a malformed artifact or an unknown format version.
ModelArtifact load_model(const std::filesystem::path& dir);

}  // namespace ctxassoc
