#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "ctxassoc/segmentation.hpp"
#include "ctxassoc/tokenizer.hpp"

namespace ctxassoc {

/// One row per input position, embedding_dim columns.
using HiddenStates = Eigen::MatrixXd;

/// Maps token ids to hidden states. Implementations are deterministic and
/// safe to call concurrently.
class Encoder {
 public:
  virtual ~Encoder() = default;
  [[nodiscard]] virtual std::size_t embedding_dim() const = 0;
  [[nodiscard]] virtual std::size_t max_len() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;

  /// Throws DimensionError when ids exceed max_len.
  [[nodiscard]] HiddenStates encode(std::span<const TokenId> ids) const;
  [[nodiscard]] HiddenStates encode(const EvidenceSegment& segment) const { return encode(segment.ids); }

 protected:
  [[nodiscard]] virtual HiddenStates encode_impl(std::span<const TokenId> ids) const = 0;
};

enum class MarkerPooling {
  all_markers,   // mean of <EVT>, </EVT>, <CON>, </CON>
  opening_only,  // mean of <EVT>, <CON>
};

struct ClassificationEmbedding {
  Eigen::VectorXd vector;
  std::string doc_id;
  std::string event_id;
  std::string mention_id;
  std::size_t distance = 0;
};

/// Mean of the hidden states at the marker positions.
Eigen::VectorXd pool_markers(const HiddenStates& hidden, const MarkerPositions& markers,
                             MarkerPooling pooling = MarkerPooling::all_markers);

ClassificationEmbedding classification_embedding(const HiddenStates& hidden, const EvidenceSegment& segment,
                                                 MarkerPooling pooling = MarkerPooling::all_markers);

struct MockEncoderOptions {
  std::size_t embedding_dim = 32;
  std::size_t max_len = 512;
  std::uint64_t seed = 0x5eed;
  std::optional<TokenId> sentinel_id;
  std::size_t sentinel_dims = 4;
  double sentinel_shift = 3.0;
};

/// Seeded hash encoder. Entry (p, d) is uniform in [-1, 1] from a hash of
/// (seed, id at p, p, d). When the sentinel id occurs anywhere in the input,
/// every position gains `sentinel_shift` on dims [0, sentinel_dims).
///
/// With the defaults the marker mean over the sentinel dims sums to at most
/// 4 without the sentinel and at least 8 with it, so the projection onto
/// those dims separates the two populations with margin 4.
class MockEncoder final : public Encoder {
 public:
  explicit MockEncoder(MockEncoderOptions options);

  [[nodiscard]] std::size_t embedding_dim() const override { return options_.embedding_dim; }
  [[nodiscard]] std::size_t max_len() const override { return options_.max_len; }
  [[nodiscard]] std::string name() const override { return "mock"; }
  [[nodiscard]] const MockEncoderOptions& options() const { return options_; }

 protected:
  [[nodiscard]] HiddenStates encode_impl(std::span<const TokenId> ids) const override;

 private:
  MockEncoderOptions options_;
};

}  // namespace ctxassoc
