#include "ctxassoc/encoder.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

HiddenStates Encoder::encode(std::span<const TokenId> ids) const {
  if (ids.size() > max_len())
    throw DimensionError(fmt::format("{} encoder accepts at most {} ids, got {}", name(), max_len(), ids.size()));
  if (ids.empty()) throw DimensionError("cannot encode an empty sequence");
  return encode_impl(ids);
}

Eigen::VectorXd pool_markers(const HiddenStates& hidden, const MarkerPositions& markers, MarkerPooling pooling) {
  const std::size_t rows = static_cast<std::size_t>(hidden.rows());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(hidden.cols());
  std::size_t used = 0;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    if (pooling == MarkerPooling::opening_only && (m == marker::kEventClose || m == marker::kContextClose)) continue;
    if (markers[m] >= rows)
      throw DimensionError(fmt::format("marker position {} outside {} hidden states", markers[m], rows));
    sum += hidden.row(static_cast<Eigen::Index>(markers[m])).transpose();
    ++used;
  }
  return sum / static_cast<double>(used);
}

ClassificationEmbedding classification_embedding(const HiddenStates& hidden, const EvidenceSegment& segment,
                                                 MarkerPooling pooling) {
  return {pool_markers(hidden, segment.markers, pooling), segment.doc_id, segment.event_id, segment.mention_id,
          segment.distance};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

MockEncoder::MockEncoder(MockEncoderOptions options) : options_(options) {
  if (options_.embedding_dim == 0 || options_.max_len == 0)
    throw ConfigError("mock encoder needs positive embedding_dim and max_len");
  if (options_.sentinel_dims > options_.embedding_dim)
    throw ConfigError("sentinel_dims exceeds embedding_dim");
}

HiddenStates MockEncoder::encode_impl(std::span<const TokenId> ids) const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto dim = static_cast<Eigen::Index>(options_.embedding_dim);
  HiddenStates h(n, dim);
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto base = splitmix64(options_.seed ^ splitmix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(
                                                                ids[static_cast<std::size_t>(p)]))
                                                            << 32) |
                                                           static_cast<std::uint64_t>(p)));
    for (Eigen::Index d = 0; d < dim; ++d) {
      const auto bits = splitmix64(base + static_cast<std::uint64_t>(d)) >> 11;  // 53 bits
      h(p, d) = 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
    }
  }
  if (options_.sentinel_id &&
      std::find(ids.begin(), ids.end(), *options_.sentinel_id) != ids.end()) {
    h.leftCols(static_cast<Eigen::Index>(options_.sentinel_dims)).array() += options_.sentinel_shift;
  }
  return h;
}

}  // namespace ctxassoc
