#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctxassoc {

/// Half-open token interval [start, end) inside one sentence.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const { return end - start; }
  [[nodiscard]] bool overlaps(const TokenSpan& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

enum class ContextCategory { species, organ, tissue, cell_type, cell_line };

std::string_view to_string(ContextCategory category);
ContextCategory parse_context_category(std::string_view text);

/// Guesses the container category from the grounding namespace
/// (`taxonomy:`, `uberon:`, `tissuelist:`, `cl:`, `cellosaurus:` ...).
std::optional<ContextCategory> infer_context_category(std::string_view grounding_id);

/// Ontology-grounded biological container type. Identity is the grounding id.
struct ContextTypeId {
  std::string grounding_id;
  ContextCategory category = ContextCategory::species;

  friend bool operator==(const ContextTypeId& a, const ContextTypeId& b) {
    return a.grounding_id == b.grounding_id;
  }
  friend auto operator<=>(const ContextTypeId& a, const ContextTypeId& b) {
    return a.grounding_id <=> b.grounding_id;
  }
};

struct Sentence {
  std::size_t index = 0;
  std::vector<std::string> tokens;
};

struct EventMention {
  std::string event_id;
  std::size_t sentence_index = 0;
  TokenSpan span;
  std::string event_label;
};

struct ContextMention {
  std::string mention_id;
  std::size_t sentence_index = 0;
  TokenSpan span;
  ContextTypeId context_type;
};

/// Gold annotations are positive only.
struct ContextAnnotation {
  std::string event_id;
  ContextTypeId context_type;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::vector<EventMention> event_mentions;
  std::vector<ContextMention> context_mentions;
  std::vector<ContextAnnotation> annotations;

  [[nodiscard]] const EventMention* find_event(std::string_view event_id) const;
  [[nodiscard]] const ContextMention* find_mention(std::string_view mention_id) const;

  /// Distinct context types with at least one mention, sorted by grounding id.
  [[nodiscard]] std::vector<ContextTypeId> context_types() const;
};

/// Throws ValidationError naming the document and offending id.
void validate_document(const Document& doc);

struct Corpus {
  std::vector<Document> documents;  // sorted by doc_id
  std::vector<std::string> dev_doc_ids;
  std::vector<std::string> cv_doc_ids;

  [[nodiscard]] const Document& at(std::string_view doc_id) const;
  [[nodiscard]] const Document* find(std::string_view doc_id) const;
  [[nodiscard]] std::vector<std::string> doc_ids() const;
};

/// Sorts documents, validates each one and checks corpus-wide grounding
/// consistency (one category per grounding id).
void finalize_corpus(Corpus& corpus);

struct Evidence {
  ContextMention mention;
  std::size_t distance = 0;
};

/// One (event mention, context type) classification problem.
struct CandidatePair {
  std::string doc_id;
  EventMention event;
  ContextTypeId context_type;
  bool label = false;
  std::vector<Evidence> evidence;  // ascending distance, reading order on ties

  [[nodiscard]] std::size_t nearest_distance() const { return evidence.front().distance; }
};

std::size_t sentence_distance(const EventMention& event, const ContextMention& mention);

/// Cartesian product of event mentions and context types present in the
/// document; label is true iff the pair is annotated.
std::vector<CandidatePair> generate_candidates(const Document& doc);
std::vector<CandidatePair> generate_candidates(const Corpus& corpus);

struct DistanceStats {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> median;
  std::optional<std::size_t> max;
  /// distance -> number of relations, for every observed distance.
  std::map<std::size_t, std::size_t> histogram;
};

/// Nearest-mention distances of positive pairs with distance > 0.
DistanceStats corpus_distance_stats(const Corpus& corpus);

struct TypeDetections {
  std::string doc_id;
  ContextTypeId context_type;
  std::size_t count = 0;  // n_i
};

struct DetectionSummary {
  std::vector<TypeDetections> entries;  // sorted by (doc_id, grounding_id)
  std::map<std::size_t, std::size_t> distribution;  // n_i -> number of entries
  double fraction_two_or_more = 0.0;
};

DetectionSummary detections_per_type(const Corpus& corpus);

struct Fold {
  std::vector<std::string> doc_ids;
  std::vector<CandidatePair> pairs;
};

struct FoldSplit {
  Fold dev;
  std::vector<Fold> folds;
};

/// Holds out dev documents and partitions the remaining documents into
/// folds of fold_size documents after a seeded shuffle.
FoldSplit split_folds(const Corpus& corpus, const std::set<std::string>& dev_doc_ids,
                      std::size_t fold_size, std::uint64_t seed);

/// Restricted form used by tuning: partitions only the listed documents.
std::vector<Fold> partition_documents(const Corpus& corpus, std::vector<std::string> doc_ids,
                                      std::size_t fold_size, std::uint64_t seed);

struct CorpusTotals {
  std::size_t documents = 0;
  std::size_t event_mentions = 0;
  std::size_t context_mentions = 0;
  std::size_t annotations = 0;
};

CorpusTotals corpus_totals(const Corpus& corpus);
CorpusTotals corpus_totals(const Corpus& corpus, const std::vector<std::string>& doc_ids);

// ---- file format -------------------------------------------------------

/// Loads a corpus directory: one `<doc_id>.json` per article plus an
/// optional `manifest.json`. See docs/corpus_format.md.
Corpus load_corpus(const std::filesystem::path& dir);
Document parse_document_file(const std::filesystem::path& file);
void write_document_file(const Document& doc, const std::filesystem::path& file);
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Converts the per-article TSV layout (see docs/corpus_format.md) into the
/// native corpus representation.
Corpus convert_tsv_release(const std::filesystem::path& dir);

}  // namespace ctxassoc
