#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/errors.hpp"
#include "test_support.hpp"

using namespace ctxassoc;
using namespace test_support;

namespace {

Corpus corpus_of(std::vector<Document> docs) {
  Corpus c;
  c.documents = std::move(docs);
  finalize_corpus(c);
  return c;
}

// Two events, three context types, two annotations.
Document two_by_three() {
  auto doc = blank_document("D1", 4);
  add_event(doc, "E1", 0, 0, 1);
  add_event(doc, "E2", 2, 0, 1);
  add_mention(doc, "M1", 1, 0, 1, "taxonomy:9606");
  add_mention(doc, "M2", 1, 2, 3, "uberon:0002107");
  add_mention(doc, "M3", 3, 1, 2, "cl:0000084");
  add_mention(doc, "M4", 3, 3, 4, "taxonomy:9606");
  annotate(doc, "E1", "taxonomy:9606");
  annotate(doc, "E2", "cl:0000084");
  return doc;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("candidate generation is the event x type product minus annotations") {
    const auto pairs = generate_candidates(two_by_three());
    CHECK(pairs.size() == 6);
    CHECK(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.label; }) == 2);
    for (const auto& p : pairs) {
      const bool annotated = (p.event.event_id == "E1" && p.context_type.grounding_id == "taxonomy:9606") ||
                             (p.event.event_id == "E2" && p.context_type.grounding_id == "cl:0000084");
      CHECK(p.label == annotated);
      REQUIRE_FALSE(p.evidence.empty());
      for (const auto& ev : p.evidence) CHECK(ev.mention.context_type == p.context_type);
      CHECK(std::is_sorted(p.evidence.begin(), p.evidence.end(),
                           [](const auto& a, const auto& b) { return a.distance < b.distance; }));
    }
  }

  TEST_CASE("document without context mentions yields no pairs") {
    auto doc = blank_document("D0", 2);
    add_event(doc, "E1", 0, 0, 1);
    CHECK(generate_candidates(doc).empty());
  }

  TEST_CASE("evidence ties follow reading order") {
    auto doc = blank_document("T", 5);
    add_event(doc, "E", 2, 0, 1);
    add_mention(doc, "late", 3, 4, 5, "taxonomy:10090");
    add_mention(doc, "same_sent_late", 1, 3, 4, "taxonomy:10090");
    add_mention(doc, "same_sent_early", 1, 1, 2, "taxonomy:10090");
    const auto pairs = generate_candidates(doc);
    REQUIRE(pairs.size() == 1);
    const auto& ev = pairs[0].evidence;
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].mention.mention_id == "same_sent_early");
    CHECK(ev[1].mention.mention_id == "same_sent_late");
    CHECK(ev[2].mention.mention_id == "late");
  }

  TEST_CASE("sentence distance") {
    const EventMention e{"E", 5, {0, 1}, ""};
    CHECK(sentence_distance(e, ContextMention{"M", 3, {0, 1}, {}}) == 2);
    CHECK(sentence_distance(e, ContextMention{"M", 5, {2, 3}, {}}) == 0);
    CHECK(sentence_distance(EventMention{"E", 0, {0, 1}, ""}, ContextMention{"M", 225, {0, 1}, {}}) == 225);
    CHECK(sentence_distance(EventMention{"E", 3, {0, 1}, ""}, ContextMention{"M", 5, {0, 1}, {}}) ==
          sentence_distance(EventMention{"E", 5, {0, 1}, ""}, ContextMention{"M", 3, {0, 1}, {}}));
  }

  TEST_CASE("distance statistics over inter-sentence positives") {
    // Positive nearest distances 1, 5, 5, 225 plus one same-sentence positive
    // and one negative, both of which must be ignored.
    auto doc = blank_document("S", 230, 3);
    add_event(doc, "E1", 10, 0, 1);
    add_mention(doc, "A1", 11, 0, 1, "taxonomy:1");
    add_event(doc, "E2", 20, 0, 1);
    add_mention(doc, "B1", 25, 0, 1, "taxonomy:2");
    add_event(doc, "E3", 40, 0, 1);
    add_mention(doc, "C1", 35, 0, 1, "taxonomy:3");
    add_mention(doc, "C2", 47, 0, 1, "taxonomy:3");
    add_event(doc, "E4", 0, 0, 1);
    add_mention(doc, "D1", 225, 0, 1, "taxonomy:4");
    add_event(doc, "E5", 100, 0, 1);
    add_mention(doc, "F1", 100, 1, 2, "taxonomy:5");
    annotate(doc, "E1", "taxonomy:1");
    annotate(doc, "E2", "taxonomy:2");
    annotate(doc, "E3", "taxonomy:3");
    annotate(doc, "E4", "taxonomy:4");
    annotate(doc, "E5", "taxonomy:5");
    const auto stats = corpus_distance_stats(corpus_of({doc}));
    CHECK(stats.count == 4);
    REQUIRE(stats.mean);
    CHECK(*stats.mean == doctest::Approx(59.0));
    CHECK(*stats.median == doctest::Approx(5.0));
    CHECK(*stats.max == 225);
    CHECK(stats.histogram == std::map<std::size_t, std::size_t>{{1, 1}, {5, 2}, {225, 1}});
  }

  TEST_CASE("distance statistics without positives are absent") {
    auto doc = blank_document("N", 3);
    add_event(doc, "E", 0, 0, 1);
    add_mention(doc, "M", 2, 0, 1, "taxonomy:9606");
    const auto stats = corpus_distance_stats(corpus_of({doc}));
    CHECK(stats.count == 0);
    CHECK_FALSE(stats.mean.has_value());
    CHECK_FALSE(stats.median.has_value());
    CHECK_FALSE(stats.max.has_value());
  }

  TEST_CASE("detections per type") {
    auto doc = blank_document("D", 3);
    add_event(doc, "E", 0, 0, 1);
    add_mention(doc, "M1", 0, 2, 3, "taxonomy:9606");
    add_mention(doc, "M2", 1, 2, 3, "taxonomy:9606");
    add_mention(doc, "M3", 2, 2, 3, "taxonomy:9606");
    add_mention(doc, "M4", 2, 4, 5, "uberon:0002107");
    const auto summary = detections_per_type(corpus_of({doc}));
    REQUIRE(summary.entries.size() == 2);
    CHECK(summary.entries[0].context_type.grounding_id == "taxonomy:9606");
    CHECK(summary.entries[0].count == 3);
    CHECK(summary.entries[1].count == 1);
    CHECK(summary.fraction_two_or_more == doctest::Approx(0.5));
    for (const auto& e : summary.entries) CHECK(e.context_type.grounding_id != "cl:0000084");
  }

  TEST_CASE("validation rejects broken documents") {
    SUBCASE("annotation referencing an absent event") {
      auto doc = two_by_three();
      annotate(doc, "E9", "taxonomy:9606");
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("annotation of a type without mentions") {
      auto doc = two_by_three();
      annotate(doc, "E1", "taxonomy:10116");
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("span outside its sentence") {
      auto doc = two_by_three();
      add_mention(doc, "M9", 0, 5, 7, "taxonomy:9606");
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("empty span") {
      auto doc = two_by_three();
      add_event(doc, "E9", 0, 2, 2);
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("sentence index out of range") {
      auto doc = two_by_three();
      add_event(doc, "E9", 9, 0, 1);
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("duplicate annotation") {
      auto doc = two_by_three();
      annotate(doc, "E1", "taxonomy:9606");
      CHECK_THROWS_AS(validate_document(doc), ValidationError);
    }
    SUBCASE("error names the document and the id") {
      auto doc = two_by_three();
      annotate(doc, "E9", "taxonomy:9606");
      try {
        validate_document(doc);
        FAIL("expected a validation error");
      } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("D1") != std::string::npos);
        CHECK(what.find("E9") != std::string::npos);
      }
    }
  }

  TEST_CASE("fold split of 20 documents with fold size 3") {
    std::vector<Document> docs;
    for (int i = 0; i < 23; ++i) {
      auto doc = blank_document(fmt::format("DOC{:02d}", i), 2);
      add_event(doc, "E", 0, 0, 1);
      add_mention(doc, "M", 1, 0, 1, "taxonomy:9606");
      annotate(doc, "E", "taxonomy:9606");
      docs.push_back(std::move(doc));
    }
    const auto corpus = corpus_of(docs);
    const std::set<std::string> dev = {"DOC00", "DOC05", "DOC10"};
    const auto split = split_folds(corpus, dev, 3, 11);
    REQUIRE(split.folds.size() == 7);
    std::vector<std::size_t> sizes;
    for (const auto& f : split.folds) sizes.push_back(f.doc_ids.size());
    CHECK(sizes == std::vector<std::size_t>{3, 3, 3, 3, 3, 3, 2});

    std::set<std::string> seen(split.dev.doc_ids.begin(), split.dev.doc_ids.end());
    CHECK(seen == dev);
    std::size_t total = seen.size();
    for (const auto& f : split.folds) {
      for (const auto& id : f.doc_ids) CHECK(seen.insert(id).second);
      total += f.doc_ids.size();
      for (const auto& p : f.pairs)
        CHECK(std::find(f.doc_ids.begin(), f.doc_ids.end(), p.doc_id) != f.doc_ids.end());
    }
    CHECK(total == corpus.documents.size());

    const auto again = split_folds(corpus, dev, 3, 11);
    for (std::size_t f = 0; f < split.folds.size(); ++f) CHECK(again.folds[f].doc_ids == split.folds[f].doc_ids);

    CHECK(split_folds(corpus, dev, 50, 11).folds.size() == 1);
    CHECK_THROWS_AS(split_folds(corpus, {"NOPE"}, 3, 11), ValidationError);
    CHECK_THROWS_AS(split_folds(corpus, dev, 0, 11), ConfigError);
  }

  TEST_CASE("categories are inferred from grounding namespaces") {
    CHECK(infer_context_category("taxonomy:9606") == ContextCategory::species);
    CHECK(infer_context_category("uberon:0002107") == ContextCategory::organ);
    CHECK(infer_context_category("cl:0000084") == ContextCategory::cell_type);
    CHECK(infer_context_category("cellosaurus:CVCL_0030") == ContextCategory::cell_line);
    CHECK_FALSE(infer_context_category("mystery:1").has_value());
  }

  TEST_CASE("fixture corpus loads with hand-counted totals") {
    const auto corpus = load_corpus(kFixtures / "mini_corpus");
    CHECK(corpus.documents.size() == 2);
    CHECK(corpus.doc_ids() == std::vector<std::string>{"PMC_A", "PMC_B"});
    CHECK(corpus.dev_doc_ids == std::vector<std::string>{"PMC_B"});
    const auto totals = corpus_totals(corpus);
    CHECK(totals.event_mentions == 3);
    CHECK(totals.context_mentions == 6);
    CHECK(totals.annotations == 4);
    const auto pairs = generate_candidates(corpus);
    CHECK(pairs.size() == 5);
    CHECK(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.label; }) == 4);
    CHECK(corpus.at("PMC_A").context_mentions[2].context_type.category == ContextCategory::cell_type);
  }

  TEST_CASE("corpus round-trips through the directory format") {
    TempDir dir("roundtrip");
    auto doc = two_by_three();
    Corpus c;
    c.documents = {doc};
    c.dev_doc_ids = {};
    c.cv_doc_ids = {"D1"};
    finalize_corpus(c);
    write_corpus(c, dir.path());
    const auto back = load_corpus(dir.path());
    REQUIRE(back.documents.size() == 1);
    const auto& d = back.documents[0];
    CHECK(d.sentences.size() == doc.sentences.size());
    CHECK(d.sentences[2].tokens == doc.sentences[2].tokens);
    CHECK(d.event_mentions.size() == 2);
    CHECK(d.context_mentions[1].span == doc.context_mentions[1].span);
    CHECK(d.context_mentions[1].context_type.category == ContextCategory::organ);
    CHECK(d.annotations.size() == 2);
    CHECK(back.cv_doc_ids == std::vector<std::string>{"D1"});
  }

  TEST_CASE("malformed files report file and record") {
    TempDir dir("malformed");
    {
      std::ofstream out(dir.path() / "BAD.json");
      out << R"({"doc_id": "BAD", "sentences": [["a", "b"]],
                 "event_mentions": [{"id": "E1", "sentence_index": 0, "start_token": "x", "end_token": 1}]})";
    }
    try {
      load_corpus(dir.path());
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      const std::string what = e.what();
      CHECK(what.find("BAD.json") != std::string::npos);
      CHECK(what.find("event_mentions[0]") != std::string::npos);
    }
  }

  TEST_CASE("empty corpus directory is an error") {
    TempDir dir("empty");
    CHECK_THROWS_AS(load_corpus(dir.path()), ParseError);
    CHECK_THROWS_AS(load_corpus(dir.path() / "missing"), ParseError);
  }

  TEST_CASE("TSV release converter") {
    TempDir dir("tsv");
    const auto art = dir.path() / "PMC1";
    std::filesystem::create_directories(art);
    std::ofstream(art / "sentences.txt") << "MEK binds ERK in mice .\nLiver cells were used .\n";
    std::ofstream(art / "events.tsv") << "# id\tsentence\tstart\tend\tlabel\nE1\t0\t0\t3\tbinding\n";
    std::ofstream(art / "context_mentions.tsv") << "C1\t0\t4\t5\ttaxonomy:10090\nC2\t1\t0\t2\tuberon:0002107\torgan\n";
    std::ofstream(art / "annotations.tsv") << "E1\ttaxonomy:10090\n";
    std::ofstream(dir.path() / "split.tsv") << "PMC1\tcv\n";
    const auto corpus = convert_tsv_release(dir.path());
    REQUIRE(corpus.documents.size() == 1);
    const auto& d = corpus.documents[0];
    CHECK(d.doc_id == "PMC1");
    CHECK(d.sentences[1].tokens == std::vector<std::string>{"Liver", "cells", "were", "used", "."});
    CHECK(d.event_mentions[0].event_label == "binding");
    CHECK(d.context_mentions[1].context_type.category == ContextCategory::organ);
    CHECK(corpus.cv_doc_ids == std::vector<std::string>{"PMC1"});
    CHECK(generate_candidates(corpus).size() == 2);
  }

  TEST_CASE("pair counts invariant under mention order") {
    auto doc = two_by_three();
    auto shuffled = doc;
    std::reverse(shuffled.context_mentions.begin(), shuffled.context_mentions.end());
    const auto a = generate_candidates(doc);
    const auto b = generate_candidates(shuffled);
    CHECK(a.size() == b.size());
    auto positives = [](const auto& v) { return std::count_if(v.begin(), v.end(), [](const auto& p) { return p.label; }); };
    CHECK(positives(a) == positives(b));
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i].evidence.front().mention.mention_id == b[i].evidence.front().mention.mention_id);
  }
}
