#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/corpus.hpp"
#include "ctxassoc/errors.hpp"

namespace ctxassoc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr int kFormatVersion = 1;

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(fmt::format("{}: cannot open file", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& file) {
  try {
    return json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }
}

template <class Fn>
auto field(const fs::path& file, std::string_view record, const Fn& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: record {}: {}", file.string(), record, e.what()));
  }
}

ContextTypeId context_type_from(const std::string& grounding, const json* category_field, const fs::path& file,
                                std::string_view record) {
  ContextTypeId type;
  type.grounding_id = grounding;
  if (category_field && !category_field->is_null()) {
    try {
      type.category = parse_context_category(category_field->get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}: record {}: {}", file.string(), record, e.what()));
    }
    return type;
  }
  auto inferred = infer_context_category(grounding);
  if (!inferred)
    throw ParseError(fmt::format("{}: record {}: cannot infer a context category from grounding '{}'; add a "
                                 "'category' field",
                                 file.string(), record, grounding));
  type.category = *inferred;
  return type;
}

}  // namespace

Document parse_document_file(const fs::path& file) {
  const json root = parse_json_file(file);
  Document doc;
  doc.doc_id = field(file, "doc_id", [&] {
    if (root.contains("doc_id")) return root.at("doc_id").get<std::string>();
    return file.stem().string();
  });

  const auto& sentences = field(file, "sentences", [&]() -> const json& { return root.at("sentences"); });
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto rec = fmt::format("sentences[{}]", i);
    doc.sentences.push_back({i, field(file, rec, [&] { return sentences[i].get<std::vector<std::string>>(); })});
  }

  auto read_span = [&](const json& r, const std::string& rec, std::size_t& sentence, TokenSpan& span) {
    field(file, rec, [&] {
      sentence = r.at("sentence_index").get<std::size_t>();
      span.start = r.at("start_token").get<std::size_t>();
      span.end = r.at("end_token").get<std::size_t>();
      return 0;
    });
  };

  if (root.contains("event_mentions")) {
    const auto& events = root.at("event_mentions");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto rec = fmt::format("event_mentions[{}]", i);
      const auto& r = events[i];
      EventMention e;
      field(file, rec, [&] {
        e.event_id = r.at("id").get<std::string>();
        e.event_label = r.value("label_or_grounding", std::string{});
        return 0;
      });
      read_span(r, rec, e.sentence_index, e.span);
      doc.event_mentions.push_back(std::move(e));
    }
  }

  if (root.contains("context_mentions")) {
    const auto& mentions = root.at("context_mentions");
    for (std::size_t i = 0; i < mentions.size(); ++i) {
      const auto rec = fmt::format("context_mentions[{}]", i);
      const auto& r = mentions[i];
      ContextMention m;
      std::string grounding;
      field(file, rec, [&] {
        m.mention_id = r.at("id").get<std::string>();
        grounding = r.at("label_or_grounding").get<std::string>();
        return 0;
      });
      m.context_type = context_type_from(grounding, r.contains("category") ? &r.at("category") : nullptr, file, rec);
      read_span(r, rec, m.sentence_index, m.span);
      doc.context_mentions.push_back(std::move(m));
    }
  }

  // Annotation categories follow the mention that carries the same grounding.
  if (root.contains("annotations")) {
    const auto& annotations = root.at("annotations");
    for (std::size_t i = 0; i < annotations.size(); ++i) {
      const auto rec = fmt::format("annotations[{}]", i);
      ContextAnnotation a;
      field(file, rec, [&] {
        a.event_id = annotations[i].at("event_id").get<std::string>();
        a.context_type.grounding_id = annotations[i].at("grounding_id").get<std::string>();
        return 0;
      });
      for (const auto& m : doc.context_mentions)
        if (m.context_type == a.context_type) a.context_type.category = m.context_type.category;
      doc.annotations.push_back(std::move(a));
    }
  }
  return doc;
}

void write_document_file(const Document& doc, const fs::path& file) {
  json root;
  root["doc_id"] = doc.doc_id;
  root["sentences"] = json::array();
  for (const auto& s : doc.sentences) root["sentences"].push_back(s.tokens);
  root["event_mentions"] = json::array();
  for (const auto& e : doc.event_mentions)
    root["event_mentions"].push_back({{"id", e.event_id},
                                      {"sentence_index", e.sentence_index},
                                      {"start_token", e.span.start},
                                      {"end_token", e.span.end},
                                      {"label_or_grounding", e.event_label}});
  root["context_mentions"] = json::array();
  for (const auto& m : doc.context_mentions)
    root["context_mentions"].push_back({{"id", m.mention_id},
                                        {"sentence_index", m.sentence_index},
                                        {"start_token", m.span.start},
                                        {"end_token", m.span.end},
                                        {"label_or_grounding", m.context_type.grounding_id},
                                        {"category", std::string(to_string(m.context_type.category))}});
  root["annotations"] = json::array();
  for (const auto& a : doc.annotations)
    root["annotations"].push_back({{"event_id", a.event_id}, {"grounding_id", a.context_type.grounding_id}});

  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("{}: cannot write file", file.string()));
  out << root.dump(1) << '\n';
}

Corpus load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError(fmt::format("{}: not a corpus directory", dir.string()));

  Corpus corpus;
  const auto manifest_path = dir / kManifestName;
  std::vector<fs::path> files;
  if (fs::exists(manifest_path)) {
    const json manifest = parse_json_file(manifest_path);
    field(manifest_path, "manifest", [&] {
      if (manifest.contains("format_version") && manifest.at("format_version").get<int>() != kFormatVersion)
        throw ParseError(fmt::format("{}: unsupported format_version {}", manifest_path.string(),
                                     manifest.at("format_version").dump()));
      for (const auto& id : manifest.at("documents")) files.push_back(dir / (id.get<std::string>() + ".json"));
      if (manifest.contains("dev")) corpus.dev_doc_ids = manifest.at("dev").get<std::vector<std::string>>();
      if (manifest.contains("cv")) corpus.cv_doc_ids = manifest.at("cv").get<std::vector<std::string>>();
      return 0;
    });
  } else {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ParseError(fmt::format("{}: corpus directory contains no documents", dir.string()));

  for (const auto& file : files) corpus.documents.push_back(parse_document_file(file));
  finalize_corpus(corpus);
  return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["documents"] = corpus.doc_ids();
  manifest["dev"] = corpus.dev_doc_ids;
  manifest["cv"] = corpus.cv_doc_ids;
  for (const auto& doc : corpus.documents) write_document_file(doc, dir / (doc.doc_id + ".json"));
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("{}: cannot write manifest", dir.string()));
  out << manifest.dump(1) << '\n';
}

namespace {

std::vector<std::vector<std::string>> read_tsv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError(fmt::format("{}: cannot open file", file.string()));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

std::size_t to_index(const std::string& text, const fs::path& file, std::size_t row) {
  try {
    std::size_t used = 0;
    const auto value = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(value);
  } catch (const std::exception&) {
    throw ParseError(fmt::format("{}: record {}: '{}' is not a nonnegative integer", file.string(), row, text));
  }
}

}  // namespace

Corpus convert_tsv_release(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError(fmt::format("{}: not a directory", dir.string()));
  Corpus corpus;
  std::vector<fs::path> article_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) article_dirs.push_back(entry.path());
  std::sort(article_dirs.begin(), article_dirs.end());
  if (article_dirs.empty()) throw ParseError(fmt::format("{}: no article directories", dir.string()));

  for (const auto& article : article_dirs) {
    Document doc;
    doc.doc_id = article.filename().string();
    {
      std::ifstream in(article / "sentences.txt");
      if (!in) throw ParseError(fmt::format("{}: missing sentences.txt", article.string()));
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Sentence s;
        s.index = doc.sentences.size();
        std::istringstream words(line);
        for (std::string w; words >> w;) s.tokens.push_back(w);
        doc.sentences.push_back(std::move(s));
      }
    }
    const auto events_file = article / "events.tsv";
    const auto rows = read_tsv(events_file);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& c = rows[r];
      if (c.size() < 4) throw ParseError(fmt::format("{}: record {}: expected at least 4 columns", events_file.string(), r));
      doc.event_mentions.push_back({c[0], to_index(c[1], events_file, r),
                                    {to_index(c[2], events_file, r), to_index(c[3], events_file, r)},
                                    c.size() > 4 ? c[4] : std::string{}});
    }
    const auto mentions_file = article / "context_mentions.tsv";
    const auto mrows = read_tsv(mentions_file);
    for (std::size_t r = 0; r < mrows.size(); ++r) {
      const auto& c = mrows[r];
      if (c.size() < 5)
        throw ParseError(fmt::format("{}: record {}: expected at least 5 columns", mentions_file.string(), r));
      ContextMention m;
      m.mention_id = c[0];
      m.sentence_index = to_index(c[1], mentions_file, r);
      m.span = {to_index(c[2], mentions_file, r), to_index(c[3], mentions_file, r)};
      json category = c.size() > 5 ? json(c[5]) : json(nullptr);
      m.context_type = context_type_from(c[4], &category, mentions_file, fmt::format("{}", r));
      doc.context_mentions.push_back(std::move(m));
    }
    const auto annotations_file = article / "annotations.tsv";
    const auto arows = read_tsv(annotations_file);
    for (std::size_t r = 0; r < arows.size(); ++r) {
      const auto& c = arows[r];
      if (c.size() < 2)
        throw ParseError(fmt::format("{}: record {}: expected 2 columns", annotations_file.string(), r));
      ContextAnnotation a{c[0], {c[1], ContextCategory::species}};
      for (const auto& m : doc.context_mentions)
        if (m.context_type == a.context_type) a.context_type.category = m.context_type.category;
      doc.annotations.push_back(std::move(a));
    }
    corpus.documents.push_back(std::move(doc));
  }

  const auto split_file = dir / "split.tsv";
  if (fs::exists(split_file)) {
    const auto rows = read_tsv(split_file);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& c = rows[r];
      if (c.size() < 2 || (c[1] != "dev" && c[1] != "cv"))
        throw ParseError(fmt::format("{}: record {}: expected '<doc_id>\\t(dev|cv)'", split_file.string(), r));
      (c[1] == "dev" ? corpus.dev_doc_ids : corpus.cv_doc_ids).push_back(c[0]);
    }
  }
  finalize_corpus(corpus);
  return corpus;
}

}  // namespace ctxassoc
