#include "ctxassoc/model_io.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ctxassoc/errors.hpp"

namespace ctxassoc {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ParseError(fmt::format("head parameter '{}' should have {} rows", name, rows));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(fmt::format("head parameter '{}' row {} should have {} columns", name, r, cols));
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index size, const char* name) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != size)
    throw ParseError(fmt::format("head parameter '{}' should have {} entries, found {}", name, size, v.size()));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError(fmt::format("{}: cannot open", file.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", file.string(), e.what()));
  }
}

void write_json(const json& j, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(fmt::format("{}: cannot write", file.string()));
  out << j.dump(1) << '\n';
}

}  // namespace

void save_model(const ModelArtifact& artifact, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& m = artifact.model;
  json manifest;
  manifest["format_version"] = kModelFormatVersion;
  manifest["head"] = {{"mode", std::string(to_string(m.config.mode))},
                      {"function", std::string(to_string(m.config.function))},
                      {"k", m.config.k}};
  manifest["input_dim"] = m.mlp.input_dim();
  manifest["hidden_dim"] = m.mlp.hidden_dim();
  manifest["dropout"] = m.mlp.dropout;
  manifest["has_aggregator"] = m.aggregator.has_value();
  manifest["encoder"] = {{"encoder", artifact.encoder.encoder},
                         {"embedding_dim", artifact.encoder.embedding_dim},
                         {"max_len", artifact.encoder.max_len},
                         {"pooling", artifact.encoder.pooling},
                         {"separator", artifact.encoder.separator}};
  write_json(manifest, dir / "manifest.json");

  json head;
  head["w1"] = matrix_json(m.mlp.w1);
  head["b1"] = vector_json(m.mlp.b1);
  head["w2"] = vector_json(m.mlp.w2);
  head["b2"] = vector_json(m.mlp.b2);
  if (m.aggregator) {
    head["aggregator_w"] = matrix_json(m.aggregator->w);
    head["aggregator_b"] = vector_json(m.aggregator->b);
  }
  write_json(head, dir / "head.json");
}

ModelArtifact load_model(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  const auto head = read_json(dir / "head.json");
  ModelArtifact a;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ParseError(fmt::format("{}: unsupported model format version {}", dir.string(), version));
    const auto& h = manifest.at("head");
    a.model.config.function = parse_head_function(h.at("function").get<std::string>());
    a.model.config.mode = parse_head_mode(h.at("mode").get<std::string>());
    a.model.config.k = h.at("k").get<std::size_t>();
    a.model.config.validate();
    const auto in = static_cast<Eigen::Index>(manifest.at("input_dim").get<std::size_t>());
    const auto hidden = static_cast<Eigen::Index>(manifest.at("hidden_dim").get<std::size_t>());
    a.model.mlp.dropout = manifest.at("dropout").get<double>();
    a.model.mlp.w1 = matrix_from(head.at("w1"), hidden, in, "w1");
    a.model.mlp.b1 = vector_from(head.at("b1"), hidden, "b1");
    a.model.mlp.w2 = vector_from(head.at("w2"), hidden, "w2");
    a.model.mlp.b2 = vector_from(head.at("b2"), 1, "b2");
    if (manifest.at("has_aggregator").get<bool>()) {
      ParameterizedAggregator agg;
      agg.k = a.model.config.k;
      agg.w = matrix_from(head.at("aggregator_w"), in, in * static_cast<Eigen::Index>(agg.k), "aggregator_w");
      agg.b = vector_from(head.at("aggregator_b"), in, "aggregator_b");
      a.model.aggregator = std::move(agg);
    }
    if (a.model.config.function == HeadFunction::parameterized && !a.model.aggregator)
      throw ParseError(fmt::format("{}: parameterized head without aggregator parameters", dir.string()));
    const auto& e = manifest.at("encoder");
    a.encoder.encoder = e.at("encoder").get<std::string>();
    a.encoder.embedding_dim = e.at("embedding_dim").get<std::size_t>();
    a.encoder.max_len = e.at("max_len").get<std::size_t>();
    a.encoder.pooling = e.at("pooling").get<std::string>();
    a.encoder.separator = e.at("separator").get<std::string>();
  } catch (const json::exception& ex) {
    throw ParseError(fmt::format("{}: malformed model artifact: {}", dir.string(), ex.what()));
  } catch (const ConfigError& ex) {
    throw ParseError(fmt::format("{}: {}", dir.string(), ex.what()));
  }
  return a;
}

}  // namespace ctxassoc
