#include "degen/serialize.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "degen/errors.hpp"
#include "json.hpp"

namespace degen {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                  nullptr)) {
    throw Error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

std::string sha256_file(const std::string& path) {
  return sha256_hex(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Normalization stats
// ---------------------------------------------------------------------------

namespace {

json stats_to_json_obj(const NormalizationStats& stats) {
  json obj = json::object();
  for (const auto& f : stats.features) {
    json entry = {{"mean", f.mean}, {"sd", f.sd}};
    if (f.constant) entry["constant"] = true;
    obj[f.name] = entry;
  }
  return obj;
}

NormalizationStats stats_from_json_obj(const json& obj) {
  NormalizationStats stats;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    FeatureStat f;
    f.name = it.key();
    f.mean = it.value().at("mean").get<double>();
    f.sd = it.value().at("sd").get<double>();
    f.constant = it.value().value("constant", false);
    stats.features.push_back(std::move(f));
  }
  return stats;
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

Matrix matrix_from_json(const json& obj) {
  Matrix m;
  m.rows = obj.at("rows").get<std::size_t>();
  m.cols = obj.at("cols").get<std::size_t>();
  m.values = obj.at("values").get<std::vector<double>>();
  if (m.values.size() != m.rows * m.cols) {
    throw SchemaError("matrix values do not match rows*cols");
  }
  return m;
}

json parse(const std::string& text, const std::string& what) {
  json obj = json::parse(text, nullptr, false);
  if (obj.is_discarded()) throw SchemaError(what + ": malformed JSON");
  return obj;
}

}  // namespace

std::string stats_to_json(const NormalizationStats& stats) {
  return stats_to_json_obj(stats).dump(2) + "\n";
}

NormalizationStats stats_from_json(const std::string& json_text) {
  return stats_from_json_obj(parse(json_text, "normalization stats"));
}

// ---------------------------------------------------------------------------
// Model envelopes
// ---------------------------------------------------------------------------

void save_lstm_model(const LstmModelFile& model, const std::string& path) {
  model.params.validate();
  json doc;
  doc["format"] = "degen-model-v1";
  doc["kind"] = "lstm";
  doc["multi"] = model.multi;
  doc["use_features"] = model.use_features;
  doc["targets"] = model.target_names;
  doc["dims"] = {{"hidden", model.params.hidden_dim},
                 {"dyn", model.params.dyn_dim},
                 {"static", model.params.static_dim},
                 {"out", model.params.out_dim}};
  doc["weights"] = {
      {"w_f", model.params.w_f.values}, {"w_i", model.params.w_i.values},
      {"w_c", model.params.w_c.values}, {"w_o", model.params.w_o.values},
      {"w_y", model.params.w_y.values}, {"b_f", model.params.b_f},
      {"b_i", model.params.b_i},        {"b_c", model.params.b_c},
      {"b_o", model.params.b_o},        {"b_y", model.params.b_y}};
  doc["normalization"] = stats_to_json_obj(model.stats);
  write_text_file(path, doc.dump(2) + "\n");
}

LstmModelFile load_lstm_model(const std::string& path) {
  json doc = parse(read_text_file(path), path);
  if (doc.value("format", "") != "degen-model-v1") {
    throw SchemaError(path + ": unknown model format");
  }
  if (doc.value("kind", "") != "lstm") {
    throw SchemaError(path + ": expected an lstm model");
  }
  LstmModelFile out;
  out.multi = doc.at("multi").get<bool>();
  out.use_features = doc.at("use_features").get<bool>();
  out.target_names = doc.at("targets").get<std::vector<std::string>>();
  out.stats = stats_from_json_obj(doc.at("normalization"));

  const auto& dims = doc.at("dims");
  out.params = LstmParams::zeros(
      dims.at("hidden").get<std::size_t>(), dims.at("dyn").get<std::size_t>(),
      dims.at("static").get<std::size_t>(), dims.at("out").get<std::size_t>());
  const auto& w = doc.at("weights");
  out.params.w_f.values = w.at("w_f").get<std::vector<double>>();
  out.params.w_i.values = w.at("w_i").get<std::vector<double>>();
  out.params.w_c.values = w.at("w_c").get<std::vector<double>>();
  out.params.w_o.values = w.at("w_o").get<std::vector<double>>();
  out.params.w_y.values = w.at("w_y").get<std::vector<double>>();
  out.params.b_f = w.at("b_f").get<Vector>();
  out.params.b_i = w.at("b_i").get<Vector>();
  out.params.b_c = w.at("b_c").get<Vector>();
  out.params.b_o = w.at("b_o").get<Vector>();
  out.params.b_y = w.at("b_y").get<Vector>();
  out.params.validate();
  return out;
}

void save_ridge_model(const RidgeModelFile& model, const std::string& path) {
  json doc;
  doc["format"] = "degen-model-v1";
  doc["kind"] = "ridge";
  doc["multi"] = model.model.design_spec.multi;
  doc["use_features"] = model.model.design_spec.use_features;
  doc["targets"] = model.target_names;
  doc["ridge_lambda"] = model.model.ridge_lambda;
  doc["coefficients"] = matrix_to_json(model.model.coefficients);
  doc["intercept"] = model.model.intercept;
  doc["normalization"] = stats_to_json_obj(model.stats);
  write_text_file(path, doc.dump(2) + "\n");
}

RidgeModelFile load_ridge_model(const std::string& path) {
  json doc = parse(read_text_file(path), path);
  if (doc.value("format", "") != "degen-model-v1") {
    throw SchemaError(path + ": unknown model format");
  }
  if (doc.value("kind", "") != "ridge") {
    throw SchemaError(path + ": expected a ridge model");
  }
  RidgeModelFile out;
  out.model.design_spec.multi = doc.at("multi").get<bool>();
  out.model.design_spec.use_features = doc.at("use_features").get<bool>();
  out.target_names = doc.at("targets").get<std::vector<std::string>>();
  out.model.ridge_lambda = doc.at("ridge_lambda").get<double>();
  out.model.coefficients = matrix_from_json(doc.at("coefficients"));
  out.model.intercept = doc.at("intercept").get<Vector>();
  out.stats = stats_from_json_obj(doc.at("normalization"));
  return out;
}

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

void write_embeddings_csv(const EmbeddingMatrix& embeddings,
                          const std::string& path) {
  std::ostringstream out;
  out << "participant_id";
  for (std::size_t c = 0; c < embeddings.values.cols; ++c) out << ",e" << c;
  out << '\n';
  for (std::size_t r = 0; r < embeddings.values.rows; ++r) {
    out << embeddings.participant_ids[r];
    for (std::size_t c = 0; c < embeddings.values.cols; ++c) {
      out << ',' << format_double(embeddings.values(r, c));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

EmbeddingMatrix read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::string cell;
    std::stringstream ss(line);
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        ids.push_back(cell);
        first = false;
      } else {
        row.push_back(std::stod(cell));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(path + ": no embedding rows");

  EmbeddingMatrix em;
  em.values = Matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != em.values.cols) {
      throw SchemaError(path + ": ragged embedding rows");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      em.values(r, c) = rows[r][c];
    }
  }
  em.participant_ids = std::move(ids);
  return em;
}

void write_assignments_csv(const std::vector<std::string>& participant_ids,
                           const std::vector<std::size_t>& assignments,
                           const std::string& path) {
  if (participant_ids.size() != assignments.size()) {
    throw ShapeError("write_assignments_csv: id/assignment count mismatch");
  }
  std::ostringstream out;
  out << "participant_id,cluster\n";
  for (std::size_t i = 0; i < participant_ids.size(); ++i) {
    out << participant_ids[i] << ',' << assignments[i] << '\n';
  }
  write_text_file(path, out.str());
}

std::pair<std::vector<std::string>, std::vector<std::size_t>>
read_assignments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  std::vector<std::string> ids;
  std::vector<std::size_t> assignments;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw SchemaError(path + ": malformed assignment row");
    }
    ids.push_back(line.substr(0, comma));
    assignments.push_back(std::stoul(line.substr(comma + 1)));
  }
  return {std::move(ids), std::move(assignments)};
}

void write_coords_csv(
    const std::vector<std::string>& participant_ids, const Matrix& coords,
    const std::vector<std::optional<std::size_t>>& clusters,
    const std::vector<std::optional<int>>& planted, const std::string& path) {
  if (coords.rows != participant_ids.size() || coords.cols != 2) {
    throw ShapeError("write_coords_csv: bad coordinate shape");
  }
  std::ostringstream out;
  out << "participant_id,x,y,cluster,planted_cluster\n";
  for (std::size_t r = 0; r < coords.rows; ++r) {
    out << participant_ids[r] << ',' << format_double(coords(r, 0)) << ','
        << format_double(coords(r, 1)) << ',';
    if (r < clusters.size() && clusters[r]) out << *clusters[r];
    out << ',';
    if (r < planted.size() && planted[r]) out << *planted[r];
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::string kselection_to_json(const KSelectionReport& report) {
  json doc;
  doc["candidates"] = report.candidates;
  doc["silhouette"] = report.scores;
  doc["chosen_k"] = report.chosen_k;
  return doc.dump(2) + "\n";
}

std::string descriptive_to_json(const DescriptiveReport& report) {
  json numerics = json::array();
  for (const auto& n : report.numerics) {
    numerics.push_back({{"name", n.name},
                        {"mean", n.mean},
                        {"sd", n.sd},
                        {"level", n.level}});
  }
  json categoricals = json::array();
  for (const auto& c : report.categoricals) {
    json levels = json::array();
    for (const auto& l : c.levels) {
      levels.push_back(
          {{"level", l.level}, {"count", l.count}, {"pct", l.pct}});
    }
    categoricals.push_back({{"name", c.name}, {"levels", levels}});
  }
  json doc = {{"n_participants", report.n_participants},
              {"n_waves", report.n_waves},
              {"numerics", numerics},
              {"categoricals", categoricals}};
  return doc.dump(2) + "\n";
}

}  // namespace degen
