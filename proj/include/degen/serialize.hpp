#pragma once

#include <optional>
#include <string>
#include <vector>

#include "degen/baselines.hpp"
#include "degen/clustering.hpp"
#include "degen/dataset.hpp"
#include "degen/lstm.hpp"
#include "degen/profiling.hpp"

namespace degen {

/// Shortest round-trip decimal form of a double; the one formatter used by
/// every text artifact so reruns are byte-identical.
std::string format_double(double x);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// --- normalization stats: {"feature": {"mean": m, "sd": s}} -----------------

std::string stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const std::string& json_text);

// --- versioned model envelopes ----------------------------------------------

struct LstmModelFile {
  LstmParams params;
  bool multi = true;
  bool use_features = true;
  std::vector<std::string> target_names;
  NormalizationStats stats;
};

void save_lstm_model(const LstmModelFile& model, const std::string& path);
LstmModelFile load_lstm_model(const std::string& path);

struct RidgeModelFile {
  RegressionModel model;
  std::vector<std::string> target_names;
  NormalizationStats stats;
};

void save_ridge_model(const RidgeModelFile& model, const std::string& path);
RidgeModelFile load_ridge_model(const std::string& path);

// --- CSV artifacts -----------------------------------------------------------

void write_embeddings_csv(const EmbeddingMatrix& embeddings,
                          const std::string& path);
EmbeddingMatrix read_embeddings_csv(const std::string& path);

void write_assignments_csv(const std::vector<std::string>& participant_ids,
                           const std::vector<std::size_t>& assignments,
                           const std::string& path);
std::pair<std::vector<std::string>, std::vector<std::size_t>>
read_assignments_csv(const std::string& path);

/// participant_id, x, y, cluster, planted_cluster; the last two columns may
/// be empty when unknown.
void write_coords_csv(
    const std::vector<std::string>& participant_ids, const Matrix& coords,
    const std::vector<std::optional<std::size_t>>& clusters,
    const std::vector<std::optional<int>>& planted, const std::string& path);

std::string kselection_to_json(const KSelectionReport& report);

std::string descriptive_to_json(const DescriptiveReport& report);

}  // namespace degen
