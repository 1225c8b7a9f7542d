#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "degen/dataset.hpp"
#include "degen/lstm.hpp"
#include "degen/projection.hpp"

namespace degen {

/// One cell of the method x multi x features experiment grid.
struct GridCell {
  std::string method;  // "regression" or "lstm"
  bool multi = false;
  bool features = false;

  std::string name() const;
};

/// All 8 cells in report order.
std::vector<GridCell> all_grid_cells();

/// Parses "lstm+multi+features,regression,..." into cells.
std::vector<GridCell> parse_grid_cells(const std::string& list);

struct ExperimentConfig {
  std::uint64_t master_seed = 20240101;
  std::string output_dir = "out";

  std::optional<std::string> csv_path;  // load this cohort instead of generating
  SyntheticSpec synthetic = SyntheticSpec::defaults();

  double test_fraction = 0.2;

  TrainConfig train;  // pipeline trains this cell; grid reuses the knobs
  PredictionTarget train_target = PredictionTarget::both;

  std::vector<GridCell> cells = all_grid_cells();
  double ridge_lambda = 1e-6;

  std::size_t k_min = 2;
  std::size_t k_max = 8;
  std::size_t kmeans_restarts = 10;
  std::size_t kmeans_max_iter = 100;

  ProjectionMethod projection = ProjectionMethod::tsne;
  TsneConfig tsne;

  int bin_width = 5;

  void validate() const;
};

/// Defaults merged with the overrides present in the JSON document.
ExperimentConfig config_from_json(const std::string& json_text);

/// Canonical full dump of the effective configuration.
std::string config_to_json(const ExperimentConfig& config);

struct GridCellResult {
  GridCell cell;
  double mse_adl = 0.0;
  double mse_cog = 0.0;
  double train_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct MetricsReport {
  std::vector<GridCellResult> rows;
  std::vector<std::uint64_t> seeds;
  std::string config_digest;
  std::string split_digest;
};

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_csv(const MetricsReport& report);

/// Loads or generates the configured cohort. Synthetic generation reseeds
/// from the master seed so every downstream stage derives from one number.
Cohort acquire_cohort(const ExperimentConfig& config);

/// Trains and evaluates every requested grid cell on one shared split.
/// Held-out MSE is reported per target in raw score units. A failing cell
/// is marked failed and the run continues.
MetricsReport run_grid(const ExperimentConfig& config);

struct StageArtifact {
  std::string stage;
  std::string file;
  std::string sha256;
};

struct PipelineManifest {
  std::vector<StageArtifact> artifacts;
  std::optional<std::string> failed_stage;
};

std::string manifest_to_json(const PipelineManifest& manifest);

/// Full pipeline: cohort -> split/normalize -> train -> embed -> select_k ->
/// kmeans -> project -> profile. Writes every artifact plus manifest.json
/// under output_dir. On a stage failure the manifest records the completed
/// stages and the failing stage, then the error propagates.
PipelineManifest run_pipeline(const ExperimentConfig& config);

}  // namespace degen
