#include "degen/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "degen/baselines.hpp"
#include "degen/clustering.hpp"
#include "degen/errors.hpp"
#include "degen/profiling.hpp"
#include "degen/serialize.hpp"
#include "json.hpp"

namespace degen {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Grid cells
// ---------------------------------------------------------------------------

std::string GridCell::name() const {
  std::string n = method;
  if (multi) n += "+multi";
  if (features) n += "+features";
  return n;
}

std::vector<GridCell> all_grid_cells() {
  std::vector<GridCell> cells;
  for (const char* method : {"regression", "lstm"}) {
    for (bool multi : {false, true}) {
      for (bool features : {false, true}) {
        cells.push_back({method, multi, features});
      }
    }
  }
  return cells;
}

std::vector<GridCell> parse_grid_cells(const std::string& list) {
  std::vector<GridCell> cells;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    GridCell cell;
    std::stringstream parts(item);
    std::string token;
    bool first = true;
    while (std::getline(parts, token, '+')) {
      if (first) {
        if (token != "regression" && token != "lstm") {
          throw ConfigError("unknown grid method '" + token + "'");
        }
        cell.method = token;
        first = false;
      } else if (token == "multi") {
        cell.multi = true;
      } else if (token == "features") {
        cell.features = true;
      } else {
        throw ConfigError("unknown grid toggle '" + token + "'");
      }
    }
    if (first) throw ConfigError("empty grid cell name");
    cells.push_back(cell);
  }
  if (cells.empty()) throw ConfigError("no grid cells requested");
  return cells;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("split.test_fraction must lie in (0,1)");
  }
  try {
    train.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  if (train.multi != (train_target == PredictionTarget::both)) {
    throw ConfigError("train.multi must agree with train.target");
  }
  if (cells.empty()) throw ConfigError("grid.cells must not be empty");
  if (ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");
  if (k_min < 2 || k_min > k_max) {
    throw ConfigError("clustering range needs 2 <= k_min <= k_max");
  }
  if (kmeans_restarts == 0) throw ConfigError("clustering.restarts must be >= 1");
  if (bin_width <= 0) throw ConfigError("profiling.bin_width must be positive");
  if (!csv_path) {
    try {
      validate_spec(synthetic);
    } catch (const SpecError& e) {
      throw ConfigError(std::string("data.synthetic: ") + e.what());
    }
  }
}

namespace {

json synthetic_to_json(const SyntheticSpec& spec) {
  json subpops = json::array();
  for (const auto& s : spec.subpops) {
    subpops.push_back({{"adl_start_mean", s.adl_start_mean},
                       {"adl_drift", s.adl_drift},
                       {"cog_start_mean", s.cog_start_mean},
                       {"cog_drift", s.cog_drift},
                       {"noise_sd", s.noise_sd},
                       {"util_shift", s.util_shift}});
  }
  return {{"n_participants", spec.n_participants},
          {"n_waves", spec.n_waves},
          {"subpops", subpops},
          {"mixing_weights", spec.mixing_weights},
          {"util",
           {{"ohs_intercept", spec.util.ohs_intercept},
            {"onhs_intercept", spec.util.onhs_intercept},
            {"adl_coef", spec.util.adl_coef},
            {"cog_coef", spec.util.cog_coef},
            {"cog_ref", spec.util.cog_ref}}},
          {"accel_threshold", spec.accel_threshold},
          {"accel_scale", spec.accel_scale},
          {"accel_gain", spec.accel_gain},
          {"couple_threshold", spec.couple_threshold},
          {"couple_gain", spec.couple_gain},
          {"age_interaction", spec.age_interaction},
          {"frailty_gain", spec.frailty_gain},
          {"frailty_ramp_scale", spec.frailty_ramp_scale},
          {"seed", spec.seed}};
}

void synthetic_from_json(const json& obj, SyntheticSpec& spec) {
  spec.n_participants = obj.value("n_participants", spec.n_participants);
  spec.n_waves = obj.value("n_waves", spec.n_waves);
  if (obj.contains("subpops")) {
    spec.subpops.clear();
    for (const auto& s : obj.at("subpops")) {
      SubpopDynamics d;
      d.adl_start_mean = s.value("adl_start_mean", d.adl_start_mean);
      d.adl_drift = s.value("adl_drift", d.adl_drift);
      d.cog_start_mean = s.value("cog_start_mean", d.cog_start_mean);
      d.cog_drift = s.value("cog_drift", d.cog_drift);
      d.noise_sd = s.value("noise_sd", d.noise_sd);
      d.util_shift = s.value("util_shift", d.util_shift);
      spec.subpops.push_back(d);
    }
  }
  if (obj.contains("mixing_weights")) {
    spec.mixing_weights = obj.at("mixing_weights").get<std::vector<double>>();
  }
  if (obj.contains("util")) {
    const auto& u = obj.at("util");
    spec.util.ohs_intercept = u.value("ohs_intercept", spec.util.ohs_intercept);
    spec.util.onhs_intercept =
        u.value("onhs_intercept", spec.util.onhs_intercept);
    spec.util.adl_coef = u.value("adl_coef", spec.util.adl_coef);
    spec.util.cog_coef = u.value("cog_coef", spec.util.cog_coef);
    spec.util.cog_ref = u.value("cog_ref", spec.util.cog_ref);
  }
  spec.accel_threshold = obj.value("accel_threshold", spec.accel_threshold);
  spec.accel_scale = obj.value("accel_scale", spec.accel_scale);
  spec.accel_gain = obj.value("accel_gain", spec.accel_gain);
  spec.couple_threshold = obj.value("couple_threshold", spec.couple_threshold);
  spec.couple_gain = obj.value("couple_gain", spec.couple_gain);
  spec.age_interaction = obj.value("age_interaction", spec.age_interaction);
  spec.frailty_gain = obj.value("frailty_gain", spec.frailty_gain);
  spec.frailty_ramp_scale =
      obj.value("frailty_ramp_scale", spec.frailty_ramp_scale);
  spec.seed = obj.value("seed", spec.seed);
}

std::string target_to_string(PredictionTarget t) {
  switch (t) {
    case PredictionTarget::adl:
      return "adl";
    case PredictionTarget::cog:
      return "cog";
    default:
      return "both";
  }
}

PredictionTarget target_from_string(const std::string& s) {
  if (s == "adl") return PredictionTarget::adl;
  if (s == "cog") return PredictionTarget::cog;
  if (s == "both") return PredictionTarget::both;
  throw ConfigError("unknown target '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("malformed config JSON");

  ExperimentConfig config;
  config.master_seed = doc.value("seed", config.master_seed);
  config.output_dir = doc.value("output_dir", config.output_dir);

  if (doc.contains("data")) {
    const auto& data = doc.at("data");
    if (data.contains("csv_path") && !data.at("csv_path").is_null()) {
      config.csv_path = data.at("csv_path").get<std::string>();
    }
    if (data.contains("synthetic")) {
      synthetic_from_json(data.at("synthetic"), config.synthetic);
    }
  }
  if (doc.contains("split")) {
    config.test_fraction =
        doc.at("split").value("test_fraction", config.test_fraction);
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    auto& tc = config.train;
    tc.hidden_dim = t.value("hidden_dim", tc.hidden_dim);
    tc.learning_rate = t.value("learning_rate", tc.learning_rate);
    tc.epochs = t.value("epochs", tc.epochs);
    tc.batch_size = t.value("batch_size", tc.batch_size);
    if (t.contains("optimizer")) {
      const std::string o = t.at("optimizer").get<std::string>();
      if (o == "adam") {
        tc.optimizer = Optimizer::adam;
      } else if (o == "sgd") {
        tc.optimizer = Optimizer::sgd;
      } else {
        throw ConfigError("unknown optimizer '" + o + "'");
      }
    }
    tc.adam_beta1 = t.value("adam_beta1", tc.adam_beta1);
    tc.adam_beta2 = t.value("adam_beta2", tc.adam_beta2);
    tc.adam_eps = t.value("adam_eps", tc.adam_eps);
    tc.gradient_clip_norm =
        t.value("gradient_clip_norm", tc.gradient_clip_norm);
    tc.multi = t.value("multi", tc.multi);
    tc.use_features = t.value("use_features", tc.use_features);
    if (t.contains("target")) {
      config.train_target = target_from_string(t.at("target").get<std::string>());
    } else if (!tc.multi && config.train_target == PredictionTarget::both) {
      config.train_target = PredictionTarget::adl;
    }
  }
  if (doc.contains("grid") && doc.at("grid").contains("cells")) {
    config.cells.clear();
    for (const auto& name : doc.at("grid").at("cells")) {
      auto parsed = parse_grid_cells(name.get<std::string>());
      config.cells.insert(config.cells.end(), parsed.begin(), parsed.end());
    }
  }
  config.ridge_lambda = doc.value("ridge_lambda", config.ridge_lambda);
  if (doc.contains("clustering")) {
    const auto& c = doc.at("clustering");
    config.k_min = c.value("k_min", config.k_min);
    config.k_max = c.value("k_max", config.k_max);
    config.kmeans_restarts = c.value("restarts", config.kmeans_restarts);
    config.kmeans_max_iter = c.value("max_iter", config.kmeans_max_iter);
  }
  if (doc.contains("projection")) {
    const auto& p = doc.at("projection");
    if (p.contains("method")) {
      const std::string m = p.at("method").get<std::string>();
      if (m == "pca") {
        config.projection = ProjectionMethod::pca;
      } else if (m == "tsne") {
        config.projection = ProjectionMethod::tsne;
      } else {
        throw ConfigError("unknown projection method '" + m + "'");
      }
    }
    auto& ts = config.tsne;
    ts.perplexity = p.value("perplexity", ts.perplexity);
    ts.iterations = p.value("iterations", ts.iterations);
    ts.learning_rate = p.value("learning_rate", ts.learning_rate);
    ts.early_exaggeration_factor =
        p.value("early_exaggeration_factor", ts.early_exaggeration_factor);
    ts.early_exaggeration_iters =
        p.value("early_exaggeration_iters", ts.early_exaggeration_iters);
    ts.momentum_initial = p.value("momentum_initial", ts.momentum_initial);
    ts.momentum_final = p.value("momentum_final", ts.momentum_final);
  }
  if (doc.contains("profiling")) {
    config.bin_width = doc.at("profiling").value("bin_width", config.bin_width);
  }
  config.validate();
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json cells = json::array();
  for (const auto& cell : config.cells) cells.push_back(cell.name());
  json doc = {
      {"seed", config.master_seed},
      {"output_dir", config.output_dir},
      {"data",
       {{"csv_path", config.csv_path ? json(*config.csv_path) : json(nullptr)},
        {"synthetic", synthetic_to_json(config.synthetic)}}},
      {"split", {{"test_fraction", config.test_fraction}}},
      {"train",
       {{"hidden_dim", config.train.hidden_dim},
        {"learning_rate", config.train.learning_rate},
        {"epochs", config.train.epochs},
        {"batch_size", config.train.batch_size},
        {"optimizer",
         config.train.optimizer == Optimizer::adam ? "adam" : "sgd"},
        {"adam_beta1", config.train.adam_beta1},
        {"adam_beta2", config.train.adam_beta2},
        {"adam_eps", config.train.adam_eps},
        {"gradient_clip_norm", config.train.gradient_clip_norm},
        {"multi", config.train.multi},
        {"use_features", config.train.use_features},
        {"target", target_to_string(config.train_target)}}},
      {"grid", {{"cells", cells}}},
      {"ridge_lambda", config.ridge_lambda},
      {"clustering",
       {{"k_min", config.k_min},
        {"k_max", config.k_max},
        {"restarts", config.kmeans_restarts},
        {"max_iter", config.kmeans_max_iter}}},
      {"projection",
       {{"method",
         config.projection == ProjectionMethod::pca ? "pca" : "tsne"},
        {"perplexity", config.tsne.perplexity},
        {"iterations", config.tsne.iterations},
        {"learning_rate", config.tsne.learning_rate},
        {"early_exaggeration_factor", config.tsne.early_exaggeration_factor},
        {"early_exaggeration_iters", config.tsne.early_exaggeration_iters},
        {"momentum_initial", config.tsne.momentum_initial},
        {"momentum_final", config.tsne.momentum_final}}},
      {"profiling", {{"bin_width", config.bin_width}}}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Cohort acquire_cohort(const ExperimentConfig& config) {
  if (config.csv_path) return load_cohort_csv(*config.csv_path);
  SyntheticSpec spec = config.synthetic;
  spec.seed = SeededRng(config.master_seed).child("generate").seed();
  return generate_synthetic_cohort(spec);
}

namespace {

struct TargetMse {
  std::vector<std::string> names;
  std::vector<double> values;  // raw score units, per target
};

TargetMse evaluate_lstm(const LstmParams& params, const TrainSet& test,
                        const NormalizationStats& stats) {
  TargetMse out;
  out.names = test.target_names;
  out.values.assign(test.target_names.size(), 0.0);
  for (const auto& sample : test.samples) {
    const Vector pred = predict_next(params, sample.inputs, sample.statics,
                                     stats, test.target_names);
    for (std::size_t d = 0; d < pred.size(); ++d) {
      const double e = pred[d] - sample.raw_target[d];
      out.values[d] += e * e;
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(test.samples.size());
  return out;
}

TargetMse evaluate_ridge(const RegressionModel& model, const TrainSet& test,
                         const NormalizationStats& stats) {
  TargetMse out;
  out.names = test.target_names;
  out.values.assign(test.target_names.size(), 0.0);
  for (const auto& sample : test.samples) {
    const Vector row = build_design(sample, model.design_spec);
    const Vector pred = predict_regression(model, row);
    for (std::size_t d = 0; d < pred.size(); ++d) {
      const double raw =
          stats.denormalize_value(test.target_names[d], pred[d]);
      const double e = raw - sample.raw_target[d];
      out.values[d] += e * e;
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(test.samples.size());
  return out;
}

RegressionModel fit_cell_ridge(const TrainSet& train_set, const GridCell& cell,
                               double lambda) {
  const DesignSpec spec{cell.multi, cell.features};
  if (train_set.samples.empty()) {
    throw InvalidInputError("ridge fit: empty train set");
  }
  const Vector first = build_design(train_set.samples.front(), spec);
  Matrix rows(train_set.samples.size(), first.size());
  Matrix targets(train_set.samples.size(), train_set.out_dim);
  for (std::size_t r = 0; r < train_set.samples.size(); ++r) {
    const Vector row = build_design(train_set.samples[r], spec);
    for (std::size_t c = 0; c < row.size(); ++c) rows(r, c) = row[c];
    for (std::size_t c = 0; c < train_set.out_dim; ++c) {
      targets(r, c) = train_set.samples[r].target[c];
    }
  }
  RegressionModel model = fit_ridge(rows, targets, lambda);
  model.design_spec = spec;
  return model;
}

/// Per-target raw MSE for one cell and one target selection.
TargetMse run_cell_target(const GridCell& cell, PredictionTarget target,
                          const NormalizedCohort& norm_train,
                          const NormalizedCohort& norm_test,
                          const ExperimentConfig& config,
                          const SeededRng& master) {
  const TrainSet train_set =
      make_train_set(norm_train, cell.multi, cell.features, target);
  const TrainSet test_set =
      make_train_set(norm_test, cell.multi, cell.features, target);
  if (test_set.samples.empty()) {
    throw InvalidInputError("grid: empty test split");
  }

  if (cell.method == "lstm") {
    TrainConfig tc = config.train;
    tc.multi = cell.multi;
    tc.use_features = cell.features;
    tc.seed = master
                  .child("train:" + cell.name() + ":" +
                         target_to_string(target))
                  .seed();
    const TrainResult result = train(train_set, tc);
    return evaluate_lstm(result.params, test_set, norm_train.stats);
  }
  const RegressionModel model =
      fit_cell_ridge(train_set, cell, config.ridge_lambda);
  return evaluate_ridge(model, test_set, norm_train.stats);
}

std::string split_digest_of(const Cohort& train_cohort,
                            const Cohort& test_cohort) {
  std::string desc = "train:";
  for (const auto& t : train_cohort.trajectories) {
    desc += t.participant_id;
    desc += ',';
  }
  desc += ";test:";
  for (const auto& t : test_cohort.trajectories) {
    desc += t.participant_id;
    desc += ',';
  }
  return sha256_hex(desc);
}

}  // namespace

MetricsReport run_grid(const ExperimentConfig& config) {
  config.validate();
  const SeededRng master(config.master_seed);

  const Cohort cohort = acquire_cohort(config);
  SeededRng split_rng = master.child("split");
  auto [train_cohort, test_cohort] =
      split(cohort, config.test_fraction, split_rng);
  auto [norm_train, stats] = normalize(train_cohort, {});
  auto [norm_test, test_stats] = normalize(test_cohort, stats);
  (void)test_stats;

  MetricsReport report;
  report.seeds = {config.master_seed};
  report.config_digest = sha256_hex(config_to_json(config));
  report.split_digest = split_digest_of(train_cohort, test_cohort);

  for (const GridCell& cell : config.cells) {
    GridCellResult row;
    row.cell = cell;
    const auto start = std::chrono::steady_clock::now();
    try {
      if (cell.multi) {
        const TargetMse mse = run_cell_target(cell, PredictionTarget::both,
                                              norm_train, norm_test, config,
                                              master);
        row.mse_adl = mse.values[0];
        row.mse_cog = mse.values[1];
      } else {
        row.mse_adl = run_cell_target(cell, PredictionTarget::adl, norm_train,
                                      norm_test, config, master)
                          .values[0];
        row.mse_cog = run_cell_target(cell, PredictionTarget::cog, norm_train,
                                      norm_test, config, master)
                          .values[0];
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    row.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json obj = {{"method", row.cell.method},
                {"multi", row.cell.multi},
                {"features", row.cell.features},
                {"train_seconds", row.train_seconds},
                {"status", row.failed ? "failed" : "ok"}};
    if (row.failed) {
      obj["error"] = row.error;
    } else {
      obj["mse_adl"] = row.mse_adl;
      obj["mse_cog"] = row.mse_cog;
    }
    rows.push_back(obj);
  }
  json doc = {{"format", "degen-metrics-v1"},
              {"seeds", report.seeds},
              {"config_digest", report.config_digest},
              {"split_digest", report.split_digest},
              {"rows", rows}};
  return doc.dump(2) + "\n";
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "method,multi,features,mse_adl,mse_cog,train_seconds,status\n";
  for (const auto& row : report.rows) {
    out << row.cell.method << ',' << (row.cell.multi ? 1 : 0) << ','
        << (row.cell.features ? 1 : 0) << ',';
    if (row.failed) {
      out << ",," << format_double(row.train_seconds) << ",failed\n";
    } else {
      out << format_double(row.mse_adl) << ',' << format_double(row.mse_cog)
          << ',' << format_double(row.train_seconds) << ",ok\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

std::string manifest_to_json(const PipelineManifest& manifest) {
  json artifacts = json::array();
  for (const auto& a : manifest.artifacts) {
    artifacts.push_back(
        {{"stage", a.stage}, {"file", a.file}, {"sha256", a.sha256}});
  }
  json doc = {{"format", "degen-manifest-v1"},
              {"artifacts", artifacts},
              {"failed_stage", manifest.failed_stage
                                   ? json(*manifest.failed_stage)
                                   : json(nullptr)}};
  return doc.dump(2) + "\n";
}

namespace {

void append_profiles(std::ostringstream& out, const std::string& kind,
                     const ProfileReport& report, const std::string& field) {
  for (const auto& row : report.rows) {
    out << kind << ',' << row.group << ',' << field << ','
        << format_double(row.ratio) << ',' << row.yes << ',' << row.no << ','
        << format_double(row.mean_count) << ','
        << format_double(row.mean_nights) << '\n';
  }
}

}  // namespace

PipelineManifest run_pipeline(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  const std::string dir = config.output_dir;
  const SeededRng master(config.master_seed);

  PipelineManifest manifest;
  auto emit = [&](const std::string& stage, const std::string& filename) {
    manifest.artifacts.push_back(
        {stage, filename, sha256_file(dir + "/" + filename)});
  };
  auto write_manifest = [&]() {
    write_text_file(dir + "/manifest.json", manifest_to_json(manifest));
  };

  std::string stage = "cohort";
  try {
    // cohort
    const Cohort cohort = acquire_cohort(config);
    write_cohort_csv(cohort, dir + "/cohort.csv");
    emit("cohort", "cohort.csv");

    // train on the train split
    stage = "train";
    SeededRng split_rng = master.child("split");
    auto [train_cohort, test_cohort] =
        split(cohort, config.test_fraction, split_rng);
    auto [norm_train, stats] = normalize(train_cohort, {});
    const TrainSet train_set =
        make_train_set(norm_train, config.train.multi,
                       config.train.use_features, config.train_target);
    TrainConfig tc = config.train;
    tc.seed = master.child("train").seed();
    const TrainResult trained = train(train_set, tc);
    LstmModelFile model_file{trained.params, tc.multi, tc.use_features,
                             trained.target_names, stats};
    save_lstm_model(model_file, dir + "/model.json");
    emit("train", "model.json");

    // embeddings for the whole cohort under training statistics
    stage = "embed";
    auto [norm_all, all_stats] = normalize(cohort, stats);
    (void)all_stats;
    const TrainSet all_set =
        make_train_set(norm_all, tc.multi, tc.use_features,
                       config.train_target);
    const EmbeddingMatrix embeddings =
        extract_embeddings(trained.params, all_set);
    write_embeddings_csv(embeddings, dir + "/embeddings.csv");
    emit("embed", "embeddings.csv");

    // K selection + final clustering
    stage = "cluster";
    SeededRng kmeans_rng = master.child("kmeans");
    const std::size_t k_cap = std::min(config.k_max, embeddings.values.rows - 1);
    const KSelectionReport kselect =
        select_k(embeddings.values, config.k_min, k_cap, kmeans_rng,
                 config.kmeans_restarts, config.kmeans_max_iter);
    SeededRng final_rng = master.child("kmeans:final");
    const ClusterModel clusters =
        kmeans_restarts(embeddings.values, kselect.chosen_k, final_rng,
                        config.kmeans_restarts, config.kmeans_max_iter);
    write_assignments_csv(embeddings.participant_ids, clusters.assignments,
                          dir + "/assignments.csv");
    emit("cluster", "assignments.csv");

    // 2-D projection
    stage = "project";
    ProjectionResult projection;
    if (config.projection == ProjectionMethod::pca) {
      projection = pca_2d(embeddings.values);
    } else {
      TsneConfig ts = config.tsne;
      const double cap =
          (static_cast<double>(embeddings.values.rows) - 1.0) / 3.0;
      if (ts.perplexity >= cap) ts.perplexity = std::max(2.0, cap - 1e-6);
      ts.seed = master.child("tsne").seed();
      projection = tsne_2d(embeddings.values, ts);
    }
    std::vector<std::optional<std::size_t>> cluster_col;
    std::vector<std::optional<int>> planted_col;
    for (std::size_t i = 0; i < cohort.trajectories.size(); ++i) {
      cluster_col.push_back(clusters.assignments[i]);
      planted_col.push_back(cohort.trajectories[i].planted_cluster);
    }
    write_coords_csv(embeddings.participant_ids, projection.coords,
                     cluster_col, planted_col, dir + "/coords.csv");
    emit("project", "coords.csv");

    // utilization profiles
    stage = "profile";
    std::ostringstream profiles;
    profiles << "group_kind,group,field,ratio,yes,no,mean_count,mean_nights\n";
    append_profiles(profiles, "adl_bin",
                    occurrence_ratio(cohort, GroupBy::adl_bin(config.bin_width),
                                     UtilizationField::ohs),
                    "ohs");
    append_profiles(profiles, "adl_bin",
                    occurrence_ratio(cohort, GroupBy::adl_bin(config.bin_width),
                                     UtilizationField::onhs),
                    "onhs");
    append_profiles(profiles, "cog_bin",
                    occurrence_ratio(cohort, GroupBy::cog_bin(config.bin_width),
                                     UtilizationField::ohs),
                    "ohs");
    append_profiles(profiles, "cog_bin",
                    occurrence_ratio(cohort, GroupBy::cog_bin(config.bin_width),
                                     UtilizationField::onhs),
                    "onhs");
    append_profiles(profiles, "cluster",
                    occurrence_ratio(cohort,
                                     GroupBy::cluster(clusters.assignments),
                                     UtilizationField::ohs),
                    "ohs");
    append_profiles(profiles, "cluster",
                    occurrence_ratio(cohort,
                                     GroupBy::cluster(clusters.assignments),
                                     UtilizationField::onhs),
                    "onhs");
    write_text_file(dir + "/profiles.csv", profiles.str());
    emit("profile", "profiles.csv");

    // run report
    stage = "report";
    json cluster_sizes = json::array();
    {
      std::vector<std::size_t> sizes(clusters.k, 0);
      for (auto a : clusters.assignments) ++sizes[a];
      for (auto s : sizes) cluster_sizes.push_back(s);
    }
    json report = {
        {"format", "degen-report-v1"},
        {"config", json::parse(config_to_json(config))},
        {"split",
         {{"digest", split_digest_of(train_cohort, test_cohort)},
          {"n_train", train_cohort.trajectories.size()},
          {"n_test", test_cohort.trajectories.size()}}},
        {"train",
         {{"final_loss", trained.history.back()},
          {"epochs", trained.history.size()},
          {"history", trained.history}}},
        {"k_selection", json::parse(kselection_to_json(kselect))},
        {"clusters",
         {{"k", clusters.k},
          {"inertia", clusters.inertia},
          {"iterations", clusters.iterations_run},
          {"sizes", cluster_sizes}}},
        {"descriptive",
         json::parse(descriptive_to_json(descriptive_stats(cohort)))}};
    if (projection.tsne) {
      report["projection"] = {
          {"method", "tsne"},
          {"initial_kl", projection.tsne->initial_kl},
          {"final_kl", projection.tsne->final_kl},
          {"iterations", projection.tsne->iterations},
          {"p_total_mass", projection.tsne->p_total_mass},
          {"max_perplexity_residual",
           projection.tsne->max_perplexity_residual}};
    } else if (projection.pca) {
      report["projection"] = {
          {"method", "pca"},
          {"explained_variance", projection.pca->explained_variance}};
    }
    write_text_file(dir + "/report.json", report.dump(2) + "\n");
    emit("report", "report.json");
  } catch (...) {
    manifest.failed_stage = stage;
    write_manifest();
    throw;
  }

  write_manifest();
  return manifest;
}

}  // namespace degen
