#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "degen/baselines.hpp"
#include "degen/clustering.hpp"
#include "degen/errors.hpp"
#include "degen/pipeline.hpp"
#include "degen/profiling.hpp"
#include "degen/projection.hpp"
#include "degen/serialize.hpp"

namespace fs = std::filesystem;
using namespace degen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> cells;
  std::optional<std::string> k_range;
  std::optional<std::string> projection;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = config_from_json(read_text_file(opts.config_path));
  }
  if (opts.seed) config.master_seed = *opts.seed;
  if (opts.out_dir) config.output_dir = *opts.out_dir;
  if (opts.cells) config.cells = parse_grid_cells(*opts.cells);
  if (opts.k_range) {
    const auto colon = opts.k_range->find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--k-range must look like A:B");
    }
    config.k_min = std::stoul(opts.k_range->substr(0, colon));
    config.k_max = std::stoul(opts.k_range->substr(colon + 1));
  }
  if (opts.projection) {
    if (*opts.projection == "pca") {
      config.projection = ProjectionMethod::pca;
    } else if (*opts.projection == "tsne") {
      config.projection = ProjectionMethod::tsne;
    } else {
      throw ConfigError("--projection must be pca or tsne");
    }
  }
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config JSON");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--out", opts.out_dir, "output directory");
}

int cmd_generate(const CommonOpts& opts) {
  ExperimentConfig config = resolve_config(opts);
  SyntheticSpec spec = config.synthetic;
  if (opts.seed) spec.seed = *opts.seed;
  const Cohort cohort = generate_synthetic_cohort(spec);
  fs::create_directories(config.output_dir);
  const std::string path = config.output_dir + "/cohort.csv";
  write_cohort_csv(cohort, path);
  std::cout << "wrote " << path << " (" << cohort.size() << " participants, "
            << cohort.trajectories.front().waves.size() << " waves)\n";
  return kExitOk;
}

int cmd_train(const CommonOpts& opts) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);

  const SeededRng master(config.master_seed);
  const Cohort cohort = acquire_cohort(config);
  SeededRng split_rng = master.child("split");
  auto [train_cohort, test_cohort] =
      split(cohort, config.test_fraction, split_rng);
  auto [norm_train, stats] = normalize(train_cohort, {});
  const TrainSet train_set =
      make_train_set(norm_train, config.train.multi, config.train.use_features,
                     config.train_target);
  TrainConfig tc = config.train;
  tc.seed = master.child("train").seed();
  const TrainResult result = train(train_set, tc);

  const std::string model_path = config.output_dir + "/model.json";
  save_lstm_model({result.params, tc.multi, tc.use_features,
                   result.target_names, stats},
                  model_path);
  std::string history = "epoch,train_mse\n";
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    history += std::to_string(e + 1) + "," + format_double(result.history[e]) +
               "\n";
  }
  write_text_file(config.output_dir + "/history.csv", history);
  std::cout << "wrote " << model_path << " (final train mse "
            << format_double(result.history.back()) << ")\n";
  return kExitOk;
}

int cmd_grid(const CommonOpts& opts) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);
  const MetricsReport report = run_grid(config);
  write_text_file(config.output_dir + "/metrics.json",
                  metrics_to_json(report));
  write_text_file(config.output_dir + "/metrics.csv", metrics_to_csv(report));
  std::cout << metrics_to_csv(report);
  for (const auto& row : report.rows) {
    if (row.failed) {
      std::cerr << "cell " << row.cell.name() << " failed: " << row.error
                << "\n";
    }
  }
  return kExitOk;
}

int cmd_embed(const CommonOpts& opts, const std::string& model_path,
              const std::string& data_path) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);
  const LstmModelFile model = load_lstm_model(model_path);
  const Cohort cohort = load_cohort_csv(data_path);
  auto [norm, stats] = normalize(cohort, model.stats);
  (void)stats;
  PredictionTarget target = PredictionTarget::both;
  if (!model.multi) {
    target = model.target_names.front() == "cog" ? PredictionTarget::cog
                                                 : PredictionTarget::adl;
  }
  const TrainSet set =
      make_train_set(norm, model.multi, model.use_features, target);
  const EmbeddingMatrix embeddings = extract_embeddings(model.params, set);
  const std::string path = config.output_dir + "/embeddings.csv";
  write_embeddings_csv(embeddings, path);
  std::cout << "wrote " << path << " (" << embeddings.values.rows << " x "
            << embeddings.values.cols << ")\n";
  return kExitOk;
}

int cmd_cluster(const CommonOpts& opts, const std::string& embeddings_path) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);
  const EmbeddingMatrix embeddings = read_embeddings_csv(embeddings_path);
  const SeededRng master(config.master_seed);
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
                        config.output_dir + "/assignments.csv");
  write_text_file(config.output_dir + "/kselect.json",
                  kselection_to_json(kselect));
  std::cout << "chose k=" << kselect.chosen_k << " (inertia "
            << format_double(clusters.inertia) << ")\n";
  return kExitOk;
}

int cmd_project(const CommonOpts& opts, const std::string& embeddings_path,
                const std::string& assignments_path) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);
  const EmbeddingMatrix embeddings = read_embeddings_csv(embeddings_path);

  ProjectionResult projection;
  if (config.projection == ProjectionMethod::pca) {
    projection = pca_2d(embeddings.values);
  } else {
    TsneConfig ts = config.tsne;
    const double cap = (static_cast<double>(embeddings.values.rows) - 1.0) / 3.0;
    if (ts.perplexity >= cap) ts.perplexity = std::max(2.0, cap - 1e-6);
    ts.seed = SeededRng(config.master_seed).child("tsne").seed();
    projection = tsne_2d(embeddings.values, ts);
  }

  std::vector<std::optional<std::size_t>> cluster_col(
      embeddings.values.rows);
  if (!assignments_path.empty()) {
    auto [ids, assignments] = read_assignments_csv(assignments_path);
    if (ids != embeddings.participant_ids) {
      throw ValidationError("assignments do not align with embeddings");
    }
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      cluster_col[i] = assignments[i];
    }
  }
  std::vector<std::optional<int>> planted_col(embeddings.values.rows);
  const std::string path = config.output_dir + "/coords.csv";
  write_coords_csv(embeddings.participant_ids, projection.coords, cluster_col,
                   planted_col, path);
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

int cmd_profile(const CommonOpts& opts, const std::string& data_path,
                const std::string& assignments_path) {
  ExperimentConfig config = resolve_config(opts);
  fs::create_directories(config.output_dir);
  const Cohort cohort = load_cohort_csv(data_path);

  std::ostringstream out;
  out << "group_kind,group,field,ratio,yes,no,mean_count,mean_nights\n";
  auto append = [&](const std::string& kind, const ProfileReport& report,
                    const std::string& field) {
    for (const auto& row : report.rows) {
      out << kind << ',' << row.group << ',' << field << ','
          << format_double(row.ratio) << ',' << row.yes << ',' << row.no
          << ',' << format_double(row.mean_count) << ','
          << format_double(row.mean_nights) << '\n';
    }
  };
  append("adl_bin",
         occurrence_ratio(cohort, GroupBy::adl_bin(config.bin_width),
                          UtilizationField::ohs),
         "ohs");
  append("adl_bin",
         occurrence_ratio(cohort, GroupBy::adl_bin(config.bin_width),
                          UtilizationField::onhs),
         "onhs");
  append("cog_bin",
         occurrence_ratio(cohort, GroupBy::cog_bin(config.bin_width),
                          UtilizationField::ohs),
         "ohs");
  append("cog_bin",
         occurrence_ratio(cohort, GroupBy::cog_bin(config.bin_width),
                          UtilizationField::onhs),
         "onhs");
  if (!assignments_path.empty()) {
    auto [ids, assignments] = read_assignments_csv(assignments_path);
    append("cluster",
           occurrence_ratio(cohort, GroupBy::cluster(assignments),
                            UtilizationField::ohs),
           "ohs");
    append("cluster",
           occurrence_ratio(cohort, GroupBy::cluster(assignments),
                            UtilizationField::onhs),
           "onhs");
  }
  write_text_file(config.output_dir + "/profiles.csv", out.str());
  write_text_file(config.output_dir + "/descriptive.json",
                  descriptive_to_json(descriptive_stats(cohort)));
  std::cout << "wrote " << config.output_dir << "/profiles.csv and "
            << config.output_dir << "/descriptive.json\n";
  return kExitOk;
}

int cmd_pipeline(const CommonOpts& opts) {
  ExperimentConfig config = resolve_config(opts);
  const PipelineManifest manifest = run_pipeline(config);
  std::cout << "pipeline complete; " << manifest.artifacts.size()
            << " artifacts under " << config.output_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-functional degradation modeling toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string model_path, data_path, embeddings_path, assignments_path;

  auto* generate = app.add_subcommand("generate", "write a synthetic cohort CSV");
  add_common(generate, opts);

  auto* train_cmd = app.add_subcommand("train", "train the LSTM and save it");
  add_common(train_cmd, opts);

  auto* grid = app.add_subcommand("grid", "run the method x multi x features grid");
  add_common(grid, opts);
  grid->add_option("--cells", opts.cells,
                   "comma-separated cells, e.g. lstm+multi+features");

  auto* embed = app.add_subcommand("embed", "extract trajectory embeddings");
  add_common(embed, opts);
  embed->add_option("--model", model_path, "trained model JSON")->required();
  embed->add_option("--data", data_path, "cohort CSV")->required();

  auto* cluster = app.add_subcommand("cluster", "select k and cluster embeddings");
  add_common(cluster, opts);
  cluster->add_option("--embeddings", embeddings_path, "embeddings CSV")
      ->required();
  cluster->add_option("--k-range", opts.k_range, "candidate range A:B");

  auto* project = app.add_subcommand("project", "2-D projection of embeddings");
  add_common(project, opts);
  project->add_option("--embeddings", embeddings_path, "embeddings CSV")
      ->required();
  project->add_option("--assignments", assignments_path, "assignments CSV");
  project->add_option("--projection", opts.projection, "pca or tsne");

  auto* profile = app.add_subcommand("profile", "utilization profiles");
  add_common(profile, opts);
  profile->add_option("--data", data_path, "cohort CSV")->required();
  profile->add_option("--assignments", assignments_path, "assignments CSV");

  auto* pipeline = app.add_subcommand("pipeline", "full end-to-end run");
  add_common(pipeline, opts);
  pipeline->add_option("--k-range", opts.k_range, "candidate range A:B");
  pipeline->add_option("--projection", opts.projection, "pca or tsne");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(opts);
    if (train_cmd->parsed()) return cmd_train(opts);
    if (grid->parsed()) return cmd_grid(opts);
    if (embed->parsed()) return cmd_embed(opts, model_path, data_path);
    if (cluster->parsed()) return cmd_cluster(opts, embeddings_path);
    if (project->parsed())
      return cmd_project(opts, embeddings_path, assignments_path);
    if (profile->parsed()) return cmd_profile(opts, data_path, assignments_path);
    if (pipeline->parsed()) return cmd_pipeline(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SpecError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
