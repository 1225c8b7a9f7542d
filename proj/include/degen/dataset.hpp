#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "degen/numerics.hpp"
#include "degen/rng.hpp"

namespace degen {

// ---------------------------------------------------------------------------
// Cohort data model
// ---------------------------------------------------------------------------

/// One biennial survey interview. adl/cog are integer indices in [0, 30];
/// higher ADL means worse physical performance, higher COG means better
/// cognitive performance.
struct WaveRecord {
  int wave_index = 1;
  int adl = 0;
  int cog = 0;
  bool ohs = false;   // any overnight hospital stay this wave
  bool onhs = false;  // any overnight nursing-home stay this wave
  int ohs_count = 0;
  int noohs_nights = 0;
  int onhs_count = 0;
  int noonhs_nights = 0;
};

enum class Gender { female, male };
enum class Smoke { never, always, ever };
enum class Drink { light_never, heavy, always };
enum class Married { with_spouse, spouse_absent, partnered };
enum class Region { northeast, midwest, south, west, other };
enum class Race { white, black, hispanic, other };

/// Per-participant demographics, constant across waves.
struct StaticFeatures {
  double age_at_entry = 70.0;
  Gender gender = Gender::female;
  Smoke smoke = Smoke::never;
  Drink drink = Drink::light_never;
  Married married = Married::with_spouse;
  Region region = Region::south;
  Race race = Race::white;
  int poverty_category = 3;  // ordinal 1..5, 1 = poorest
  double poverty_threshold = 333.0;
  double education_years = 12.0;
  double wealth = 0.0;
  double income = 0.0;
};

struct Trajectory {
  std::string participant_id;
  std::vector<WaveRecord> waves;  // wave_index strictly increasing, contiguous
  StaticFeatures statics;
  std::optional<int> planted_cluster;  // synthetic cohorts only; never a model input
};

struct Cohort {
  std::vector<Trajectory> trajectories;
  std::string schema_version = "degen-cohort-v1";

  std::size_t size() const { return trajectories.size(); }
};

/// Validates the cohort invariants: unique ids, contiguous waves starting
/// at 1, scores in range, utilization consistency, length >= 2.
void validate_cohort(const Cohort& cohort);

// ---------------------------------------------------------------------------
// CSV ingestion (one row per participant-wave; statics repeated per row)
// ---------------------------------------------------------------------------

Cohort load_cohort_csv(const std::string& path);
void write_cohort_csv(const Cohort& cohort, const std::string& path);

std::string to_string(Gender g);
std::string to_string(Smoke s);
std::string to_string(Drink d);
std::string to_string(Married m);
std::string to_string(Region r);
std::string to_string(Race r);

// ---------------------------------------------------------------------------
// Synthetic cohort generation
// ---------------------------------------------------------------------------

/// Trajectory dynamics for one planted subpopulation. Mean paths follow
/// start + drift per wave; observed scores add Gaussian noise, then round
/// and clamp to [0, 30].
struct SubpopDynamics {
  double adl_start_mean = 1.0;
  double adl_drift = 0.2;
  double cog_start_mean = 24.0;
  double cog_drift = -0.3;
  double noise_sd = 0.8;
  /// Additive log-odds shift on both utilization links for this subpopulation.
  double util_shift = 0.0;
};

/// Logistic links from current scores to utilization indicators:
///   P(ohs)  = sigmoid(ohs_intercept  + adl_coef * adl - cog_coef * (cog - cog_ref))
/// and analogously for onhs. Increasing in ADL, decreasing in COG.
struct UtilizationLink {
  double ohs_intercept = -2.05;
  double onhs_intercept = -4.75;
  double adl_coef = 0.15;
  double cog_coef = 0.085;
  double cog_ref = 22.0;
};

struct SyntheticSpec {
  std::size_t n_participants = 1699;
  std::size_t n_waves = 8;
  std::vector<SubpopDynamics> subpops;
  std::vector<double> mixing_weights;  // simplex over subpops
  UtilizationLink util;

  // Nonlinear drift modifiers shared by all subpopulations. Disability
  // growth accelerates once ADL passes a soft threshold, cognitive decline
  // below couple_threshold feeds back into physical decline, age scales the
  // drift multiplicatively, and a demographic frailty score (age, smoking,
  // low education) amplifies late-trajectory decline in proportion to the
  // subpopulation's severity. These produce the cross-dimensional,
  // heterogeneous structure the models are meant to exploit; zeroing the
  // gains recovers plain linear trends.
  double accel_threshold = 8.0;
  double accel_scale = 2.0;
  double accel_gain = 1.1;
  double couple_threshold = 14.0;
  double couple_gain = 0.28;
  double age_interaction = 0.22;
  double frailty_gain = 1.4;
  double frailty_ramp_scale = 0.35;  // how sharply the late effect switches on

  std::uint64_t seed = 7;

  std::size_t n_subpopulations() const { return subpops.size(); }

  /// Three-subpopulation cohort calibrated so pooled ADL/COG and utilization
  /// ratios land near the published descriptive statistics.
  static SyntheticSpec defaults();
};

/// Throws SpecError if the spec is infeasible (weights off the simplex,
/// no subpopulations, or a mean path outside [0, 30] for more than half
/// of the waves).
void validate_spec(const SyntheticSpec& spec);

Cohort generate_synthetic_cohort(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Normalization, split, windowing
// ---------------------------------------------------------------------------

struct FeatureStat {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
  bool constant = false;  // sd was degenerate and replaced by 1
};

struct NormalizationStats {
  std::vector<FeatureStat> features;

  const FeatureStat& at(const std::string& name) const;
  bool has(const std::string& name) const;
  /// (value - mean) / sd for the named feature.
  double normalize_value(const std::string& name, double value) const;
  /// value * sd + mean for the named feature.
  double denormalize_value(const std::string& name, double value) const;
};

/// One trajectory as real tensors: dynamic waves as a T x 2 matrix of
/// z-scored (adl, cog) and statics as a fixed-length encoded vector.
struct NormalizedTrajectory {
  std::string participant_id;
  Matrix dyn;      // n_waves x 2, columns (adl, cog), normalized
  Vector statics;  // one-hot categoricals + numerics, normalized
  Vector raw_scores_last_wave;  // raw (adl, cog) at wave T, for raw-unit metrics
  std::optional<int> planted_cluster;
};

struct NormalizedCohort {
  std::vector<NormalizedTrajectory> trajectories;
  std::vector<std::string> dyn_names;     // {"adl", "cog"}
  std::vector<std::string> static_names;  // encoded column names
  NormalizationStats stats;
  std::size_t n_waves = 0;
};

/// Z-scores dynamics (pooled over waves) and encoded statics (per
/// participant). When `stats` is supplied it is applied unchanged, which is
/// how a test set reuses training statistics. Constant features keep sd 1
/// and are flagged. All trajectories must share one length.
std::pair<NormalizedCohort, NormalizationStats> normalize(
    const Cohort& cohort, const std::optional<NormalizationStats>& stats = {});

/// Encodes statics without scaling; exposed for design-matrix assembly.
Vector encode_statics(const StaticFeatures& s);
std::vector<std::string> static_feature_names();

/// Trajectory-granularity split: round(test_fraction * N) trajectories go
/// to the test set, the rest to train. Never splits one participant.
std::pair<Cohort, Cohort> split(const Cohort& cohort, double test_fraction,
                                SeededRng& rng);

/// Model-ready view of one trajectory: inputs are waves 1..T-1 plus the
/// static vector, the target is the normalized (adl, cog) of wave T.
struct WindowedTrajectory {
  std::vector<Vector> inputs;  // T-1 dynamic vectors (full adl+cog columns)
  Vector statics;
  Vector target;  // normalized (adl, cog) at wave T
};

WindowedTrajectory window(const NormalizedTrajectory& traj);

// ---------------------------------------------------------------------------
// Training-set assembly shared by LSTM and regression baselines
// ---------------------------------------------------------------------------

enum class PredictionTarget { adl, cog, both };

struct TrainSample {
  std::string participant_id;
  std::vector<Vector> inputs;  // selected dynamic columns, waves 1..T-1
  Vector statics;              // empty when features are off
  Vector target;               // normalized target(s) at wave T
  Vector raw_target;           // raw score(s) at wave T
  std::optional<int> planted_cluster;
};

struct TrainSet {
  std::vector<TrainSample> samples;
  std::size_t dyn_dim = 0;
  std::size_t static_dim = 0;
  std::size_t out_dim = 0;
  std::vector<std::string> target_names;
};

/// Selects dynamic columns per the multi toggle, appends statics when
/// use_features is on, and windows each trajectory. With multi=true the
/// target must be `both`; with multi=false the single index named by
/// `target` is both the input column and the target.
TrainSet make_train_set(const NormalizedCohort& cohort, bool multi,
                        bool use_features, PredictionTarget target);

}  // namespace degen
