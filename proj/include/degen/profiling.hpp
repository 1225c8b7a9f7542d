#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "degen/dataset.hpp"

namespace degen {

enum class UtilizationField { ohs, onhs };

/// Grouping key for occurrence-ratio profiles: degradation-score bins of a
/// fixed width, or externally supplied cluster assignments aligned to the
/// cohort's trajectory order.
struct GroupBy {
  enum class Kind { adl_bin, cog_bin, cluster };
  Kind kind = Kind::adl_bin;
  int bin_width = 5;
  std::vector<std::size_t> assignments;

  static GroupBy adl_bin(int width) { return {Kind::adl_bin, width, {}}; }
  static GroupBy cog_bin(int width) { return {Kind::cog_bin, width, {}}; }
  static GroupBy cluster(std::vector<std::size_t> assignments) {
    return {Kind::cluster, 0, std::move(assignments)};
  }
};

struct UtilizationProfile {
  std::string group;  // "[0,5)", "[30,30]" or "cluster 2"
  std::size_t yes = 0;
  std::size_t no = 0;
  double ratio = 0.0;        // yes / (yes + no)
  double mean_count = 0.0;   // stays per wave within the group
  double mean_nights = 0.0;  // nights per wave within the group
};

struct ProfileReport {
  std::vector<UtilizationProfile> rows;
  std::vector<std::string> warnings;  // dropped empty groups
};

double occurrence_ratio_from_counts(std::size_t yes, std::size_t no);

/// Pools every (participant, wave) observation, groups it, and reports the
/// occurrence ratio plus mean stay counts and nights for the chosen
/// service. Empty groups are dropped with a warning record.
ProfileReport occurrence_ratio(const Cohort& cohort, const GroupBy& group_by,
                               UtilizationField field);

struct NumericSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::string level;  // "participant" or "wave"
};

struct CategoricalLevelCount {
  std::string level;
  std::size_t count = 0;
  double pct = 0.0;
};

struct CategoricalSummary {
  std::string name;
  std::vector<CategoricalLevelCount> levels;
};

struct DescriptiveReport {
  std::size_t n_participants = 0;
  std::size_t n_waves = 0;
  std::vector<NumericSummary> numerics;
  std::vector<CategoricalSummary> categoricals;
};

/// Cohort-level descriptive statistics: dynamics and utilization pooled
/// over waves, demographics summarized per participant.
DescriptiveReport descriptive_stats(const Cohort& cohort);

}  // namespace degen
