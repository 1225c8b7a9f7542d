#include "degen/profiling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "degen/errors.hpp"

namespace degen {

double occurrence_ratio_from_counts(std::size_t yes, std::size_t no) {
  if (yes + no == 0) {
    throw InvalidInputError("occurrence ratio undefined for an empty group");
  }
  return static_cast<double>(yes) / static_cast<double>(yes + no);
}

ProfileReport occurrence_ratio(const Cohort& cohort, const GroupBy& group_by,
                               UtilizationField field) {
  if (cohort.trajectories.empty()) {
    throw InvalidInputError("occurrence_ratio: empty cohort");
  }
  if (group_by.kind == GroupBy::Kind::cluster &&
      group_by.assignments.size() != cohort.trajectories.size()) {
    throw ShapeError("occurrence_ratio: assignments not aligned to cohort");
  }
  if (group_by.kind != GroupBy::Kind::cluster && group_by.bin_width <= 0) {
    throw InvalidInputError("occurrence_ratio: bin width must be positive");
  }

  struct Bucket {
    std::size_t yes = 0, no = 0;
    double count_sum = 0.0, nights_sum = 0.0;
  };
  std::map<std::size_t, Bucket> buckets;

  for (std::size_t ti = 0; ti < cohort.trajectories.size(); ++ti) {
    const auto& traj = cohort.trajectories[ti];
    for (const auto& w : traj.waves) {
      std::size_t key;
      switch (group_by.kind) {
        case GroupBy::Kind::adl_bin:
          key = static_cast<std::size_t>(w.adl / group_by.bin_width);
          break;
        case GroupBy::Kind::cog_bin:
          key = static_cast<std::size_t>(w.cog / group_by.bin_width);
          break;
        case GroupBy::Kind::cluster:
        default:
          key = group_by.assignments[ti];
          break;
      }
      Bucket& b = buckets[key];
      const bool hit = field == UtilizationField::ohs ? w.ohs : w.onhs;
      if (hit) {
        ++b.yes;
      } else {
        ++b.no;
      }
      if (field == UtilizationField::ohs) {
        b.count_sum += w.ohs_count;
        b.nights_sum += w.noohs_nights;
      } else {
        b.count_sum += w.onhs_count;
        b.nights_sum += w.noonhs_nights;
      }
    }
  }

  auto group_label = [&](std::size_t key) {
    if (group_by.kind == GroupBy::Kind::cluster) {
      return "cluster " + std::to_string(key);
    }
    const int lo = static_cast<int>(key) * group_by.bin_width;
    const int hi = lo + group_by.bin_width;
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + ")";
  };

  ProfileReport report;
  if (group_by.kind != GroupBy::Kind::cluster) {
    // enumerate all score bins so gaps surface as warnings
    const std::size_t n_bins =
        static_cast<std::size_t>(30 / group_by.bin_width) + 1;
    for (std::size_t key = 0; key < n_bins; ++key) {
      if (!buckets.count(key)) {
        report.warnings.push_back("empty group " + group_label(key) +
                                  " dropped");
      }
    }
  }

  for (const auto& [key, b] : buckets) {
    const std::size_t total = b.yes + b.no;
    UtilizationProfile row;
    row.group = group_label(key);
    row.yes = b.yes;
    row.no = b.no;
    row.ratio = occurrence_ratio_from_counts(b.yes, b.no);
    row.mean_count = b.count_sum / static_cast<double>(total);
    row.mean_nights = b.nights_sum / static_cast<double>(total);
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

NumericSummary summarize(const std::string& name, const std::vector<double>& xs,
                         const std::string& level) {
  NumericSummary s;
  s.name = name;
  s.level = level;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(acc / (n - 1.0));
  }
  return s;
}

}  // namespace

DescriptiveReport descriptive_stats(const Cohort& cohort) {
  if (cohort.trajectories.empty()) {
    throw InvalidInputError("descriptive_stats: empty cohort");
  }

  DescriptiveReport report;
  report.n_participants = cohort.trajectories.size();
  report.n_waves = cohort.trajectories.front().waves.size();

  std::vector<double> adl, cog, ohs_counts, ohs_nights, onhs_counts,
      onhs_nights;
  std::size_t ohs_yes = 0, ohs_no = 0, onhs_yes = 0, onhs_no = 0;
  for (const auto& t : cohort.trajectories) {
    for (const auto& w : t.waves) {
      adl.push_back(w.adl);
      cog.push_back(w.cog);
      ohs_counts.push_back(w.ohs_count);
      ohs_nights.push_back(w.noohs_nights);
      onhs_counts.push_back(w.onhs_count);
      onhs_nights.push_back(w.noonhs_nights);
      (w.ohs ? ohs_yes : ohs_no)++;
      (w.onhs ? onhs_yes : onhs_no)++;
    }
  }
  report.numerics.push_back(summarize("adl", adl, "wave"));
  report.numerics.push_back(summarize("cog", cog, "wave"));
  report.numerics.push_back(summarize("ohs_count", ohs_counts, "wave"));
  report.numerics.push_back(summarize("noohs_nights", ohs_nights, "wave"));
  report.numerics.push_back(summarize("onhs_count", onhs_counts, "wave"));
  report.numerics.push_back(summarize("noonhs_nights", onhs_nights, "wave"));

  std::vector<double> age, poverty_threshold, education, wealth, income;
  for (const auto& t : cohort.trajectories) {
    age.push_back(t.statics.age_at_entry);
    poverty_threshold.push_back(t.statics.poverty_threshold);
    education.push_back(t.statics.education_years);
    wealth.push_back(t.statics.wealth);
    income.push_back(t.statics.income);
  }
  report.numerics.push_back(summarize("age_at_entry", age, "participant"));
  report.numerics.push_back(
      summarize("poverty_threshold", poverty_threshold, "participant"));
  report.numerics.push_back(
      summarize("education_years", education, "participant"));
  report.numerics.push_back(summarize("wealth", wealth, "participant"));
  report.numerics.push_back(summarize("income", income, "participant"));

  auto categorical = [&](const std::string& name, auto level_of,
                         const std::vector<std::string>& level_names) {
    CategoricalSummary cs;
    cs.name = name;
    std::vector<std::size_t> counts(level_names.size(), 0);
    for (const auto& t : cohort.trajectories) {
      ++counts[static_cast<std::size_t>(level_of(t.statics))];
    }
    for (std::size_t i = 0; i < level_names.size(); ++i) {
      CategoricalLevelCount lc;
      lc.level = level_names[i];
      lc.count = counts[i];
      lc.pct = 100.0 * static_cast<double>(counts[i]) /
               static_cast<double>(cohort.trajectories.size());
      cs.levels.push_back(std::move(lc));
    }
    report.categoricals.push_back(std::move(cs));
  };

  categorical(
      "gender", [](const StaticFeatures& s) { return static_cast<int>(s.gender); },
      {"female", "male"});
  categorical(
      "smoke", [](const StaticFeatures& s) { return static_cast<int>(s.smoke); },
      {"never", "always", "ever"});
  categorical(
      "drink", [](const StaticFeatures& s) { return static_cast<int>(s.drink); },
      {"light_never", "heavy", "always"});
  categorical(
      "married",
      [](const StaticFeatures& s) { return static_cast<int>(s.married); },
      {"with_spouse", "spouse_absent", "partnered"});
  categorical(
      "region",
      [](const StaticFeatures& s) { return static_cast<int>(s.region); },
      {"northeast", "midwest", "south", "west", "other"});
  categorical(
      "race", [](const StaticFeatures& s) { return static_cast<int>(s.race); },
      {"white", "black", "hispanic", "other"});
  categorical(
      "poverty_category",
      [](const StaticFeatures& s) { return s.poverty_category - 1; },
      {"1", "2", "3", "4", "5"});

  // utilization indicators, pooled over waves like the count rows
  CategoricalSummary ohs_summary;
  ohs_summary.name = "ohs";
  const double pooled =
      static_cast<double>(report.n_participants * report.n_waves);
  ohs_summary.levels = {
      {"yes", ohs_yes, 100.0 * static_cast<double>(ohs_yes) / pooled},
      {"no", ohs_no, 100.0 * static_cast<double>(ohs_no) / pooled}};
  report.categoricals.push_back(std::move(ohs_summary));
  CategoricalSummary onhs_summary;
  onhs_summary.name = "onhs";
  onhs_summary.levels = {
      {"yes", onhs_yes, 100.0 * static_cast<double>(onhs_yes) / pooled},
      {"no", onhs_no, 100.0 * static_cast<double>(onhs_no) / pooled}};
  report.categoricals.push_back(std::move(onhs_summary));

  return report;
}

}  // namespace degen
