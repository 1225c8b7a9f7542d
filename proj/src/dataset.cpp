#include "degen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "degen/errors.hpp"
#include "degen/serialize.hpp"

namespace degen {

// ---------------------------------------------------------------------------
// Categorical codecs
// ---------------------------------------------------------------------------

namespace {

template <typename E>
struct LevelTable {
  std::vector<std::pair<E, std::string>> levels;

  std::string name(E v) const {
    for (const auto& [e, s] : levels) {
      if (e == v) return s;
    }
    return "?";
  }
  E parse(const std::string& s, const char* field, std::size_t line) const {
    for (const auto& [e, n] : levels) {
      if (n == s) return e;
    }
    throw ValidationError("line " + std::to_string(line) + ": unknown " +
                          field + " value '" + s + "'");
  }
};

const LevelTable<Gender> kGender{{{Gender::female, "female"},
                                  {Gender::male, "male"}}};
const LevelTable<Smoke> kSmoke{{{Smoke::never, "never"},
                                {Smoke::always, "always"},
                                {Smoke::ever, "ever"}}};
const LevelTable<Drink> kDrink{{{Drink::light_never, "light_never"},
                                {Drink::heavy, "heavy"},
                                {Drink::always, "always"}}};
const LevelTable<Married> kMarried{{{Married::with_spouse, "with_spouse"},
                                    {Married::spouse_absent, "spouse_absent"},
                                    {Married::partnered, "partnered"}}};
const LevelTable<Region> kRegion{{{Region::northeast, "northeast"},
                                  {Region::midwest, "midwest"},
                                  {Region::south, "south"},
                                  {Region::west, "west"},
                                  {Region::other, "other"}}};
const LevelTable<Race> kRace{{{Race::white, "white"},
                              {Race::black, "black"},
                              {Race::hispanic, "hispanic"},
                              {Race::other, "other"}}};

}  // namespace

std::string to_string(Gender g) { return kGender.name(g); }
std::string to_string(Smoke s) { return kSmoke.name(s); }
std::string to_string(Drink d) { return kDrink.name(d); }
std::string to_string(Married m) { return kMarried.name(m); }
std::string to_string(Region r) { return kRegion.name(r); }
std::string to_string(Race r) { return kRace.name(r); }

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

void validate_wave(const WaveRecord& w, const std::string& participant) {
  const std::string where = "participant " + participant + " wave " +
                            std::to_string(w.wave_index);
  if (w.adl < 0 || w.adl > 30)
    throw ValidationError(where + ": adl out of [0,30]");
  if (w.cog < 0 || w.cog > 30)
    throw ValidationError(where + ": cog out of [0,30]");
  if (w.ohs_count < 0 || w.noohs_nights < 0 || w.onhs_count < 0 ||
      w.noonhs_nights < 0)
    throw ValidationError(where + ": negative utilization count");
  if (!w.ohs && (w.ohs_count != 0 || w.noohs_nights != 0))
    throw ValidationError(where + ": ohs=0 but hospital counts nonzero");
  if (!w.onhs && (w.onhs_count != 0 || w.noonhs_nights != 0))
    throw ValidationError(where + ": onhs=0 but nursing-home counts nonzero");
}

}  // namespace

void validate_cohort(const Cohort& cohort) {
  std::set<std::string> ids;
  for (const auto& traj : cohort.trajectories) {
    if (!ids.insert(traj.participant_id).second) {
      throw ValidationError("duplicate participant_id " + traj.participant_id);
    }
    if (traj.waves.size() < 2) {
      throw ValidationError("participant " + traj.participant_id +
                            " has fewer than 2 waves");
    }
    int expect = traj.waves.front().wave_index;
    if (expect < 1) {
      throw ValidationError("participant " + traj.participant_id +
                            ": wave_index must be >= 1");
    }
    for (const auto& w : traj.waves) {
      if (w.wave_index != expect) {
        throw ValidationError("participant " + traj.participant_id +
                              ": waves not contiguous (expected " +
                              std::to_string(expect) + ", found " +
                              std::to_string(w.wave_index) + ")");
      }
      ++expect;
      validate_wave(w, traj.participant_id);
    }
  }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kCsvColumns = {
    "participant_id", "wave_index", "adl", "cog", "ohs", "onhs",
    "ohs_count", "noohs_nights", "onhs_count", "noonhs_nights",
    "age_at_entry", "gender", "smoke", "drink", "married", "region", "race",
    "poverty_category", "poverty_threshold", "education_years", "wealth",
    "income"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const char* field, std::size_t line) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad integer '" +
                          s + "' in column " + field);
  }
  return v;
}

double parse_double(const std::string& s, const char* field,
                    std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line) + ": bad number '" +
                          s + "' in column " + field);
  }
}

bool parse_bool(const std::string& s, const char* field, std::size_t line) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw ValidationError("line " + std::to_string(line) +
                        ": boolean column " + field + " must be 0/1, got '" +
                        s + "'");
}

}  // namespace

Cohort load_cohort_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw SchemaError(path + ": empty file");
  auto header = split_csv_line(header_line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& required : kCsvColumns) {
    if (!col.count(required)) {
      throw SchemaError(path + ": missing column '" + required + "'");
    }
  }
  const bool has_planted = col.count("planted_cluster") > 0;

  struct Row {
    std::size_t line;
    WaveRecord wave;
    StaticFeatures statics;
    std::optional<int> planted;
    std::vector<std::string> raw_statics;
  };
  std::map<std::string, std::vector<Row>> by_participant;
  std::vector<std::string> id_order;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError(path + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
    }
    auto cell = [&](const std::string& name) -> const std::string& {
      return cells[col.at(name)];
    };

    Row row;
    row.line = line_no;
    row.wave.wave_index = parse_int(cell("wave_index"), "wave_index", line_no);
    row.wave.adl = parse_int(cell("adl"), "adl", line_no);
    row.wave.cog = parse_int(cell("cog"), "cog", line_no);
    if (row.wave.adl < 0 || row.wave.adl > 30)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": adl out of [0,30]");
    if (row.wave.cog < 0 || row.wave.cog > 30)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": cog out of [0,30]");
    row.wave.ohs = parse_bool(cell("ohs"), "ohs", line_no);
    row.wave.onhs = parse_bool(cell("onhs"), "onhs", line_no);
    row.wave.ohs_count = parse_int(cell("ohs_count"), "ohs_count", line_no);
    row.wave.noohs_nights =
        parse_int(cell("noohs_nights"), "noohs_nights", line_no);
    row.wave.onhs_count = parse_int(cell("onhs_count"), "onhs_count", line_no);
    row.wave.noonhs_nights =
        parse_int(cell("noonhs_nights"), "noonhs_nights", line_no);

    auto& s = row.statics;
    s.age_at_entry = parse_double(cell("age_at_entry"), "age_at_entry", line_no);
    s.gender = kGender.parse(cell("gender"), "gender", line_no);
    s.smoke = kSmoke.parse(cell("smoke"), "smoke", line_no);
    s.drink = kDrink.parse(cell("drink"), "drink", line_no);
    s.married = kMarried.parse(cell("married"), "married", line_no);
    s.region = kRegion.parse(cell("region"), "region", line_no);
    s.race = kRace.parse(cell("race"), "race", line_no);
    s.poverty_category =
        parse_int(cell("poverty_category"), "poverty_category", line_no);
    if (s.poverty_category < 1 || s.poverty_category > 5)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": poverty_category out of 1..5");
    s.poverty_threshold =
        parse_double(cell("poverty_threshold"), "poverty_threshold", line_no);
    s.education_years =
        parse_double(cell("education_years"), "education_years", line_no);
    s.wealth = parse_double(cell("wealth"), "wealth", line_no);
    s.income = parse_double(cell("income"), "income", line_no);

    if (has_planted) {
      const std::string& p = cells[col.at("planted_cluster")];
      if (!p.empty()) row.planted = parse_int(p, "planted_cluster", line_no);
    }

    // statics must repeat identically across a participant's rows
    for (const auto& name :
         {"age_at_entry", "gender", "smoke", "drink", "married", "region",
          "race", "poverty_category", "poverty_threshold", "education_years",
          "wealth", "income"}) {
      row.raw_statics.push_back(cell(name));
    }

    const std::string& id = cell("participant_id");
    if (id.empty())
      throw ValidationError("line " + std::to_string(line_no) +
                            ": empty participant_id");
    auto [it, inserted] = by_participant.try_emplace(id);
    if (inserted) id_order.push_back(id);
    if (!it->second.empty() &&
        it->second.front().raw_statics != row.raw_statics) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": statics differ from earlier rows of " + id);
    }
    it->second.push_back(std::move(row));
  }

  Cohort cohort;
  for (const auto& id : id_order) {
    auto& rows = by_participant.at(id);
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.wave.wave_index < b.wave.wave_index;
    });
    Trajectory traj;
    traj.participant_id = id;
    traj.statics = rows.front().statics;
    traj.planted_cluster = rows.front().planted;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 &&
          rows[i].wave.wave_index != rows[i - 1].wave.wave_index + 1) {
        throw ValidationError(
            "line " + std::to_string(rows[i].line) + ": participant " + id +
            " waves not contiguous (" +
            std::to_string(rows[i - 1].wave.wave_index) + " then " +
            std::to_string(rows[i].wave.wave_index) + ")");
      }
      traj.waves.push_back(rows[i].wave);
    }
    cohort.trajectories.push_back(std::move(traj));
  }
  validate_cohort(cohort);
  return cohort;
}

void write_cohort_csv(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);

  bool any_planted = false;
  for (const auto& t : cohort.trajectories) {
    if (t.planted_cluster) any_planted = true;
  }

  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out << ',';
    out << kCsvColumns[i];
  }
  if (any_planted) out << ",planted_cluster";
  out << '\n';

  for (const auto& t : cohort.trajectories) {
    const auto& s = t.statics;
    for (const auto& w : t.waves) {
      out << t.participant_id << ',' << w.wave_index << ',' << w.adl << ','
          << w.cog << ',' << (w.ohs ? 1 : 0) << ',' << (w.onhs ? 1 : 0) << ','
          << w.ohs_count << ',' << w.noohs_nights << ',' << w.onhs_count << ','
          << w.noonhs_nights << ',' << format_double(s.age_at_entry) << ','
          << to_string(s.gender) << ',' << to_string(s.smoke) << ','
          << to_string(s.drink) << ',' << to_string(s.married) << ','
          << to_string(s.region) << ',' << to_string(s.race) << ','
          << s.poverty_category << ',' << format_double(s.poverty_threshold)
          << ',' << format_double(s.education_years) << ','
          << format_double(s.wealth) << ',' << format_double(s.income);
      if (any_planted) {
        out << ',';
        if (t.planted_cluster) out << *t.planted_cluster;
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

SyntheticSpec SyntheticSpec::defaults() {
  SyntheticSpec spec;
  spec.subpops = {
      // stable: low disability, slow decline
      {0.7, 0.12, 24.5, -0.25, 0.7, 0.0},
      // physical decline: disability compounds past the soft threshold
      {3.1, 1.00, 22.5, -0.45, 0.8, 0.3},
      // cognitive decline: COG drops fast and feeds back into ADL
      {1.6, 0.35, 21.0, -1.90, 0.8, 0.55},
  };
  spec.mixing_weights = {0.50, 0.28, 0.22};
  return spec;
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.subpops.empty()) throw SpecError("spec has no subpopulations");
  if (spec.subpops.size() != spec.mixing_weights.size()) {
    throw SpecError("mixing_weights size differs from subpopulation count");
  }
  double total = 0.0;
  for (double w : spec.mixing_weights) {
    if (w < 0.0) throw SpecError("negative mixing weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw SpecError("mixing weights must sum to 1");
  }
  if (spec.n_participants == 0) throw SpecError("n_participants must be > 0");
  if (spec.n_waves < 2) throw SpecError("n_waves must be >= 2");

  // A subpopulation whose plain linear mean path leaves [0,30] for more
  // than half of the waves cannot be represented by clamped scores.
  for (std::size_t c = 0; c < spec.subpops.size(); ++c) {
    const auto& d = spec.subpops[c];
    auto count_bad = [&](double start, double drift) {
      std::size_t bad = 0;
      for (std::size_t t = 0; t < spec.n_waves; ++t) {
        double mean = start + drift * static_cast<double>(t);
        if (mean < 0.0 || mean > 30.0) ++bad;
      }
      return bad;
    };
    if (count_bad(d.adl_start_mean, d.adl_drift) * 2 > spec.n_waves ||
        count_bad(d.cog_start_mean, d.cog_drift) * 2 > spec.n_waves) {
      throw SpecError("subpopulation " + std::to_string(c) +
                      ": mean path outside [0,30] for more than half of the "
                      "waves");
    }
  }
}

namespace {

int clamp_score(double x) {
  double r = std::nearbyint(x);
  if (r < 0.0) r = 0.0;
  if (r > 30.0) r = 30.0;
  return static_cast<int>(r);
}

StaticFeatures draw_statics(SeededRng& rng) {
  StaticFeatures s;
  s.age_at_entry = std::round(std::clamp(rng.normal(70.07, 4.47), 65.0, 95.0));
  double u = rng.uniform();
  s.gender = u < 0.679 ? Gender::female : Gender::male;
  u = rng.uniform();
  s.smoke = u < 0.534 ? Smoke::never : (u < 0.932 ? Smoke::always : Smoke::ever);
  u = rng.uniform();
  s.drink = u < 0.796 ? Drink::light_never
                      : (u < 0.928 ? Drink::heavy : Drink::always);
  u = rng.uniform();
  s.married = u < 0.658 ? Married::with_spouse
                        : (u < 0.891 ? Married::spouse_absent
                                     : Married::partnered);
  u = rng.uniform();
  s.region = u < 0.162   ? Region::northeast
             : u < 0.452 ? Region::midwest
             : u < 0.817 ? Region::south
             : u < 0.999 ? Region::west
                         : Region::other;
  u = rng.uniform();
  s.race = u < 0.824   ? Race::white
           : u < 0.926 ? Race::black
           : u < 0.984 ? Race::hispanic
                       : Race::other;
  u = rng.uniform();
  s.poverty_category = u < 0.147   ? 1
                       : u < 0.417 ? 2
                       : u < 0.624 ? 3
                       : u < 0.834 ? 4
                                   : 5;
  // monetary amounts are bracketed the way survey extracts usually are
  s.poverty_threshold =
      std::round(std::clamp(rng.normal(333.0, 394.64), 50.0, 3000.0) / 25.0) *
      25.0;
  s.education_years = std::round(std::clamp(rng.normal(12.31, 3.06), 0.0, 17.0));
  s.wealth = std::round(std::exp(rng.normal(12.03, 1.25)) / 25000.0) * 25000.0;
  s.income = std::round(std::exp(rng.normal(10.18, 0.94)) / 5000.0) * 5000.0;
  return s;
}

}  // namespace

Cohort generate_synthetic_cohort(const SyntheticSpec& spec) {
  validate_spec(spec);
  const SeededRng root(spec.seed);

  // cumulative mixing weights
  std::vector<double> cum;
  double acc = 0.0;
  for (double w : spec.mixing_weights) {
    acc += w;
    cum.push_back(acc);
  }
  cum.back() = 1.0;

  Cohort cohort;
  cohort.trajectories.reserve(spec.n_participants);

  int id_width = 1;
  for (std::size_t n = spec.n_participants; n >= 10; n /= 10) ++id_width;

  for (std::size_t i = 0; i < spec.n_participants; ++i) {
    SeededRng rng = root.child(static_cast<std::uint64_t>(i));
    // separate streams so utilization draws never perturb the score path
    SeededRng score_rng = rng.child("scores");
    SeededRng util_rng = rng.child("util");

    double u = rng.uniform();
    std::size_t c = 0;
    while (c + 1 < cum.size() && u >= cum[c]) ++c;
    const SubpopDynamics& dyn = spec.subpops[c];

    Trajectory traj;
    std::string digits = std::to_string(i);
    traj.participant_id =
        "p" + std::string(id_width - digits.size(), '0') + digits;
    traj.statics = draw_statics(rng);
    traj.planted_cluster = static_cast<int>(c);

    const double age_z =
        std::clamp((traj.statics.age_at_entry - 70.0) / 4.5, -2.0, 2.0);
    const double age_mult = 1.0 + spec.age_interaction * age_z;
    const double edu_z =
        std::clamp((traj.statics.education_years - 12.31) / 3.06, -2.0, 2.0);
    const double frailty = std::clamp(
        0.8 * age_z + 0.5 * (traj.statics.smoke == Smoke::always ? 1.0 : 0.0) -
            0.35 * edu_z,
        -2.0, 2.0);
    // late effect scales with the subpopulation's own decline rate, so the
    // demographics interact with the latent class instead of adding a
    // uniform offset
    const double severity = std::abs(dyn.adl_drift);

    double adl_mean = dyn.adl_start_mean;
    double cog_mean = dyn.cog_start_mean;
    for (std::size_t t = 0; t < spec.n_waves; ++t) {
      if (t > 0) {
        const double ramp = stable_sigmoid((adl_mean - spec.accel_threshold) /
                                           spec.accel_scale);
        const double couple =
            std::max(0.0, spec.couple_threshold - cog_mean);
        const double late_ramp = stable_sigmoid(
            (static_cast<double>(t + 1) -
             (static_cast<double>(spec.n_waves) - 0.5)) /
            spec.frailty_ramp_scale);
        adl_mean += dyn.adl_drift * (1.0 + spec.accel_gain * ramp) * age_mult +
                    spec.couple_gain * couple +
                    spec.frailty_gain * frailty * severity * late_ramp;
        cog_mean += dyn.cog_drift * age_mult;
      }
      WaveRecord w;
      w.wave_index = static_cast<int>(t) + 1;
      w.adl = clamp_score(adl_mean + score_rng.normal(0.0, dyn.noise_sd));
      w.cog = clamp_score(cog_mean + score_rng.normal(0.0, dyn.noise_sd));

      const auto& link = spec.util;
      const double base = link.adl_coef * w.adl -
                          link.cog_coef * (w.cog - link.cog_ref) +
                          dyn.util_shift;
      w.ohs = util_rng.bernoulli(stable_sigmoid(link.ohs_intercept + base));
      if (w.ohs) {
        w.ohs_count = 1 + util_rng.poisson(0.50 + 0.01 * w.adl);
        for (int k = 0; k < w.ohs_count; ++k) {
          w.noohs_nights += 1 + util_rng.poisson(3.3);
        }
      }
      w.onhs = util_rng.bernoulli(stable_sigmoid(link.onhs_intercept + base));
      if (w.onhs) {
        w.onhs_count = 1 + util_rng.poisson(0.33);
        for (int k = 0; k < w.onhs_count; ++k) {
          w.noonhs_nights += 8 + util_rng.poisson(35.0);
        }
      }
      traj.waves.push_back(w);
    }
    cohort.trajectories.push_back(std::move(traj));
  }
  return cohort;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

const FeatureStat& NormalizationStats::at(const std::string& name) const {
  for (const auto& f : features) {
    if (f.name == name) return f;
  }
  throw InvalidInputError("no normalization stats for feature '" + name + "'");
}

bool NormalizationStats::has(const std::string& name) const {
  for (const auto& f : features) {
    if (f.name == name) return true;
  }
  return false;
}

double NormalizationStats::normalize_value(const std::string& name,
                                           double value) const {
  const auto& f = at(name);
  return (value - f.mean) / f.sd;
}

double NormalizationStats::denormalize_value(const std::string& name,
                                             double value) const {
  const auto& f = at(name);
  return value * f.sd + f.mean;
}

std::vector<std::string> static_feature_names() {
  std::vector<std::string> names = {"age_at_entry",      "poverty_category",
                                    "poverty_threshold", "education_years",
                                    "wealth",            "income"};
  for (auto g : {Gender::female, Gender::male})
    names.push_back("gender=" + to_string(g));
  for (auto s : {Smoke::never, Smoke::always, Smoke::ever})
    names.push_back("smoke=" + to_string(s));
  for (auto d : {Drink::light_never, Drink::heavy, Drink::always})
    names.push_back("drink=" + to_string(d));
  for (auto m : {Married::with_spouse, Married::spouse_absent,
                 Married::partnered})
    names.push_back("married=" + to_string(m));
  for (auto r : {Region::northeast, Region::midwest, Region::south,
                 Region::west, Region::other})
    names.push_back("region=" + to_string(r));
  for (auto r : {Race::white, Race::black, Race::hispanic, Race::other})
    names.push_back("race=" + to_string(r));
  return names;
}

Vector encode_statics(const StaticFeatures& s) {
  Vector v;
  v.reserve(26);
  v.push_back(s.age_at_entry);
  v.push_back(static_cast<double>(s.poverty_category));
  v.push_back(s.poverty_threshold);
  v.push_back(s.education_years);
  v.push_back(s.wealth);
  v.push_back(s.income);
  auto one_hot = [&v](int value, int levels) {
    for (int i = 0; i < levels; ++i) v.push_back(i == value ? 1.0 : 0.0);
  };
  one_hot(static_cast<int>(s.gender), 2);
  one_hot(static_cast<int>(s.smoke), 3);
  one_hot(static_cast<int>(s.drink), 3);
  one_hot(static_cast<int>(s.married), 3);
  one_hot(static_cast<int>(s.region), 5);
  one_hot(static_cast<int>(s.race), 4);
  return v;
}

std::pair<NormalizedCohort, NormalizationStats> normalize(
    const Cohort& cohort, const std::optional<NormalizationStats>& stats_in) {
  if (cohort.trajectories.empty()) {
    throw InvalidInputError("normalize: empty cohort");
  }
  validate_cohort(cohort);
  const std::size_t n_waves = cohort.trajectories.front().waves.size();
  for (const auto& t : cohort.trajectories) {
    if (t.waves.size() != n_waves) {
      throw ValidationError(
          "participant " + t.participant_id + " has " +
          std::to_string(t.waves.size()) + " waves; this run requires " +
          std::to_string(n_waves) + " (unequal lengths are rejected)");
    }
  }

  const auto static_names = static_feature_names();
  std::vector<std::string> feature_names = {"adl", "cog"};
  feature_names.insert(feature_names.end(), static_names.begin(),
                       static_names.end());

  NormalizationStats stats;
  if (stats_in) {
    stats = *stats_in;
    for (const auto& name : feature_names) {
      if (!stats.has(name)) {
        throw InvalidInputError("supplied stats missing feature '" + name +
                                "'");
      }
    }
  } else {
    // accumulate mean/sd per feature: dynamics pooled over waves, statics
    // one observation per participant; population sigma, so a {2,4} toy
    // normalizes to {-1,+1}
    std::vector<double> sum(feature_names.size(), 0.0);
    std::vector<double> sumsq(feature_names.size(), 0.0);
    std::vector<double> count(feature_names.size(), 0.0);
    auto add = [&](std::size_t idx, double x) {
      sum[idx] += x;
      sumsq[idx] += x * x;
      count[idx] += 1.0;
    };
    for (const auto& t : cohort.trajectories) {
      for (const auto& w : t.waves) {
        add(0, static_cast<double>(w.adl));
        add(1, static_cast<double>(w.cog));
      }
      Vector enc = encode_statics(t.statics);
      for (std::size_t j = 0; j < enc.size(); ++j) add(2 + j, enc[j]);
    }
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      FeatureStat f;
      f.name = feature_names[j];
      f.mean = sum[j] / count[j];
      double var = sumsq[j] / count[j] - f.mean * f.mean;
      if (var < 0.0) var = 0.0;
      double sd = std::sqrt(var);
      if (sd < 1e-12) {
        f.sd = 1.0;
        f.constant = true;
      } else {
        f.sd = sd;
      }
      stats.features.push_back(std::move(f));
    }
  }

  NormalizedCohort out;
  out.dyn_names = {"adl", "cog"};
  out.static_names = static_names;
  out.stats = stats;
  out.n_waves = n_waves;

  const auto& adl_stat = stats.at("adl");
  const auto& cog_stat = stats.at("cog");
  for (const auto& t : cohort.trajectories) {
    NormalizedTrajectory nt;
    nt.participant_id = t.participant_id;
    nt.planted_cluster = t.planted_cluster;
    nt.dyn = Matrix(n_waves, 2);
    for (std::size_t i = 0; i < n_waves; ++i) {
      nt.dyn(i, 0) = (t.waves[i].adl - adl_stat.mean) / adl_stat.sd;
      nt.dyn(i, 1) = (t.waves[i].cog - cog_stat.mean) / cog_stat.sd;
    }
    Vector enc = encode_statics(t.statics);
    nt.statics.resize(enc.size());
    for (std::size_t j = 0; j < enc.size(); ++j) {
      const auto& f = stats.at(static_names[j]);
      nt.statics[j] = (enc[j] - f.mean) / f.sd;
    }
    nt.raw_scores_last_wave = {static_cast<double>(t.waves.back().adl),
                               static_cast<double>(t.waves.back().cog)};
    out.trajectories.push_back(std::move(nt));
  }
  return {std::move(out), std::move(stats)};
}

// ---------------------------------------------------------------------------
// Split and windowing
// ---------------------------------------------------------------------------

std::pair<Cohort, Cohort> split(const Cohort& cohort, double test_fraction,
                                SeededRng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidInputError("split: test_fraction must be in (0,1)");
  }
  const std::size_t n = cohort.trajectories.size();
  if (n < 2) throw InvalidInputError("split: need at least 2 trajectories");

  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  Cohort train, test;
  train.schema_version = cohort.schema_version;
  test.schema_version = cohort.schema_version;
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? test : train).trajectories.push_back(cohort.trajectories[i]);
  }
  return {std::move(train), std::move(test)};
}

WindowedTrajectory window(const NormalizedTrajectory& traj) {
  const std::size_t t_len = traj.dyn.rows;
  if (t_len < 2) {
    throw InvalidInputError("window: trajectory needs at least 2 waves");
  }
  WindowedTrajectory w;
  w.inputs.reserve(t_len - 1);
  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    w.inputs.push_back({traj.dyn(t, 0), traj.dyn(t, 1)});
  }
  w.statics = traj.statics;
  w.target = {traj.dyn(t_len - 1, 0), traj.dyn(t_len - 1, 1)};
  return w;
}

TrainSet make_train_set(const NormalizedCohort& cohort, bool multi,
                        bool use_features, PredictionTarget target) {
  if (multi && target != PredictionTarget::both) {
    throw InvalidInputError(
        "make_train_set: multi=true implies target=both");
  }
  if (!multi && target == PredictionTarget::both) {
    throw InvalidInputError(
        "make_train_set: multi=false needs a single target");
  }

  TrainSet set;
  set.dyn_dim = multi ? 2 : 1;
  set.static_dim = use_features ? cohort.static_names.size() : 0;
  set.out_dim = multi ? 2 : 1;
  if (multi) {
    set.target_names = {"adl", "cog"};
  } else {
    set.target_names = {target == PredictionTarget::adl ? "adl" : "cog"};
  }
  const std::size_t col = target == PredictionTarget::cog ? 1 : 0;

  for (const auto& traj : cohort.trajectories) {
    WindowedTrajectory w = window(traj);
    TrainSample sample;
    sample.participant_id = traj.participant_id;
    sample.planted_cluster = traj.planted_cluster;
    for (const auto& x : w.inputs) {
      sample.inputs.push_back(multi ? x : Vector{x[col]});
    }
    if (use_features) sample.statics = w.statics;
    if (multi) {
      sample.target = w.target;
      sample.raw_target = traj.raw_scores_last_wave;
    } else {
      sample.target = {w.target[col]};
      sample.raw_target = {traj.raw_scores_last_wave[col]};
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

}  // namespace degen
