#include "riskforge/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <limits>
#include <numeric>
#include <set>
#include <variant>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"
#include "riskforge/evaluate.hpp"
#include "riskforge/harmonize.hpp"
#include "riskforge/rng.hpp"
#include "riskforge/text.hpp"

namespace riskforge::synth {

namespace {

constexpr std::int64_t kSubjectBase = 10000001;
constexpr std::int64_t kHadmBase = 20000001;
constexpr std::int64_t kStayBase = 30000001;
constexpr std::int64_t kSecondStayBase = 35000001;
constexpr std::int64_t kOtherSubjectBase = 18000001;
constexpr std::int64_t kOtherHadmBase = 28000001;
constexpr std::int64_t kOtherStayBase = 38000001;
constexpr std::int64_t kMinorSubjectBase = 19000001;
constexpr std::int64_t kMinorHadmBase = 29000001;
constexpr std::int64_t kMinorStayBase = 39000001;
constexpr double kImplausible = 9999.0;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int randint(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

bool chance(Rng& rng, double p) { return uniform01(rng) < p; }

double round_to(double v, double step) { return std::round(v / step) * step; }

double minutes(double m) { return m / 60.0; }

const VariableSpec* find_spec(const std::string& name) {
  for (const auto& s : variable_specs()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

// Population mean and sd of the derived mean arterial pressure.
std::pair<double, double> mbp_moments() {
  const VariableSpec& s = *find_spec("SBP");
  const VariableSpec& d = *find_spec("DBP");
  const double mean = (s.mean + 2.0 * d.mean) / 3.0;
  const double var = (s.sd * s.sd + 4.0 * d.sd * d.sd + 4.0 * d.partner_corr * s.sd * d.sd) / 9.0 + 4.0;
  return {mean, std::sqrt(var)};
}

struct Patient {
  std::vector<double> value;  // natural units, spec order plus MBP at the end
  std::vector<bool> masked;
  double text = 0.0;
  double eta = 0.0;
  double y = 0.0;
};

std::vector<std::string> latent_names() {
  std::vector<std::string> names;
  for (const auto& s : variable_specs()) names.push_back(s.name);
  names.emplace_back("MBP");
  return names;
}

double solve_intercept(const std::vector<double>& lin, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(ErrorCode::InfeasiblePrevalence, "target prevalence must lie in (0, 1)");
  }
  auto mean_p = [&](double b) {
    double s = 0.0;
    for (double v : lin) s += sigmoid(b + v);
    return s / static_cast<double>(lin.size());
  };
  double lo = -40.0, hi = 40.0;
  if (mean_p(lo) > target || mean_p(hi) < target) {
    throw Error(ErrorCode::InfeasiblePrevalence, "no intercept reaches the target prevalence");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_p(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---- pseudo-notes --------------------------------------------------------

struct Lexicon {
  std::vector<std::vector<std::string>> topics;
  std::vector<std::string> background;
};

const Lexicon& lexicon() {
  static const Lexicon lex = [] {
    Rng rng(0x5eedULL);
    const std::string consonants = "bcdfghjklmnprstvz";
    const std::string vowels = "aeiou";
    std::set<std::string> seen;
    auto word = [&] {
      while (true) {
        std::string w;
        const int syllables = randint(rng, 2, 3);
        for (int s = 0; s < syllables; ++s) {
          w.push_back(consonants[static_cast<std::size_t>(randint(rng, 0, 16))]);
          w.push_back(vowels[static_cast<std::size_t>(randint(rng, 0, 4))]);
        }
        if (chance(rng, 0.3)) w.push_back(consonants[static_cast<std::size_t>(randint(rng, 0, 16))]);
        if (!text::stopwords().count(w) && seen.insert(w).second) return w;
      }
    };
    Lexicon l;
    l.topics.resize(8);
    for (auto& t : l.topics) {
      for (int i = 0; i < 45; ++i) t.push_back(word());
    }
    for (int i = 0; i < 60; ++i) l.background.push_back(word());
    return l;
  }();
  return lex;
}

std::size_t zipf_pick(Rng& rng, std::size_t n) {
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) total += 1.0 / std::pow(static_cast<double>(r + 1), 0.8);
  double u = uniform01(rng) * total;
  for (std::size_t r = 0; r < n; ++r) {
    u -= 1.0 / std::pow(static_cast<double>(r + 1), 0.8);
    if (u <= 0.0) return r;
  }
  return n - 1;
}

std::string pseudo_note(Rng& rng, double t, int length, bool discharge) {
  const Lexicon& lex = lexicon();
  std::vector<double> theta(lex.topics.size());
  double total = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double a = 0.7 * normal(rng);
    if (k == 0) a = 1.5 * t;
    if (k == 1) a = -1.5 * t;
    theta[k] = std::exp(a);
    total += theta[k];
  }
  std::string out = discharge ? "Admission Date: ___ Discharge Date: ___\nService: MEDICINE\n"
                              : "EXAMINATION: CHEST (PORTABLE AP)\nINDICATION: ___ year old with arrest.\n";
  for (int i = 0; i < length; ++i) {
    if (uniform01(rng) < 0.35) {
      out += lex.background[zipf_pick(rng, lex.background.size())];
    } else {
      double u = uniform01(rng) * total;
      std::size_t k = 0;
      while (k + 1 < theta.size() && (u -= theta[k]) > 0.0) ++k;
      out += lex.topics[k][zipf_pick(rng, lex.topics[k].size())];
    }
    if (i % 13 == 12) {
      out += chance(rng, 0.3) ? ", no " : (chance(rng, 0.2) ? " 2. " : ". ");
    } else {
      out += ' ';
    }
  }
  out += discharge ? "\nFollowup Instructions: ___" : "\nIMPRESSION: as above.";
  return out;
}

Eigen::MatrixXd orthonormal_columns(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// ---- table builders ------------------------------------------------------

struct Builder {
  std::vector<std::string> names;
  std::vector<std::vector<double>> nums;
  std::vector<std::vector<std::string>> texts;
  std::vector<bool> is_text;
  std::vector<std::vector<std::uint8_t>> missing;

  explicit Builder(std::vector<std::pair<std::string, bool>> cols) {
    for (auto& [n, t] : cols) {
      names.push_back(n);
      is_text.push_back(t);
    }
    nums.resize(names.size());
    texts.resize(names.size());
    missing.resize(names.size());
  }
  // Values as strings or numbers; NaN numbers and empty strings become masked cells.
  void row(std::initializer_list<std::variant<double, std::string>> cells) {
    std::size_t j = 0;
    for (const auto& c : cells) {
      if (is_text[j]) {
        texts[j].push_back(std::get<std::string>(c));
        missing[j].push_back(texts[j].back().empty() ? 1 : 0);
      } else {
        const double v = std::get<double>(c);
        nums[j].push_back(v);
        missing[j].push_back(std::isnan(v) ? 1 : 0);
      }
      ++j;
    }
  }
  PatientFrame build() {
    std::vector<Column> cols;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (is_text[j]) {
        cols.push_back(Column::categorical(names[j], std::move(texts[j]), std::move(missing[j])));
      } else {
        cols.push_back(Column::numeric(names[j], std::move(nums[j]), std::move(missing[j])));
      }
    }
    return PatientFrame(std::move(cols));
  }
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t item_for(const harmonize::VariableCatalog& cat, const std::string& var, Rng& rng,
                      harmonize::TempUnit* unit = nullptr) {
  std::vector<const harmonize::ItemMapping*> items;
  for (const auto& m : cat.items) {
    if (m.variable == var) items.push_back(&m);
  }
  const auto* pick = items.size() == 1 ? items[0] : items[static_cast<std::size_t>(randint(rng, 0, static_cast<int>(items.size()) - 1))];
  if (unit != nullptr) *unit = pick->unit;
  return pick->itemid;
}

struct Admission {
  std::int64_t subject, hadm, stay;
  double admit, intime, disch;
};

}  // namespace

const std::vector<VariableSpec>& variable_specs() {
  static const std::vector<VariableSpec> specs{
      {"anchor_age", 66.0, 14.0, 0.0, "", 0.0},
      {"HR", 92.0, 18.0, 0.35, "", 0.0},
      {"SBP", 112.0, 20.0, -0.3, "", 0.0},
      {"DBP", 60.0, 12.0, 0.0, "SBP", 0.6},
      {"RR", 20.0, 5.0, 0.3, "", 0.0},
      {"BT", 98.1, 1.4, -0.2, "", 0.0},
      {"SpO2", 95.5, 2.5, -0.3, "", 0.0},
      {"Hemoglobin", 10.8, 2.0, -0.2, "", 0.0},
      {"Hematocrit", 32.0, 6.0, 0.0, "Hemoglobin", 0.97},
      {"Platelet", 210.0, 80.0, -0.1, "", 0.0},
      {"WBC", 13.0, 5.0, 0.2, "", 0.0},
      {"PT", 16.0, 4.0, 0.2, "", 0.0},
      {"INR", 1.5, 0.4, 0.0, "PT", 0.98},
      {"Creatinine", 1.6, 0.5, 0.3, "", 0.0},
      {"BUN", 32.0, 12.0, 0.35, "", 0.0},
      {"Glucose", 170.0, 50.0, 0.2, "", 0.0},
      {"Potassium", 4.4, 0.6, 0.1, "", 0.0},
      {"Sodium", 138.0, 5.0, 0.0, "", 0.0},
      {"Calcium", 8.4, 0.7, -0.1, "", 0.0},
      {"Chloride", 104.0, 6.0, 0.0, "", 0.0},
      {"AnionGap", 16.0, 4.0, 0.3, "", 0.0},
      {"Bicarbonate", 20.0, 4.5, -0.3, "", 0.0},
      {"Lactate", 4.0, 1.3, 0.45, "", 0.0},
      {"pH", 7.28, 0.08, -0.35, "", 0.0},
      {"GCS_Total", 10.0, 3.0, -0.4, "", 0.0},
  };
  return specs;
}

std::map<std::string, double> default_beta() {
  return {{"Lactate", 0.8},    {"HR", 0.45},    {"anchor_age", 0.5}, {"BUN", 0.4},
          {"GCS_Total", -0.7}, {"SpO2", -0.35}, {"BT", -0.3},        {"Hemoglobin", -0.3}};
}

void SynthConfig::validate() const {
  if (n_patients < 10) throw Error(ErrorCode::ConfigInvalid, "synth.n_patients: must be >= 10");
  auto unit = [](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::ConfigInvalid, std::string(field) + ": must lie in [0, 1]");
  };
  unit(missing_rate, "synth.missing_rate");
  unit(discharge_coverage, "synth.discharge_coverage");
  unit(radiology_coverage, "synth.radiology_coverage");
  for (const auto& [k, v] : missing_rates) unit(v, ("synth.missing_rates." + k).c_str());
  for (const auto& [k, v] : true_beta) {
    if (k != "MBP" && find_spec(k) == nullptr) {
      throw Error(ErrorCode::ConfigInvalid, "synth.beta." + k + ": unknown variable");
    }
  }
  if (embedding_dim < 12) throw Error(ErrorCode::ConfigInvalid, "synth.embedding_dim: must be >= 12");
}

double SynthConfig::missing_rate_for(const std::string& variable) const {
  auto it = missing_rates.find(variable);
  return it == missing_rates.end() ? missing_rate : it->second;
}

namespace {

std::vector<Patient> draw_patients(const SynthConfig& cfg, GroundTruth& truth) {
  const auto& specs = variable_specs();
  const auto names = latent_names();
  const auto [mbp_mean, mbp_sd] = mbp_moments();
  Rng rng(derive_seed(cfg.seed, "synth.latent"));
  Rng mask_rng(derive_seed(cfg.seed, "synth.mask"));
  std::vector<Patient> pts(cfg.n_patients);
  std::vector<double> lin(cfg.n_patients);
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    Patient& p = pts[i];
    const double severity = normal(rng);
    std::vector<double> z(specs.size());
    for (std::size_t v = 0; v < specs.size(); ++v) {
      const auto& s = specs[v];
      const double e = normal(rng);
      if (!s.partner.empty()) {
        const auto partner = static_cast<std::size_t>(find_spec(s.partner) - specs.data());
        z[v] = s.partner_corr * z[partner] + std::sqrt(1.0 - s.partner_corr * s.partner_corr) * e;
      } else {
        const double a = s.severity_loading;
        z[v] = a * severity + std::sqrt(1.0 - a * a) * e;
      }
      p.value.push_back(s.mean + s.sd * z[v]);
    }
    const double sbp = p.value[2], dbp = p.value[3];
    p.value.push_back((sbp + 2.0 * dbp) / 3.0 + 2.0 * normal(rng));
    p.text = normal(rng);
    double l = cfg.text_signal_strength * p.text;
    for (std::size_t v = 0; v < names.size(); ++v) {
      auto it = cfg.true_beta.find(names[v]);
      if (it == cfg.true_beta.end()) continue;
      const double mean = v < specs.size() ? specs[v].mean : mbp_mean;
      const double sd = v < specs.size() ? specs[v].sd : mbp_sd;
      l += it->second * (p.value[v] - mean) / sd;
    }
    lin[i] = l;
    for (std::size_t v = 0; v < names.size(); ++v) {
      p.masked.push_back(names[v] != "anchor_age" && chance(mask_rng, cfg.missing_rate_for(names[v])));
    }
  }
  truth.intercept = solve_intercept(lin, cfg.prevalence_target);
  Rng out_rng(derive_seed(cfg.seed, "synth.outcome"));
  std::vector<double> eta, ys;
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    pts[i].eta = truth.intercept + lin[i];
    pts[i].y = uniform01(out_rng) < sigmoid(pts[i].eta) ? 1.0 : 0.0;
    eta.push_back(pts[i].eta);
    ys.push_back(pts[i].y);
  }
  for (const auto& n : names) {
    auto it = cfg.true_beta.find(n);
    const double b = it == cfg.true_beta.end() ? 0.0 : it->second;
    truth.beta[n] = b;
    if (b != 0.0) truth.informative.push_back(n);
  }
  truth.text_signal_strength = cfg.text_signal_strength;
  truth.prevalence = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  truth.bayes_auc = truth.prevalence > 0.0 && truth.prevalence < 1.0 ? eval::roc(eta, ys).auc : 0.5;
  return pts;
}

PatientFrame latent_frame(const std::vector<Patient>& pts) {
  const auto names = latent_names();
  std::vector<Column> cols;
  std::vector<double> subj, hadm, stay, text, eta, y;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto k = static_cast<double>(i);
    subj.push_back(static_cast<double>(kSubjectBase) + k);
    hadm.push_back(static_cast<double>(kHadmBase) + k);
    stay.push_back(static_cast<double>(kStayBase) + k);
    text.push_back(pts[i].text);
    eta.push_back(pts[i].eta);
    y.push_back(pts[i].y);
  }
  cols.push_back(Column::numeric("subject_id", std::move(subj)));
  cols.push_back(Column::numeric("hadm_id", std::move(hadm)));
  cols.push_back(Column::numeric("stay_id", std::move(stay)));
  for (std::size_t v = 0; v < names.size(); ++v) {
    std::vector<double> vals;
    std::vector<std::uint8_t> miss;
    for (const auto& p : pts) {
      vals.push_back(p.masked[v] ? kNaN : p.value[v]);
      miss.push_back(p.masked[v] ? 1 : 0);
    }
    cols.push_back(Column::numeric(names[v], std::move(vals), std::move(miss)));
  }
  cols.push_back(Column::numeric("text_latent", std::move(text)));
  cols.push_back(Column::numeric("eta", std::move(eta)));
  cols.push_back(Column::numeric("in_hospital_death", std::move(y)));
  return PatientFrame(std::move(cols));
}

std::string temp_uom(harmonize::TempUnit u) { return u == harmonize::TempUnit::Celsius ? "°C" : "°F"; }

}  // namespace

SynthResult generate_latent(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult r;
  const auto pts = draw_patients(cfg, r.truth);
  r.latent = latent_frame(pts);
  return r;
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult r;
  const auto pts = draw_patients(cfg, r.truth);
  r.latent = latent_frame(pts);
  const auto names = latent_names();
  const auto& specs = variable_specs();
  auto spec_sd = [&](std::size_t v) { return v < specs.size() ? specs[v].sd : mbp_moments().second; };

  Rng rng(derive_seed(cfg.seed, "synth.events"));
  const double epoch = *parse_timestamp("2150-01-01");
  const std::size_t n = cfg.n_patients;
  const std::size_t n_other = std::max<std::size_t>(1, n / 10);
  const std::size_t n_minor = std::max<std::size_t>(1, n / 50);

  Builder patients({{"subject_id", false}, {"gender", true}, {"anchor_age", false}});
  Builder admissions({{"subject_id", false}, {"hadm_id", false}, {"admittime", true}, {"dischtime", true},
                      {"deathtime", true}});
  Builder diagnoses({{"subject_id", false}, {"hadm_id", false}, {"seq_num", false}, {"icd_code", true},
                     {"icd_version", false}});
  Builder icustays({{"subject_id", false}, {"hadm_id", false}, {"stay_id", false}, {"intime", true},
                    {"outtime", true}});
  Builder chart({{"subject_id", false}, {"hadm_id", false}, {"stay_id", false}, {"charttime", true},
                 {"itemid", false}, {"valuenum", false}, {"valueuom", true}});
  Builder labs({{"subject_id", false}, {"hadm_id", false}, {"charttime", true}, {"itemid", false},
                {"valuenum", false}, {"valueuom", true}});
  Builder procs({{"subject_id", false}, {"hadm_id", false}, {"stay_id", false}, {"starttime", true},
                 {"itemid", false}});
  Builder inputs({{"subject_id", false}, {"hadm_id", false}, {"stay_id", false}, {"starttime", true},
                  {"itemid", false}});

  auto ts = [](double h) { return format_timestamp(h); };
  auto make_admission = [&](std::int64_t subject, std::int64_t hadm, std::int64_t stay) {
    Admission a{subject, hadm, stay, 0, 0, 0};
    a.admit = epoch + std::round(uniform01(rng) * 365 * 24 * 60) / 60.0;
    a.intime = a.admit + minutes(randint(rng, 0, 12 * 60));
    a.disch = a.intime + minutes(randint(rng, 48 * 60, 400 * 60));
    return a;
  };
  auto add_stay = [&](const Admission& a, double in, double out) {
    icustays.row({double(a.subject), double(a.hadm), double(a.stay), ts(in), ts(out)});
  };
  auto dx = [&](const Admission& a, int seq, const std::string& code) {
    const bool icd10 = std::isalpha(static_cast<unsigned char>(code[0])) != 0;
    diagnoses.row({double(a.subject), double(a.hadm), double(seq), code, icd10 ? 10.0 : 9.0});
  };

  const harmonize::VariableCatalog vitals = harmonize::default_vital_catalog();
  const harmonize::VariableCatalog labcat = harmonize::default_lab_catalog();
  const harmonize::VariableCatalog gcscat = harmonize::default_gcs_catalog();
  const std::set<std::string> vital_names = [&] {
    auto v = vitals.variables();
    return std::set<std::string>(v.begin(), v.end());
  }();
  const std::set<std::string> lab_names = [&] {
    auto v = labcat.variables();
    return std::set<std::string>(v.begin(), v.end());
  }();

  std::vector<Admission> cohort_adm;
  const char* arrest9[] = {"4275"};
  const char* arrest10[] = {"I469", "I462", "I468", "I46"};
  const std::pair<const char*, const char*> comorbid[] = {
      {"4019", "I10"}, {"4280", "I509"}, {"41071", "I214"}, {"25000", "E119"}, {"496", "J449"}};
  const double comorbid_p[] = {0.5, 0.3, 0.25, 0.3, 0.15};

  for (std::size_t i = 0; i < n; ++i) {
    const Patient& p = pts[i];
    const auto k = static_cast<std::int64_t>(i);
    Admission a = make_admission(kSubjectBase + k, kHadmBase + k, kStayBase + k);
    cohort_adm.push_back(a);
    const double age = std::clamp(std::round(p.value[0]), 18.0, 91.0);
    patients.row({double(a.subject), chance(rng, 0.6) ? std::string("M") : std::string("F"), age});
    admissions.row({double(a.subject), double(a.hadm), ts(a.admit), ts(a.disch),
                    p.y == 1.0 ? ts(a.disch) : std::string()});
    const bool icd10 = chance(rng, 0.5);
    int seq = 1;
    dx(a, seq++, icd10 ? arrest10[randint(rng, 0, 3)] : arrest9[0]);
    if (chance(rng, 0.1)) dx(a, seq++, icd10 ? "I469" : "4275");  // duplicate arrest code
    for (std::size_t c = 0; c < 5; ++c) {
      if (chance(rng, comorbid_p[c])) dx(a, seq++, icd10 ? comorbid[c].second : comorbid[c].first);
    }
    dx(a, seq++, icd10 ? "N179" : "5849");
    add_stay(a, a.intime, a.intime + minutes(randint(rng, 30 * 60, 200 * 60)));
    if (chance(rng, 0.08)) {
      // Later second ICU stay in the same admission; its events never link.
      Admission b = a;
      b.stay = kSecondStayBase + k;
      add_stay(b, a.intime + 30.0, a.intime + 60.0);
      chart.row({double(b.subject), double(b.hadm), double(b.stay), ts(a.intime + 31.0),
                 double(item_for(vitals, "HR", rng)), 150.0, std::string("bpm")});
    }

    const double noise = 0.25;
    for (std::size_t v = 0; v < names.size(); ++v) {
      const std::string& var = names[v];
      if (var == "anchor_age" || var == "GCS_Total") continue;
      const bool is_vital = vital_names.count(var) > 0;
      const bool is_lab = lab_names.count(var) > 0;
      if (!is_vital && !is_lab) continue;
      const double sd = spec_sd(v);
      const int count = p.masked[v] ? 0 : (is_vital ? randint(rng, 4, 8) : randint(rng, 1, 3));
      auto emit = [&](double when, double value) {
        harmonize::TempUnit unit = harmonize::TempUnit::Unknown;
        if (is_vital) {
          const auto item = item_for(vitals, var, rng, &unit);
          std::string uom = var == "BT" ? temp_uom(unit) : "";
          if (var == "BT" && unit == harmonize::TempUnit::Celsius && value != kImplausible) {
            value = round_to((value - 32.0) * 5.0 / 9.0, 0.1);
          }
          chart.row({double(a.subject), double(a.hadm), double(a.stay), ts(when), double(item), value, uom});
        } else {
          labs.row({double(a.subject), double(a.hadm), ts(when), double(item_for(labcat, var, rng)), value,
                    std::string()});
        }
      };
      for (int e = 0; e < count; ++e) {
        const double when = a.intime + minutes(randint(rng, 0, 24 * 60 - 1));
        double value = p.value[v] + noise * sd * normal(rng);
        if (var == "SpO2") value = std::min(value, 100.0);
        value = round_to(value, var == "pH" ? 0.001 : 0.01);
        if (chance(rng, 0.01)) value = kImplausible;
        emit(when, value);
        if (is_vital && (var == "SBP" || var == "DBP" || var == "MBP") && chance(rng, 0.2)) {
          emit(when, round_to(p.value[v] + noise * sd * normal(rng), 0.01));
        }
      }
      if (chance(rng, 0.3)) {
        // Out-of-window reading, shifted so that including it would bias the mean.
        const double when = chance(rng, 0.5) ? a.intime - minutes(randint(rng, 60, 600))
                                             : a.intime + 24.0 + minutes(randint(rng, 60, 1200));
        double value = p.value[v] + 3.0 * sd;
        if (var == "SpO2") value = std::min(value, 100.0);
        emit(when, round_to(value, var == "pH" ? 0.001 : 0.01));
      }
    }
    const std::size_t g = static_cast<std::size_t>(std::find(names.begin(), names.end(), "GCS_Total") - names.begin());
    if (!p.masked[g]) {
      const int count = randint(rng, 3, 6);
      for (int e = 0; e < count; ++e) {
        const double when = a.intime + minutes(randint(rng, 0, 24 * 60 - 1));
        const double total = std::clamp(p.value[g] + 0.7 * normal(rng), 3.0, 15.0);
        const double eye = std::clamp(std::round(total * 4.0 / 15.0 + 0.3 * normal(rng)), 1.0, 4.0);
        const double motor = std::clamp(std::round(total * 6.0 / 15.0 + 0.3 * normal(rng)), 1.0, 6.0);
        const double verbal = std::clamp(std::round(total - eye - motor), 1.0, 5.0);
        for (const auto& [var, value] : {std::pair<const char*, double>{"GCS_Eye", eye},
                                         {"GCS_Verbal", verbal},
                                         {"GCS_Motor", motor}}) {
          chart.row({double(a.subject), double(a.hadm), double(a.stay), ts(when),
                     double(item_for(gcscat, var, rng)), value, std::string()});
        }
      }
    }
    const std::pair<Builder*, std::pair<std::int64_t, double>> treat[] = {
        {&procs, {225792, 0.55}}, {&inputs, {221289, 0.35}}, {&inputs, {221662, 0.15}}};
    for (const auto& [table, item] : treat) {
      if (chance(rng, item.second)) {
        table->row({double(a.subject), double(a.hadm), double(a.stay),
                    ts(a.intime + minutes(randint(rng, 0, 24 * 60 - 1))), double(item.first)});
      } else if (chance(rng, 0.1)) {
        table->row({double(a.subject), double(a.hadm), double(a.stay), ts(a.intime + 30.0), double(item.first)});
      }
    }
  }

  // Admissions outside the cohort: no arrest code, or under-age patients.
  std::vector<Admission> other_adm;
  for (std::size_t j = 0; j < n_other + n_minor; ++j) {
    const bool minor = j >= n_other;
    const auto k = static_cast<std::int64_t>(minor ? j - n_other : j);
    Admission a = minor ? make_admission(kMinorSubjectBase + k, kMinorHadmBase + k, kMinorStayBase + k)
                        : make_admission(kOtherSubjectBase + k, kOtherHadmBase + k, kOtherStayBase + k);
    other_adm.push_back(a);
    patients.row({double(a.subject), std::string("F"), minor ? double(randint(rng, 16, 17)) : double(randint(rng, 30, 80))});
    admissions.row({double(a.subject), double(a.hadm), ts(a.admit), ts(a.disch), std::string()});
    dx(a, 1, minor ? "I469" : "I10");
    add_stay(a, a.intime, a.intime + 40.0);
    chart.row({double(a.subject), double(a.hadm), double(a.stay), ts(a.intime + 1.0),
               double(item_for(vitals, "HR", rng)), 80.0, std::string("bpm")});
  }

  // Notes and embeddings.
  Rng note_rng(derive_seed(cfg.seed, "synth.notes"));
  Rng emb_rng(derive_seed(cfg.seed, "synth.embeddings"));
  const int dim = cfg.embedding_dim;
  constexpr int kRank = 10;
  const Eigen::MatrixXd basis = orthonormal_columns(emb_rng, dim, kRank);
  Eigen::VectorXd offset(dim);
  for (int d = 0; d < dim; ++d) offset[d] = 0.3 * normal(emb_rng);
  auto embed = [&](double t, double loading) {
    Eigen::VectorXd f(kRank);
    for (int k = 0; k < kRank; ++k) {
      double u = normal(emb_rng);
      if (k == 2) u = loading * t + std::sqrt(1.0 - loading * loading) * u;
      f[k] = 4.0 * std::pow(0.8, k) * u;
    }
    Eigen::VectorXd e = offset + basis * f;
    for (int d = 0; d < dim; ++d) e[d] = round_to(e[d] + 0.05 * normal(emb_rng), 1e-5);
    return e;
  };

  Builder discharge({{"note_id", true}, {"subject_id", false}, {"hadm_id", false}, {"charttime", true}, {"text", true}});
  Builder radiology({{"note_id", true}, {"subject_id", false}, {"hadm_id", false}, {"charttime", true}, {"text", true}});
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> demb, remb;
  auto note_id = [](std::int64_t subject, const char* kind, int k) {
    return std::to_string(subject) + "-" + kind + "-" + std::to_string(k);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Admission& a = cohort_adm[i];
    const double t = pts[i].text;
    if (chance(note_rng, cfg.discharge_coverage)) {
      discharge.row({note_id(a.subject, "DS", 1), double(a.subject), double(a.hadm), ts(a.disch),
                     pseudo_note(note_rng, t, randint(note_rng, 120, 300), true)});
      demb.emplace_back(a.hadm, embed(t, 0.9));
    }
    if (chance(note_rng, cfg.radiology_coverage)) {
      const int count = randint(note_rng, 1, 3);
      double when = a.intime + minutes(randint(note_rng, -12 * 60, 48 * 60));
      for (int c = 0; c < count; ++c) {
        radiology.row({note_id(a.subject, "RR", c + 1), double(a.subject), double(a.hadm), ts(when),
                       pseudo_note(note_rng, t, randint(note_rng, 30, 90), false)});
        if (c == 0) remb.emplace_back(a.hadm, embed(t, 0.75));
        when += minutes(randint(note_rng, 60, 48 * 60));
      }
    }
  }
  for (const Admission& a : other_adm) {
    if (chance(note_rng, 0.5)) {
      discharge.row({note_id(a.subject, "DS", 1), double(a.subject), double(a.hadm), ts(a.disch),
                     pseudo_note(note_rng, 0.0, randint(note_rng, 120, 300), true)});
    }
  }
  auto emb_frame = [&](const std::vector<std::pair<std::int64_t, Eigen::VectorXd>>& rows) {
    std::vector<Column> cols;
    std::vector<double> ids;
    for (const auto& [h, e] : rows) ids.push_back(static_cast<double>(h));
    cols.push_back(Column::numeric("hadm_id", std::move(ids)));
    for (int d = 0; d < dim; ++d) {
      std::vector<double> v;
      for (const auto& [h, e] : rows) v.push_back(e[d]);
      cols.push_back(Column::numeric("e" + std::to_string(d + 1), std::move(v)));
    }
    return PatientFrame(std::move(cols));
  };

  r.tables.patients = patients.build();
  r.tables.admissions = admissions.build();
  r.tables.diagnoses = diagnoses.build();
  r.tables.icustays = icustays.build();
  r.tables.chartevents = chart.build();
  r.tables.labevents = labs.build();
  r.tables.procedureevents = procs.build();
  r.tables.inputevents = inputs.build();
  r.tables.discharge = discharge.build();
  r.tables.radiology = radiology.build();
  r.tables.discharge_emb = emb_frame(demb);
  r.tables.radiology_emb = emb_frame(remb);
  return r;
}

PatientFrame ground_truth_frame(const GroundTruth& truth) {
  const auto& specs = variable_specs();
  const auto [mbp_mean, mbp_sd] = mbp_moments();
  std::vector<std::string> names;
  std::vector<double> beta, mean, sd, informative;
  std::vector<std::uint8_t> moments_missing;
  auto add = [&](const std::string& n, double b, double m, double s, bool moments, double inf) {
    names.push_back(n);
    beta.push_back(b);
    mean.push_back(moments ? m : kNaN);
    sd.push_back(moments ? s : kNaN);
    moments_missing.push_back(moments ? 0 : 1);
    informative.push_back(inf);
  };
  add("(Intercept)", truth.intercept, 0, 0, false, 0);
  for (const auto& s : specs) {
    const double b = truth.beta.count(s.name) ? truth.beta.at(s.name) : 0.0;
    add(s.name, b, s.mean, s.sd, true, b != 0.0 ? 1.0 : 0.0);
  }
  const double bm = truth.beta.count("MBP") ? truth.beta.at("MBP") : 0.0;
  add("MBP", bm, mbp_mean, mbp_sd, true, bm != 0.0 ? 1.0 : 0.0);
  add("text_latent", truth.text_signal_strength, 0.0, 1.0, true, truth.text_signal_strength != 0.0 ? 1.0 : 0.0);
  add("bayes_auc", truth.bayes_auc, 0, 0, false, 0);
  add("prevalence", truth.prevalence, 0, 0, false, 0);
  auto mm = moments_missing;
  return PatientFrame({Column::categorical("name", std::move(names)), Column::numeric("beta", std::move(beta)),
                       Column::numeric("mean", std::move(mean), std::move(mm)),
                       Column::numeric("sd", std::move(sd), std::move(moments_missing)),
                       Column::numeric("informative", std::move(informative))});
}

void write_tables(const SynthResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SynthTables& t = result.tables;
  const std::pair<const char*, const PatientFrame*> files[] = {
      {"patients.csv", &t.patients},           {"admissions.csv", &t.admissions},
      {"diagnoses_icd.csv", &t.diagnoses},     {"icustays.csv", &t.icustays},
      {"chartevents.csv", &t.chartevents},     {"labevents.csv", &t.labevents},
      {"procedureevents.csv", &t.procedureevents}, {"inputevents.csv", &t.inputevents},
      {"discharge.csv", &t.discharge},         {"radiology.csv", &t.radiology},
      {"discharge_emb.csv", &t.discharge_emb}, {"radiology_emb.csv", &t.radiology_emb}};
  for (const auto& [name, frame] : files) write_csv(*frame, dir / name);
  write_csv(ground_truth_frame(result.truth), dir / "ground_truth.csv");
}

}  // namespace riskforge::synth
