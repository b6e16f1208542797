#include "riskforge/harmonize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "riskforge/cohort.hpp"

namespace riskforge::harmonize {

bool PlausibilityRule::admits(double value) const {
  const bool above = lower_inclusive ? value >= lower : value > lower;
  const bool below = upper_inclusive ? value <= upper : value < upper;
  return above && below;
}

void PlausibilityRule::validate() const {
  if (!(lower < upper)) {
    throw Error(ErrorCode::ConfigInvalid, "plausibility." + variable + ": lower must be < upper");
  }
}

std::vector<PlausibilityRule> default_plausibility() {
  // {variable, lower, upper, lower_inclusive, upper_inclusive, unit}
  return {
      {"HR", 20, 300, true, true, "bpm"},
      {"SBP", 40, 300, true, true, "mmHg"},
      {"DBP", 20, 200, true, true, "mmHg"},
      {"MBP", 30, 250, true, true, "mmHg"},
      {"RR", 4, 60, true, true, "insp/min"},
      {"BT", 77, 113, true, true, "degF"},
      {"SpO2", 50, 100, true, true, "%"},
      {"Hematocrit", 10, 70, true, true, "%"},
      {"Hemoglobin", 2, 25, true, true, "g/dL"},
      {"Platelet", 1, 2000, true, true, "K/uL"},
      {"WBC", 1, 50, true, true, "K/uL"},
      {"PT", 5, 150, true, true, "sec"},
      {"INR", 0.5, 20, true, true, "ratio"},
      {"Creatinine", 0, 25, false, true, "mg/dL"},
      {"BUN", 1, 300, true, true, "mg/dL"},
      {"Glucose", 0, 600, false, true, "mg/dL"},
      {"Potassium", 1.5, 10, true, true, "mEq/L"},
      {"Sodium", 100, 180, true, true, "mEq/L"},
      {"Calcium", 4, 20, true, true, "mg/dL"},
      {"Chloride", 60, 150, true, true, "mEq/L"},
      {"AnionGap", -10, 60, true, true, "mEq/L"},
      {"Bicarbonate", 2, 60, true, true, "mEq/L"},
      {"Lactate", 0, 20, false, true, "mmol/L"},
      {"pH", 6.5, 8.0, true, true, "units"},
      {"GCS_Eye", 1, 4, true, true, "points"},
      {"GCS_Verbal", 1, 5, true, true, "points"},
      {"GCS_Motor", 1, 6, true, true, "points"},
  };
}

PlausibilityResult apply_plausibility(const PatientFrame& frame,
                                      const std::vector<PlausibilityRule>& rules) {
  PlausibilityResult result{frame, {}};
  for (const auto& rule : rules) {
    rule.validate();
    Column col = result.frame.column(rule.variable);
    if (!col.is_numeric()) throw Error(ErrorCode::NonNumericColumn, rule.variable);
    std::size_t removed = 0;
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (!col.is_missing(r) && !rule.admits(col.number(r))) {
        col.set_missing(r);
        ++removed;
      }
    }
    result.frame = result.frame.with_column(std::move(col));
    result.removed.emplace_back(rule.variable, removed);
  }
  return result;
}

TempUnit parse_temp_unit(std::string_view label) {
  std::string s;
  for (char c : label) {
    if (std::isalpha(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::toupper(c)));
  }
  if (s == "C" || s == "DEGC" || s == "CELSIUS") return TempUnit::Celsius;
  if (s == "F" || s == "DEGF" || s == "FAHRENHEIT") return TempUnit::Fahrenheit;
  return TempUnit::Unknown;
}

double convert_temperature(double value, TempUnit unit) {
  if (unit == TempUnit::Unknown) unit = value < 50.0 ? TempUnit::Celsius : TempUnit::Fahrenheit;
  return unit == TempUnit::Celsius ? value * 9.0 / 5.0 + 32.0 : value;
}

double fahrenheit_to_celsius(double value) { return (value - 32.0) * 5.0 / 9.0; }

double mean_bp(double sbp, double dbp) { return (sbp + 2.0 * dbp) / 3.0; }

double gcs_total(const GcsComponents& c) {
  auto check = [](double v, double hi, const char* name) {
    if (!(v >= 1.0 && v <= hi)) {
      throw Error(ErrorCode::ComponentOutOfRange, std::string(name) + " = " + format_number(v));
    }
  };
  check(c.eye, 4.0, "eye");
  check(c.verbal, 5.0, "verbal");
  check(c.motor, 6.0, "motor");
  return c.eye + c.verbal + c.motor;
}

WindowResult window_24h(const PatientFrame& events, const PatientFrame& stays,
                        std::string_view time_column, double hours) {
  const bool by_stay = events.has("stay_id");
  const std::string link = by_stay ? "stay_id" : "hadm_id";
  const Column& stay_link = stays.column(link);
  const Column& stay_id = stays.column("stay_id");
  const Column& intime = stays.column("intime");

  std::unordered_map<std::int64_t, std::pair<double, double>> lookup;  // link -> (stay_id, intime)
  for (std::size_t r = 0; r < stays.rows(); ++r) {
    if (stay_link.is_missing(r) || intime.is_missing(r) || stay_id.is_missing(r)) continue;
    lookup.emplace(static_cast<std::int64_t>(stay_link.number(r)),
                   std::make_pair(stay_id.number(r), intime.number(r)));
  }

  const Column& ev_link = events.column(link);
  const Column& ev_time = events.column(time_column);
  WindowResult result;
  std::vector<std::size_t> keep;
  std::vector<double> stay_of;
  for (std::size_t r = 0; r < events.rows(); ++r) {
    if (ev_link.is_missing(r) || ev_time.is_missing(r)) {
      ++result.unlinked;
      continue;
    }
    auto it = lookup.find(static_cast<std::int64_t>(ev_link.number(r)));
    if (it == lookup.end()) {
      ++result.unlinked;
      continue;
    }
    const double t = ev_time.number(r);
    const double start = it->second.second;
    if (t >= start && t < start + hours) {
      keep.push_back(r);
      stay_of.push_back(it->second.first);
    } else {
      ++result.outside;
    }
  }
  result.events = events.take_rows(keep);
  if (!by_stay) result.events = result.events.with_column(Column::numeric("stay_id", std::move(stay_of)));
  return result;
}

std::vector<std::string> VariableCatalog::variables() const {
  std::vector<std::string> out;
  for (const auto& item : items) {
    if (std::find(out.begin(), out.end(), item.variable) == out.end()) out.push_back(item.variable);
  }
  return out;
}

VariableCatalog default_vital_catalog() {
  return {{
      {220045, "HR"},
      {220050, "SBP"},  // arterial
      {220179, "SBP"},  // non-invasive
      {220051, "DBP"},
      {220180, "DBP"},
      {220052, "MBP"},
      {220181, "MBP"},
      {220210, "RR"},
      {224690, "RR"},
      {223761, "BT", TempUnit::Fahrenheit},
      {223762, "BT", TempUnit::Celsius},
      {220277, "SpO2"},
  }};
}

VariableCatalog default_lab_catalog() {
  return {{
      {51221, "Hematocrit"}, {51222, "Hemoglobin"}, {51265, "Platelet"}, {51301, "WBC"},
      {51274, "PT"},         {51237, "INR"},        {50912, "Creatinine"}, {51006, "BUN"},
      {50931, "Glucose"},    {50971, "Potassium"},  {50983, "Sodium"},   {50893, "Calcium"},
      {50902, "Chloride"},   {50868, "AnionGap"},   {50882, "Bicarbonate"}, {50813, "Lactate"},
      {50820, "pH"},
  }};
}

VariableCatalog default_gcs_catalog() {
  return {{{220739, "GCS_Eye"}, {223900, "GCS_Verbal"}, {223901, "GCS_Motor"}}};
}

PatientFrame pivot_events(const PatientFrame& events, const VariableCatalog& catalog) {
  const auto variables = catalog.variables();
  std::unordered_map<std::int64_t, std::pair<std::size_t, TempUnit>> item_index;
  for (const auto& item : catalog.items) {
    auto pos = std::find(variables.begin(), variables.end(), item.variable) - variables.begin();
    item_index[item.itemid] = {static_cast<std::size_t>(pos), item.unit};
  }

  const Column& stay = events.column("stay_id");
  const Column& time = events.column("charttime");
  const Column& itemid = events.column("itemid");
  const Column& value = events.column("valuenum");
  const auto uom_idx = events.find("valueuom");
  const Column* uom = uom_idx && !events.column(*uom_idx).is_numeric() ? &events.column(*uom_idx) : nullptr;

  struct Cell {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<double, double>, std::vector<Cell>> table;
  for (std::size_t r = 0; r < events.rows(); ++r) {
    if (stay.is_missing(r) || time.is_missing(r) || itemid.is_missing(r) || value.is_missing(r)) continue;
    auto it = item_index.find(static_cast<std::int64_t>(itemid.number(r)));
    if (it == item_index.end()) continue;
    const auto [var, item_unit] = it->second;
    double v = value.number(r);
    if (variables[var] == "BT") {
      TempUnit unit = item_unit;
      if (unit == TempUnit::Unknown && uom != nullptr && !uom->is_missing(r)) {
        unit = parse_temp_unit(uom->text(r));
      }
      v = convert_temperature(v, unit);
    }
    auto& cells = table[{stay.number(r), time.number(r)}];
    if (cells.empty()) cells.resize(variables.size());
    cells[var].sum += v;
    cells[var].count += 1;
  }

  std::vector<double> stays, times;
  std::vector<Column> value_cols;
  for (const auto& name : variables) value_cols.push_back(Column::missing_numeric(name, table.size()));
  std::size_t row = 0;
  for (const auto& [key, cells] : table) {
    stays.push_back(key.first);
    times.push_back(key.second);
    for (std::size_t v = 0; v < cells.size(); ++v) {
      if (cells[v].count > 0) value_cols[v].set_number(row, cells[v].sum / static_cast<double>(cells[v].count));
    }
    ++row;
  }
  std::vector<Column> cols;
  cols.push_back(Column::numeric("stay_id", std::move(stays)));
  cols.push_back(Column::numeric("charttime", std::move(times)));
  for (auto& c : value_cols) cols.push_back(std::move(c));
  return PatientFrame(std::move(cols));
}

PatientFrame derive_mbp(const PatientFrame& wide) {
  if (!wide.has("MBP") || !wide.has("SBP") || !wide.has("DBP")) return wide;
  Column mbp = wide.column("MBP");
  const Column& sbp = wide.column("SBP");
  const Column& dbp = wide.column("DBP");
  for (std::size_t r = 0; r < wide.rows(); ++r) {
    if (mbp.is_missing(r) && !sbp.is_missing(r) && !dbp.is_missing(r)) {
      mbp.set_number(r, mean_bp(sbp.number(r), dbp.number(r)));
    }
  }
  return wide.with_column(std::move(mbp));
}

FlagConfig default_flags() {
  FlagConfig f;
  f.comorbidities = {
      {"hypertension", {"401*", "I10*"}, {}},
      {"heart_failure", {"428*", "I50*"}, {}},
      {"myocardial_infarction", {"410*", "I21*", "I22*"}, {}},
      {"diabetes", {"250*", "E10*", "E11*"}, {}},
      {"copd", {"491*", "492*", "496*", "J44*"}, {}},
  };
  f.treatments = {
      {"received_ventilation", {}, {225792}},
      {"epinephrine", {}, {221289}},
      {"dopamine", {}, {221662}},
  };
  return f;
}

PatientFrame binary_flags(const PatientFrame& cohort, const PatientFrame& diagnoses,
                          const PatientFrame& treatments, const FlagConfig& flags) {
  const Column& stay = cohort.column("stay_id");
  const Column& hadm = cohort.column("hadm_id");
  const std::size_t n = cohort.rows();

  std::unordered_map<std::int64_t, std::vector<std::string>> codes_by_hadm;
  if (diagnoses.rows() > 0) {
    const Column& dh = diagnoses.column("hadm_id");
    const Column& dc = diagnoses.column("icd_code");
    for (std::size_t r = 0; r < diagnoses.rows(); ++r) {
      if (dh.is_missing(r) || dc.is_missing(r)) continue;
      codes_by_hadm[static_cast<std::int64_t>(dh.number(r))].push_back(
          dc.is_numeric() ? format_number(dc.number(r)) : dc.text(r));
    }
  }
  std::unordered_map<std::int64_t, std::set<std::int64_t>> items_by_stay;
  if (treatments.rows() > 0) {
    const Column& ts = treatments.column("stay_id");
    const Column& ti = treatments.column("itemid");
    for (std::size_t r = 0; r < treatments.rows(); ++r) {
      if (ts.is_missing(r) || ti.is_missing(r)) continue;
      items_by_stay[static_cast<std::int64_t>(ts.number(r))].insert(
          static_cast<std::int64_t>(ti.number(r)));
    }
  }

  std::vector<Column> cols;
  cols.push_back(stay.renamed("stay_id"));
  for (const auto& def : flags.comorbidities) {
    std::vector<double> v(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      if (hadm.is_missing(r)) continue;
      auto it = codes_by_hadm.find(static_cast<std::int64_t>(hadm.number(r)));
      if (it == codes_by_hadm.end()) continue;
      for (const auto& code : it->second) {
        if (std::any_of(def.icd_codes.begin(), def.icd_codes.end(),
                        [&](const std::string& p) { return cohort::code_matches(code, p); })) {
          v[r] = 1.0;
          break;
        }
      }
    }
    cols.push_back(Column::numeric(def.name, std::move(v)));
  }
  for (const auto& def : flags.treatments) {
    std::vector<double> v(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      if (stay.is_missing(r)) continue;
      auto it = items_by_stay.find(static_cast<std::int64_t>(stay.number(r)));
      if (it == items_by_stay.end()) continue;
      for (std::int64_t id : def.itemids) {
        if (it->second.count(id)) {
          v[r] = 1.0;
          break;
        }
      }
    }
    cols.push_back(Column::numeric(def.name, std::move(v)));
  }
  return PatientFrame(std::move(cols));
}

Schema chartevents_schema() {
  return {{"subject_id", ColumnType::Numeric, false},
          {"hadm_id", ColumnType::Numeric, false},
          {"stay_id", ColumnType::Numeric, true},
          {"charttime", ColumnType::Timestamp, true},
          {"itemid", ColumnType::Numeric, true},
          {"valuenum", ColumnType::Numeric, true},
          {"valueuom", ColumnType::Categorical, false}};
}

Schema labevents_schema() {
  return {{"subject_id", ColumnType::Numeric, false},
          {"hadm_id", ColumnType::Numeric, true},
          {"charttime", ColumnType::Timestamp, true},
          {"itemid", ColumnType::Numeric, true},
          {"valuenum", ColumnType::Numeric, true},
          {"valueuom", ColumnType::Categorical, false}};
}

Schema treatment_schema() {
  return {{"subject_id", ColumnType::Numeric, false},
          {"hadm_id", ColumnType::Numeric, false},
          {"stay_id", ColumnType::Numeric, true},
          {"starttime", ColumnType::Timestamp, true},
          {"itemid", ColumnType::Numeric, true}};
}

std::vector<std::string> panel_variables(const HarmonizeConfig& cfg) {
  auto vars = cfg.vitals.variables();
  for (auto& v : cfg.labs.variables()) vars.push_back(std::move(v));
  return vars;
}

namespace {

std::vector<PlausibilityRule> rules_for(const PatientFrame& frame,
                                        const std::vector<PlausibilityRule>& rules) {
  std::vector<PlausibilityRule> out;
  for (const auto& r : rules) {
    if (frame.has(r.variable)) out.push_back(r);
  }
  return out;
}

void accumulate(HarmonizeReport* report, const PlausibilityResult& res) {
  if (report == nullptr) return;
  for (const auto& entry : res.removed) report->plausibility_removed.push_back(entry);
}

PatientFrame stay_aggregates(const PatientFrame& windowed, const VariableCatalog& catalog,
                             const HarmonizeConfig& cfg, bool full_stats, HarmonizeReport* report) {
  PatientFrame wide = pivot_events(windowed, catalog);
  wide = derive_mbp(wide);
  auto cleaned = apply_plausibility(wide, rules_for(wide, cfg.plausibility));
  accumulate(report, cleaned);
  const auto vars = catalog.variables();
  static constexpr Stat kAll[] = {Stat::Mean, Stat::Min, Stat::Max};
  static constexpr Stat kMean[] = {Stat::Mean};
  return full_stats ? aggregate_by_key(cleaned.frame, "stay_id", vars, kAll)
                    : aggregate_by_key(cleaned.frame, "stay_id", vars, kMean);
}

}  // namespace

PatientFrame harmonize_structured(const HarmonizeInputs& in, const HarmonizeConfig& cfg,
                                  HarmonizeReport* report) {
  const std::vector<std::string> base_cols{"subject_id", "hadm_id", "stay_id", "anchor_age",
                                           "in_hospital_death"};
  PatientFrame out = in.cohort.select(base_cols);
  const JoinSpec by_stay{{JoinKey::StayId}, JoinKind::Left};

  auto chart = window_24h(in.chartevents, in.cohort, "charttime", cfg.window_hours);
  auto labs = window_24h(in.labevents, in.cohort, "charttime", cfg.window_hours);
  if (report != nullptr) {
    report->unlinked_events += chart.unlinked + labs.unlinked;
    report->outside_window += chart.outside + labs.outside;
  }

  out = join(out, stay_aggregates(chart.events, cfg.vitals, cfg, true, report), by_stay);
  out = join(out, stay_aggregates(labs.events, cfg.labs, cfg, true, report), by_stay);

  PatientFrame gcs = stay_aggregates(chart.events, cfg.gcs, cfg, false, report);
  for (const auto& v : cfg.gcs.variables()) {
    gcs = gcs.with_column(gcs.column(v + "_mean").renamed(v));
    const std::vector<std::string> drop{v + "_mean"};
    gcs = gcs.without(drop);
  }
  out = join(out, gcs, by_stay);
  out = out.with_column(gcs_total_column(out));

  PatientFrame treatments;
  {
    std::vector<Column> tcols;
    auto proc = window_24h(in.procedureevents, in.cohort, "starttime", cfg.window_hours);
    auto input = window_24h(in.inputevents, in.cohort, "starttime", cfg.window_hours);
    std::vector<double> stays, items;
    for (const PatientFrame* f : {&proc.events, &input.events}) {
      for (std::size_t r = 0; r < f->rows(); ++r) {
        auto s = f->value("stay_id", r);
        auto i = f->value("itemid", r);
        if (s && i) {
          stays.push_back(*s);
          items.push_back(*i);
        }
      }
    }
    tcols.push_back(Column::numeric("stay_id", std::move(stays)));
    tcols.push_back(Column::numeric("itemid", std::move(items)));
    treatments = PatientFrame(std::move(tcols));
  }
  PatientFrame flags = binary_flags(in.cohort, in.diagnoses, treatments, cfg.flags);
  return join(out, flags, by_stay);
}

Column gcs_total_column(const PatientFrame& frame) {
  Column total = Column::missing_numeric("GCS_Total", frame.rows());
  const Column& eye = frame.column("GCS_Eye");
  const Column& verbal = frame.column("GCS_Verbal");
  const Column& motor = frame.column("GCS_Motor");
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (eye.is_missing(r) || verbal.is_missing(r) || motor.is_missing(r)) continue;
    total.set_number(r, gcs_total({eye.number(r), verbal.number(r), motor.number(r)}));
  }
  return total;
}

}  // namespace riskforge::harmonize
