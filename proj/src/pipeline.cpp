#include "riskforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "riskforge/csv.hpp"
#include "riskforge/evaluate.hpp"
#include "riskforge/feature_matrix.hpp"
#include "riskforge/news2.hpp"
#include "riskforge/rng.hpp"
#include "riskforge/svg.hpp"

namespace riskforge::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kOutcome = "in_hospital_death";
constexpr std::string_view kNews2Recal = "NEWS2_recalibrated";
constexpr std::string_view kNews2Raw = "NEWS2_raw";

bool is_key(std::string_view name) { return name == "subject_id" || name == "hadm_id" || name == "stay_id"; }

fs::path need(const fs::path& path, Stage producer) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingArtifact,
                std::string(to_string(producer)) + ": " + path.filename().string() + " not found");
  }
  return path;
}

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

PatientFrame metric_frame(const std::vector<std::pair<std::string, double>>& rows) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [k, v] : rows) {
    names.push_back(k);
    values.push_back(v);
  }
  return PatientFrame({Column::categorical("metric", std::move(names)), Column::numeric("value", std::move(values))});
}

PatientFrame name_list_frame(std::string_view column, const std::vector<std::string>& names) {
  return PatientFrame({Column::categorical(std::string(column), names)});
}

std::map<std::int64_t, bool> load_split(const fs::path& out) {
  const PatientFrame split = read_csv(need(out / "split.csv", Stage::Cohort));
  std::map<std::int64_t, bool> is_train;
  const Column& stay = split.column("stay_id");
  const Column& train = split.column("is_train");
  for (std::size_t r = 0; r < split.rows(); ++r) {
    is_train[static_cast<std::int64_t>(stay.number(r))] = train.number(r) != 0.0;
  }
  return is_train;
}

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

Partition partition(const PatientFrame& frame, const std::map<std::int64_t, bool>& is_train) {
  Partition p;
  const Column& stay = frame.column("stay_id");
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    auto it = is_train.find(static_cast<std::int64_t>(stay.number(r)));
    if (it == is_train.end()) {
      throw Error(ErrorCode::LayoutMismatch, "stay " + format_number(stay.number(r)) + " missing from split.csv");
    }
    (it->second ? p.train : p.valid).push_back(r);
  }
  return p;
}

PatientFrame setting_frame(const fs::path& out, int k, std::string_view setting) {
  PatientFrame frame = read_csv(need(out / ("imputed_" + std::to_string(k) + ".csv"), Stage::Impute));
  if (setting == "multimodal") {
    PatientFrame text = read_csv(need(out / "text_features.csv", Stage::Text));
    const std::vector<std::string> drop{"subject_id", "hadm_id"};
    frame = join(frame, text.without(drop), {{JoinKey::StayId}, JoinKind::Inner});
  }
  return frame;
}

std::vector<std::int64_t> stay_ids(const PatientFrame& frame) {
  std::vector<std::int64_t> ids;
  const Column& stay = frame.column("stay_id");
  for (std::size_t r = 0; r < frame.rows(); ++r) ids.push_back(static_cast<std::int64_t>(stay.number(r)));
  return ids;
}

void write_standardizer(const Standardizer& s, const fs::path& path) {
  write_csv(PatientFrame({Column::categorical("feature", s.names), Column::numeric("mean", s.mean),
                          Column::numeric("scale", s.scale)}),
            path);
}

Standardizer read_standardizer(const fs::path& path) {
  const PatientFrame f = read_csv(path, {{"feature", ColumnType::Categorical, true},
                                         {"mean", ColumnType::Numeric, true},
                                         {"scale", ColumnType::Numeric, true}});
  Standardizer s;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    s.names.push_back(f.column("feature").text(r));
    s.mean.push_back(f.column("mean").number(r));
    s.scale.push_back(f.column("scale").number(r));
  }
  return s;
}

/// Retained features per feature set, read from feature_sets_<setting>.csv.
std::map<std::string, std::vector<std::string>> read_feature_sets(const fs::path& out, std::string_view setting) {
  const PatientFrame f = read_csv(need(out / ("feature_sets_" + std::string(setting) + ".csv"), Stage::Select),
                                  {{"set", ColumnType::Categorical, true},
                                   {"feature", ColumnType::Categorical, true},
                                   {"retained", ColumnType::Numeric, true}});
  std::map<std::string, std::vector<std::string>> sets;
  for (auto s : kFeatureSets) sets[std::string(s)];
  for (std::size_t r = 0; r < f.rows(); ++r) {
    if (f.column("retained").number(r) != 0.0) sets[f.column("set").text(r)].push_back(f.column("feature").text(r));
  }
  return sets;
}

FeatureMatrix news2_matrix(const PatientFrame& frame) {
  FeatureMatrix x;
  const auto scores = news2::score_frame(frame);
  x.values.resize(static_cast<Eigen::Index>(scores.size()), 1);
  for (std::size_t i = 0; i < scores.size(); ++i) x.values(static_cast<Eigen::Index>(i), 0) = scores[i];
  x.names = {"NEWS2"};
  x.provenance = {Provenance::Structured};
  return x;
}

glm::GlmFit pooled_fit(const std::vector<glm::GlmFit>& fits) {
  const int m = static_cast<int>(fits.size());
  const auto pool = impute::rubin_pool(fits, m);
  glm::GlmFit f = fits.front();
  f.coef = pool.beta_mi;
  f.se = pool.pooled_se;
  f.z = pool.z;
  f.p = pool.p;
  f.ci_low.clear();
  f.ci_high.clear();
  for (std::size_t j = 0; j < f.coef.size(); ++j) {
    f.ci_low.push_back(f.coef[j] - glm::kZ975 * f.se[j]);
    f.ci_high.push_back(f.coef[j] + glm::kZ975 * f.se[j]);
  }
  double ll = 0.0, ll0 = 0.0;
  f.converged = true;
  f.status = glm::FitStatus::Converged;
  for (const auto& g : fits) {
    ll += g.loglik;
    ll0 += g.loglik_null;
    f.iterations = std::max(f.iterations, g.iterations);
    f.converged = f.converged && g.converged;
    if (g.status == glm::FitStatus::Separation) {
      f.status = glm::FitStatus::Separation;
    } else if (g.status != glm::FitStatus::Converged && f.status == glm::FitStatus::Converged) {
      f.status = g.status;
    }
  }
  f.loglik = ll / m;
  f.loglik_null = ll0 / m;
  f.pseudo_r2 = f.loglik_null != 0.0 ? 1.0 - f.loglik / f.loglik_null : 0.0;
  return f;
}

struct StoredModel {
  std::string name;
  std::string setting;  // empty for the NEWS2 model
  glm::GlmFit fit;
};

std::vector<StoredModel> read_models(const fs::path& out) {
  const PatientFrame f = read_csv(need(out / "models.csv", Stage::Fit),
                                  {{"model", ColumnType::Categorical, true},
                                   {"setting", ColumnType::Categorical, true},
                                   {"variable", ColumnType::Categorical, true},
                                   {"coefficient", ColumnType::Numeric, true}});
  std::vector<StoredModel> models;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const std::string& name = f.column("model").text(r);
    if (models.empty() || models.back().name != name) {
      StoredModel m;
      m.name = name;
      m.setting = f.column("setting").text(r);
      if (m.setting == "baseline") m.setting.clear();
      models.push_back(std::move(m));
    }
    models.back().fit.names.push_back(f.column("variable").text(r));
    models.back().fit.coef.push_back(f.column("coefficient").number(r));
  }
  return models;
}

Column double_column(std::string name, const std::vector<double>& v) {
  std::vector<std::uint8_t> miss(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) miss[i] = std::isnan(v[i]) ? 1 : 0;
  return Column::numeric(std::move(name), v, std::move(miss));
}

// ---- stages ----

void stage_synth(const RunConfig& cfg) {
  synth::SynthConfig sc = cfg.synth;
  if (!cfg.synth_seed_set) sc.seed = cfg.stage_seed("synth");
  const auto result = synth::generate(sc);
  synth::write_tables(result, cfg.raw_dir());
}

void stage_cohort(const RunConfig& cfg, Warnings* warnings) {
  const fs::path raw = cfg.raw_dir();
  cohort::CohortTables t;
  t.diagnoses = read_csv(need(raw / "diagnoses_icd.csv", Stage::Synth), cohort::diagnoses_schema());
  t.patients = read_csv(need(raw / "patients.csv", Stage::Synth), cohort::patients_schema());
  t.icustays = read_csv(need(raw / "icustays.csv", Stage::Synth), cohort::icustays_schema());
  t.admissions = read_csv(need(raw / "admissions.csv", Stage::Synth), cohort::admissions_schema());
  const PatientFrame cohort = cohort::build_cohort(t, cfg.cohort, warnings);

  const auto train = stratified_split(cohort, cfg.train_fraction, cfg.stage_seed("split"));
  std::vector<double> flag(train.begin(), train.end());
  const std::vector<std::string> keys{"subject_id", "hadm_id", "stay_id"};
  PatientFrame split = cohort.select(keys).with_column(Column::numeric("is_train", flag));

  const auto y = outcome_vector(cohort, kOutcome);
  double deaths = 0.0, n_train = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    deaths += y[i];
    n_train += flag[i];
  }
  const double n = static_cast<double>(cohort.rows());
  write_csv(cohort, cfg.output_dir / "cohort.csv");
  write_csv(split, cfg.output_dir / "split.csv");
  write_csv(metric_frame({{"patients", n},
                          {"deaths", deaths},
                          {"prevalence", n > 0 ? deaths / n : 0.0},
                          {"train", n_train},
                          {"validation", n - n_train}}),
            cfg.output_dir / "cohort_report.csv");
}

void stage_features(const RunConfig& cfg) {
  const fs::path raw = cfg.raw_dir();
  harmonize::HarmonizeInputs in;
  in.cohort = read_csv(need(cfg.output_dir / "cohort.csv", Stage::Cohort));
  in.chartevents = read_csv(need(raw / "chartevents.csv", Stage::Synth), harmonize::chartevents_schema());
  in.labevents = read_csv(need(raw / "labevents.csv", Stage::Synth), harmonize::labevents_schema());
  in.diagnoses = read_csv(need(raw / "diagnoses_icd.csv", Stage::Synth), cohort::diagnoses_schema());
  in.procedureevents = read_csv(need(raw / "procedureevents.csv", Stage::Synth), harmonize::treatment_schema());
  in.inputevents = read_csv(need(raw / "inputevents.csv", Stage::Synth), harmonize::treatment_schema());
  harmonize::HarmonizeReport report;
  const PatientFrame features = harmonize::harmonize_structured(in, cfg.harmonize, &report);
  std::vector<std::pair<std::string, double>> rows{
      {"unlinked_events", static_cast<double>(report.unlinked_events)},
      {"outside_window", static_cast<double>(report.outside_window)}};
  for (const auto& [var, count] : report.plausibility_removed) {
    rows.emplace_back("implausible_" + var, static_cast<double>(count));
  }
  write_csv(features, cfg.output_dir / "structured_features.csv");
  write_csv(metric_frame(rows), cfg.output_dir / "harmonize_report.csv");
}

void stage_impute(const RunConfig& cfg, Warnings* warnings) {
  const PatientFrame structured = read_csv(need(cfg.output_dir / "structured_features.csv", Stage::Features));
  const auto is_train = load_split(cfg.output_dir);
  const PatientFrame frame = modeling_frame(structured);

  std::vector<std::string> variables;
  for (const auto& c : frame.columns()) {
    if (!is_key(c.name()) && c.name() != kOutcome) variables.push_back(c.name());
  }
  write_csv(impute::missing_report_frame(impute::missing_report(frame, cfg.policies, variables)),
            cfg.output_dir / "imputation_report.csv");

  PatientFrame single = impute::impute_single(frame, cfg.policies);
  single = single.with_column(harmonize::gcs_total_column(single));

  // Validation outcomes are hidden from the chained equations.
  const Partition part = partition(single, is_train);
  Column masked = single.column(kOutcome);
  for (std::size_t r : part.valid) masked.set_missing(r);
  single = single.with_column(masked);

  impute::MiceConfig mc = cfg.mice;
  mc.seed = cfg.stage_seed("impute.mice");
  const auto imputed = impute::mice_impute(single, mc, warnings);
  for (std::size_t k = 0; k < imputed.size(); ++k) {
    PatientFrame out = imputed[k].with_column(frame.column(kOutcome));
    out = out.with_column(harmonize::gcs_total_column(out));
    write_csv(out, cfg.output_dir / ("imputed_" + std::to_string(k + 1) + ".csv"));
  }
}

void stage_text(const RunConfig& cfg) {
  const fs::path raw = cfg.raw_dir();
  const PatientFrame cohort = read_csv(need(cfg.output_dir / "cohort.csv", Stage::Cohort));
  const auto is_train = load_split(cfg.output_dir);
  std::set<std::int64_t> fit_hadm;
  for (std::size_t r = 0; r < cohort.rows(); ++r) {
    auto it = is_train.find(static_cast<std::int64_t>(cohort.column("stay_id").number(r)));
    if (it != is_train.end() && it->second) fit_hadm.insert(static_cast<std::int64_t>(cohort.column("hadm_id").number(r)));
  }
  text::TextInputs in;
  in.discharge = read_csv(need(raw / "discharge.csv", Stage::Synth), text::notes_schema());
  in.radiology = read_csv(need(raw / "radiology.csv", Stage::Synth), text::notes_schema());
  if (cfg.use_embeddings) {
    in.discharge_emb = read_csv(need(raw / "discharge_emb.csv", Stage::Synth));
    in.radiology_emb = read_csv(need(raw / "radiology_emb.csv", Stage::Synth));
  }
  const auto result = text::build_text_features(cohort, in, fit_hadm, cfg.text);
  write_csv(result.features, cfg.output_dir / "text_features.csv");

  const char* kinds[] = {"discharge", "radiology"};
  for (std::size_t i = 0; i < result.tfidf.size() && i < 2; ++i) {
    const auto& m = result.tfidf[i];
    std::vector<double> df(m.df.begin(), m.df.end());
    write_csv(PatientFrame({Column::categorical("term", m.vocabulary), Column::numeric("df", df),
                            Column::numeric("idf", m.idf)}),
              cfg.output_dir / (std::string("vocabulary_") + kinds[i] + ".csv"));
  }

  std::vector<std::string> block;
  std::vector<double> admissions, with_note, input_dim, retained, cumulative;
  for (const auto& [prefix, basis] : result.bases) {
    std::string stem = prefix;
    while (!stem.empty() && stem.back() == '_') stem.pop_back();
    write_basis(basis, cfg.output_dir / (stem + ".basis.csv"));
    const bool radiology = stem.starts_with("radio");
    const text::Coverage* cov = nullptr;
    for (const auto& c : result.coverage) {
      if ((c.kind == text::NoteKind::Radiology) == radiology) cov = &c;
    }
    block.push_back(stem);
    admissions.push_back(cov ? static_cast<double>(cov->admissions) : 0.0);
    with_note.push_back(cov ? static_cast<double>(cov->with_note) : 0.0);
    input_dim.push_back(static_cast<double>(basis.components.cols()));
    retained.push_back(basis.retained);
    cumulative.push_back(basis.cumulative_ratio());
  }
  write_csv(PatientFrame({Column::categorical("block", block), Column::numeric("admissions", admissions),
                          Column::numeric("with_note", with_note), Column::numeric("input_dim", input_dim),
                          Column::numeric("retained", retained), Column::numeric("cumulative_ratio", cumulative)}),
            cfg.output_dir / "text_report.csv");
}

void write_cv_plot(const lasso::CvCurve& curve, const std::string& setting, const fs::path& path) {
  svg::Plot plot;
  plot.title = "LASSO cross-validation (" + setting + ")";
  plot.x_label = "log(lambda)";
  plot.y_label = "Binomial deviance";
  svg::Series s;
  s.label = "mean deviance";
  s.markers = true;
  for (std::size_t i = 0; i < curve.lambda_grid.size(); ++i) {
    s.x.push_back(std::log(curve.lambda_grid[i]));
    s.y.push_back(curve.mean_deviance[i]);
    s.y_err.push_back(curve.se_deviance[i]);
  }
  plot.x_min = *std::min_element(s.x.begin(), s.x.end());
  plot.x_max = *std::max_element(s.x.begin(), s.x.end());
  if (plot.x_max <= plot.x_min) plot.x_max = plot.x_min + 1.0;
  plot.series.push_back(std::move(s));
  plot.vlines = {{std::log(curve.lambda_min), "lambda_min"}, {std::log(curve.lambda_1se), "lambda_1se"}};
  svg::fit_y_range(plot);
  write_text_atomic(path, svg::render(plot));
}

void stage_select(const RunConfig& cfg) {
  const auto is_train = load_split(cfg.output_dir);
  for (auto setting_view : kSettings) {
    const std::string setting(setting_view);
    const PatientFrame frame = setting_frame(cfg.output_dir, 1, setting);
    const Partition part = partition(frame, is_train);
    const PatientFrame train = frame.take_rows(part.train);
    const auto candidates = candidate_features(frame);
    const FeatureMatrix x = to_feature_matrix(train, candidates);
    const auto y = outcome_vector(train, kOutcome);
    const Standardizer stdz = Standardizer::fit(x);
    write_standardizer(stdz, cfg.output_dir / ("standardizer_" + setting + ".csv"));
    const FeatureMatrix xs = stdz.apply(x);

    lasso::CvConfig lc = cfg.lasso;
    lc.seed = cfg.stage_seed("select.lasso");
    const auto ids = stay_ids(train);
    const auto curve = lasso::cv_deviance(xs.values, y, ids, lc);
    const auto lasso_set = lasso::selected_features(xs, y, curve.lambda_selected, lc.fit);
    write_csv(lasso::cv_curve_frame(curve), cfg.output_dir / ("cv_curve_" + setting + ".csv"));
    write_csv(name_list_frame("feature", lasso_set), cfg.output_dir / ("lasso_selected_" + setting + ".csv"));
    write_cv_plot(curve, setting, cfg.output_dir / ("cv_curve_" + setting + ".svg"));

    gbt::GbtConfig gc = cfg.gbt;
    gc.seed = cfg.stage_seed("select.gbt");
    const auto model = gbt::fit_gbt(xs, y, gc);
    const auto gbt_set = gbt::top_k_features(model, setting == "structured" ? cfg.top_k : cfg.top_k_text);
    write_csv(gbt::importance_frame(model), cfg.output_dir / ("gbt_importance_" + setting + ".csv"));

    write_csv(glm::screen_report_frame(glm::univariate_screen(xs, y)),
              cfg.output_dir / ("univariate_report_" + setting + ".csv"));

    const auto combined = glm::consolidate_features(lasso_set, gbt_set);
    const std::vector<std::string>* sets[] = {&lasso_set, &gbt_set, &combined};
    std::vector<std::string> set_col, feature_col;
    std::vector<double> retained_col;
    for (std::size_t s = 0; s < 3; ++s) {
      const std::string set_name(kFeatureSets[s]);
      const auto& members = *sets[s];
      std::vector<std::string> kept = members;
      if (members.size() >= 2) {
        const auto report = glm::vif(xs.select(members), cfg.vif);
        kept = report.final_variables;
        write_csv(glm::vif_report_frame(report),
                  cfg.output_dir / ("vif_report_" + setting + "_" + set_name + ".csv"));
      }
      for (const auto& f : members) {
        set_col.push_back(set_name);
        feature_col.push_back(f);
        retained_col.push_back(std::find(kept.begin(), kept.end(), f) != kept.end() ? 1.0 : 0.0);
      }
    }
    write_csv(PatientFrame({Column::categorical("set", set_col), Column::categorical("feature", feature_col),
                            Column::numeric("retained", retained_col)}),
              cfg.output_dir / ("feature_sets_" + setting + ".csv"));
  }
}

void stage_fit(const RunConfig& cfg) {
  const auto is_train = load_split(cfg.output_dir);
  const int m = cfg.mice.m;
  for (int k = 1; k <= m; ++k) need(cfg.output_dir / ("imputed_" + std::to_string(k) + ".csv"), Stage::Impute);

  std::vector<std::string> mm, ms, mv;
  std::vector<double> mc, mse, mp;
  std::vector<std::string> fm, fs_setting, fs_set, fs_status;
  std::vector<double> fk, fr2, fll, fll0, fn;

  auto record = [&](const std::string& name, const std::string& setting, const std::string& set,
                    const glm::GlmFit& f) {
    for (std::size_t j = 0; j < f.names.size(); ++j) {
      mm.push_back(name);
      ms.push_back(setting);
      mv.push_back(f.names[j]);
      mc.push_back(f.coef[j]);
      mse.push_back(f.se[j]);
      mp.push_back(f.p[j]);
    }
    fm.push_back(name);
    fs_setting.push_back(setting);
    fs_set.push_back(set);
    fs_status.push_back(std::string(glm::to_string(f.status)));
    fk.push_back(static_cast<double>(f.names.size() - 1));
    fr2.push_back(f.pseudo_r2);
    fll.push_back(f.loglik);
    fll0.push_back(f.loglik_null);
    fn.push_back(static_cast<double>(f.n));
    write_csv(glm::model_summary_frame(f), cfg.output_dir / ("model_summary_" + name + ".csv"));
  };

  for (auto setting_view : kSettings) {
    const std::string setting(setting_view);
    const Standardizer stdz = read_standardizer(need(cfg.output_dir / ("standardizer_" + setting + ".csv"), Stage::Select));
    const auto sets = read_feature_sets(cfg.output_dir, setting);
    std::map<std::string, std::vector<glm::GlmFit>> fits;
    for (int k = 1; k <= m; ++k) {
      const PatientFrame frame = setting_frame(cfg.output_dir, k, setting);
      const PatientFrame train = frame.take_rows(partition(frame, is_train).train);
      const FeatureMatrix xs = stdz.apply(to_feature_matrix(train, stdz.names));
      const auto y = outcome_vector(train, kOutcome);
      for (auto set : kFeatureSets) {
        const std::string set_name(set);
        fits[set_name].push_back(glm::fit_logistic(xs.select(sets.at(set_name)), y));
      }
    }
    for (auto set : kFeatureSets) {
      const std::string set_name(set);
      record(setting + "_" + set_name, setting, set_name, pooled_fit(fits[set_name]));
    }
  }

  std::vector<glm::GlmFit> news2_fits;
  for (int k = 1; k <= m; ++k) {
    const PatientFrame frame = setting_frame(cfg.output_dir, k, "structured");
    const PatientFrame train = frame.take_rows(partition(frame, is_train).train);
    news2_fits.push_back(glm::fit_logistic(news2_matrix(train), outcome_vector(train, kOutcome)));
  }
  record(std::string(kNews2Recal), "baseline", "NEWS2", pooled_fit(news2_fits));

  write_csv(PatientFrame({Column::categorical("model", mm), Column::categorical("setting", ms),
                          Column::categorical("variable", mv), Column::numeric("coefficient", mc),
                          double_column("std_error", mse), double_column("p_value", mp)}),
            cfg.output_dir / "models.csv");
  write_csv(PatientFrame({Column::categorical("model", fm), Column::categorical("setting", fs_setting),
                          Column::categorical("feature_set", fs_set), Column::numeric("n_features", fk),
                          double_column("pseudo_r2", fr2), double_column("loglik", fll),
                          double_column("loglik_null", fll0), Column::numeric("n", fn),
                          Column::categorical("status", fs_status)}),
            cfg.output_dir / "model_fit.csv");
}

svg::Plot base_plot(std::string title, std::string x_label, std::string y_label) {
  svg::Plot p;
  p.title = std::move(title);
  p.x_label = std::move(x_label);
  p.y_label = std::move(y_label);
  return p;
}

void stage_evaluate(const RunConfig& cfg) {
  const auto models = read_models(cfg.output_dir);
  const auto is_train = load_split(cfg.output_dir);
  const int m = cfg.mice.m;

  std::map<std::string, Standardizer> stdz;
  for (auto s : kSettings) {
    const std::string setting(s);
    stdz[setting] = read_standardizer(need(cfg.output_dir / ("standardizer_" + setting + ".csv"), Stage::Select));
  }

  PatientFrame keys;
  std::vector<double> y;
  std::vector<double> news2_raw;
  std::vector<eval::ModelScores> scored;
  for (const auto& sm : models) scored.push_back({sm.name, {}});

  for (int k = 1; k <= m; ++k) {
    std::map<std::string, FeatureMatrix> xs;
    PatientFrame valid_structured;
    for (auto s : kSettings) {
      const std::string setting(s);
      const PatientFrame frame = setting_frame(cfg.output_dir, k, setting);
      const PatientFrame valid = frame.take_rows(partition(frame, is_train).valid);
      xs[setting] = stdz[setting].apply(to_feature_matrix(valid, stdz[setting].names));
      if (setting == "structured") valid_structured = valid;
    }
    if (k == 1) {
      const std::vector<std::string> key_cols{"subject_id", "hadm_id", "stay_id"};
      keys = valid_structured.select(key_cols);
      y = outcome_vector(valid_structured, kOutcome);
      news2_raw.assign(y.size(), 0.0);
      for (auto& s : scored) s.probs.assign(y.size(), 0.0);
    }
    const FeatureMatrix nx = news2_matrix(valid_structured);
    for (std::size_t i = 0; i < y.size(); ++i) news2_raw[i] += nx.values(static_cast<Eigen::Index>(i), 0) / m;
    for (std::size_t j = 0; j < models.size(); ++j) {
      const auto& sm = models[j];
      const auto p = glm::predict_proba(sm.fit, sm.setting.empty() ? nx : xs.at(sm.setting));
      for (std::size_t i = 0; i < p.size(); ++i) scored[j].probs[i] += p[i] / m;
    }
  }

  PatientFrame predictions = keys.with_column(Column::numeric(std::string(kOutcome), y))
                                 .with_column(Column::numeric("news2_score", news2_raw));
  for (const auto& s : scored) predictions = predictions.with_column(Column::numeric("p_" + s.model, s.probs));
  write_csv(predictions, cfg.output_dir / "predictions.csv");

  std::vector<eval::ModelScores> with_raw = scored;
  with_raw.push_back({std::string(kNews2Raw), news2_raw});
  write_csv(eval::roc_frame(with_raw, y), cfg.output_dir / "roc.csv");
  write_csv(eval::calibration_frame(scored, y, cfg.calibration_bins), cfg.output_dir / "calibration.csv");
  write_csv(eval::dca_frame(scored, y), cfg.output_dir / "dca.csv");

  std::vector<std::string> names;
  std::vector<double> auc, acc, prec, rec, f1, spec;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : with_raw) {
    names.push_back(s.model);
    auc.push_back(eval::roc(s.probs, y).auc);
    if (s.model == kNews2Raw) {
      for (auto* v : {&acc, &prec, &rec, &f1, &spec}) v->push_back(nan);
      continue;
    }
    const auto tm = eval::threshold_metrics(s.probs, y, cfg.threshold);
    acc.push_back(tm.accuracy);
    prec.push_back(tm.precision_pos);
    rec.push_back(tm.recall_pos);
    f1.push_back(tm.f1_pos);
    spec.push_back(tm.specificity);
  }
  write_csv(PatientFrame({Column::categorical("model", names), Column::numeric("auc", auc),
                          double_column("accuracy", acc), double_column("precision", prec),
                          double_column("recall", rec), double_column("f1", f1),
                          double_column("specificity", spec)}),
            cfg.output_dir / "metrics.csv");

  svg::Plot roc_plot = base_plot("ROC, validation set", "False positive rate", "True positive rate");
  roc_plot.diagonal = true;
  for (const auto& s : with_raw) {
    const auto curve = eval::roc(s.probs, y);
    roc_plot.series.push_back({s.model + " (AUC " + fixed(curve.auc, 3) + ")", curve.fpr, curve.tpr,
                               s.model == kNews2Raw, {}, false});
  }
  write_text_atomic(cfg.output_dir / "roc.svg", svg::render(roc_plot));

  svg::Plot cal_plot = base_plot("Calibration, validation set", "Mean predicted probability", "Observed event rate");
  cal_plot.diagonal = true;
  for (const auto& s : scored) {
    svg::Series ser{s.model, {}, {}, false, {}, true};
    for (const auto& b : eval::calibration(s.probs, y, cfg.calibration_bins)) {
      ser.x.push_back(b.mean_prob);
      ser.y.push_back(b.event_rate);
    }
    cal_plot.series.push_back(std::move(ser));
  }
  write_text_atomic(cfg.output_dir / "calibration.svg", svg::render(cal_plot));

  svg::Plot dca_plot = base_plot("Decision curve, validation set", "Threshold probability", "Standardized net benefit");
  dca_plot.y_min = -0.1;
  dca_plot.y_max = 1.0;
  const auto grid = eval::dca_grid();
  bool reference_added = false;
  for (const auto& s : scored) {
    if (!s.model.ends_with("_Combined") && s.model != kNews2Recal) continue;
    const auto curve = eval::decision_curve(s.probs, y, grid);
    if (!reference_added) {
      dca_plot.series.push_back({"Treat all", curve.thresholds, curve.standardized_treat_all, true, {}, false});
      dca_plot.series.push_back(
          {"Treat none", curve.thresholds, std::vector<double>(curve.thresholds.size(), 0.0), true, {}, false});
      reference_added = true;
    }
    dca_plot.series.push_back({s.model, curve.thresholds, curve.standardized_net_benefit, false, {}, false});
  }
  write_text_atomic(cfg.output_dir / "dca.svg", svg::render(dca_plot));
}

void stage_report(const RunConfig& cfg) {
  const fs::path out = cfg.output_dir;
  const PatientFrame fit = read_csv(need(out / "model_fit.csv", Stage::Fit));
  const PatientFrame metrics = read_csv(need(out / "metrics.csv", Stage::Evaluate));
  const PatientFrame cohort_report = read_csv(need(out / "cohort_report.csv", Stage::Cohort));

  auto lookup = [](const PatientFrame& f, std::string_view key_col, std::string_view key, std::string_view col) {
    for (std::size_t r = 0; r < f.rows(); ++r) {
      if (f.column(key_col).text(r) == key) {
        auto v = f.value(col, r);
        return v ? *v : std::numeric_limits<double>::quiet_NaN();
      }
    }
    throw Error(ErrorCode::LayoutMismatch, std::string(key) + " missing from report inputs");
  };

  std::vector<std::string> sets;
  std::vector<double> r2_s, r2_m, k_s, k_m;
  for (auto set : kFeatureSets) {
    const std::string s(set);
    sets.push_back(s);
    r2_s.push_back(lookup(fit, "model", "structured_" + s, "pseudo_r2"));
    r2_m.push_back(lookup(fit, "model", "multimodal_" + s, "pseudo_r2"));
    k_s.push_back(lookup(fit, "model", "structured_" + s, "n_features"));
    k_m.push_back(lookup(fit, "model", "multimodal_" + s, "n_features"));
  }
  write_csv(PatientFrame({Column::categorical("feature_set", sets), double_column("structured", r2_s),
                          double_column("structured+text", r2_m), Column::numeric("structured_n_features", k_s),
                          Column::numeric("structured+text_n_features", k_m)}),
            out / "model_comparison.csv");

  const std::pair<const char*, const char*> perf_rows[] = {
      {"AUC", "auc"}, {"Accuracy", "accuracy"}, {"F1", "f1"}, {"Recall", "recall"}};
  std::vector<std::string> metric_names;
  std::vector<double> p_s, p_m, p_n;
  for (const auto& [label, col] : perf_rows) {
    metric_names.emplace_back(label);
    p_s.push_back(lookup(metrics, "model", "structured_Combined", col));
    p_m.push_back(lookup(metrics, "model", "multimodal_Combined", col));
    p_n.push_back(lookup(metrics, "model", kNews2Recal, col));
  }
  write_csv(PatientFrame({Column::categorical("metric", metric_names), double_column("structured", p_s),
                          double_column("structured+text", p_m), double_column("NEWS2", p_n)}),
            out / "performance_comparison.csv");

  std::ostringstream md;
  md << "# Mortality risk report\n\n";
  md << "## Cohort\n\n";
  md << "| Item | Value |\n|---|---|\n";
  for (std::size_t r = 0; r < cohort_report.rows(); ++r) {
    const auto& name = cohort_report.column("metric").text(r);
    const double v = cohort_report.column("value").number(r);
    md << "| " << name << " | " << (name == "prevalence" ? fixed(v) : format_number(v)) << " |\n";
  }
  if (fs::exists(out / "text_report.csv")) {
    const PatientFrame text = read_csv(out / "text_report.csv");
    md << "\n## Text blocks\n\n| Block | Admissions with note | Input dim | Retained | Cumulative ratio |\n"
          "|---|---|---|---|---|\n";
    for (std::size_t r = 0; r < text.rows(); ++r) {
      const double adm = text.column("admissions").number(r), with = text.column("with_note").number(r);
      md << "| " << text.column("block").text(r) << " | " << format_number(with) << " / " << format_number(adm)
         << " | " << format_number(text.column("input_dim").number(r)) << " | "
         << format_number(text.column("retained").number(r)) << " | "
         << fixed(text.column("cumulative_ratio").number(r)) << " |\n";
    }
  }
  md << "\n## Pseudo-R2 of pooled logistic models\n\n| Feature set | structured | structured+text |\n|---|---|---|\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    md << "| " << sets[i] << " | " << fixed(r2_s[i]) << " (" << format_number(k_s[i]) << " features) | "
       << fixed(r2_m[i]) << " (" << format_number(k_m[i]) << " features) |\n";
  }
  md << "\n## Validation performance (Combined feature set, threshold " << fixed(cfg.threshold, 2) << ")\n\n"
     << "| Metric | structured | structured+text | NEWS2 |\n|---|---|---|---|\n";
  for (std::size_t i = 0; i < metric_names.size(); ++i) {
    md << "| " << metric_names[i] << " | " << fixed(p_s[i]) << " | " << fixed(p_m[i]) << " | " << fixed(p_n[i])
       << " |\n";
  }
  md << "\nRaw NEWS2 score AUC: " << fixed(lookup(metrics, "model", kNews2Raw, "auc")) << "\n";
  md << "\n## All models\n\n| Model | AUC | Accuracy | Precision | Recall | F1 |\n|---|---|---|---|---|---|\n";
  for (std::size_t r = 0; r < metrics.rows(); ++r) {
    const std::string& name = metrics.column("model").text(r);
    md << "| " << name;
    for (const char* col : {"auc", "accuracy", "precision", "recall", "f1"}) {
      auto v = metrics.value(col, r);
      md << " | " << (v ? fixed(*v) : "NA");
    }
    md << " |\n";
  }
  write_text_atomic(out / "report.md", md.str());
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Synth: return "synth";
    case Stage::Cohort: return "cohort";
    case Stage::Features: return "features";
    case Stage::Impute: return "impute";
    case Stage::Text: return "text";
    case Stage::Select: return "select";
    case Stage::Fit: return "fit";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (Stage s : stages()) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage '" + std::string(text) + "'");
}

const std::vector<Stage>& stages() {
  static const std::vector<Stage> all{Stage::Synth,  Stage::Cohort, Stage::Features, Stage::Impute,  Stage::Text,
                                      Stage::Select, Stage::Fit,    Stage::Evaluate, Stage::Report};
  return all;
}

void run_stage(Stage stage, const RunConfig& cfg, Warnings* warnings) {
  fs::create_directories(cfg.output_dir);
  switch (stage) {
    case Stage::Synth: stage_synth(cfg); break;
    case Stage::Cohort: stage_cohort(cfg, warnings); break;
    case Stage::Features: stage_features(cfg); break;
    case Stage::Impute: stage_impute(cfg, warnings); break;
    case Stage::Text: stage_text(cfg); break;
    case Stage::Select: stage_select(cfg); break;
    case Stage::Fit: stage_fit(cfg); break;
    case Stage::Evaluate: stage_evaluate(cfg); break;
    case Stage::Report: stage_report(cfg); break;
  }
}

void run_all(const RunConfig& cfg, Warnings* warnings, bool with_synth) {
  for (Stage s : stages()) {
    if (s == Stage::Synth && !with_synth) continue;
    run_stage(s, cfg, warnings);
  }
}

PatientFrame modeling_frame(const PatientFrame& structured) {
  std::vector<Column> cols;
  for (const auto& c : structured.columns()) {
    const std::string& name = c.name();
    if (name.ends_with("_min") || name.ends_with("_max")) continue;
    if (name.ends_with("_mean")) {
      cols.push_back(c.renamed(name.substr(0, name.size() - 5)));
    } else {
      cols.push_back(c);
    }
  }
  return PatientFrame(std::move(cols));
}

std::vector<std::string> candidate_features(const PatientFrame& frame) {
  std::vector<std::string> out;
  for (const auto& c : frame.columns()) {
    const std::string& n = c.name();
    if (!c.is_numeric() || is_key(n) || n == kOutcome) continue;
    if (n == "GCS_Eye" || n == "GCS_Verbal" || n == "GCS_Motor") continue;
    out.push_back(n);
  }
  return out;
}

std::vector<bool> stratified_split(const PatientFrame& cohort, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "split.train_fraction: must lie in (0, 1)");
  }
  const auto y = outcome_vector(cohort, kOutcome);
  const Column& stay = cohort.column("stay_id");
  std::vector<bool> train(cohort.rows(), false);
  for (double cls : {0.0, 1.0}) {
    std::vector<std::pair<std::uint64_t, std::size_t>> order;
    for (std::size_t r = 0; r < cohort.rows(); ++r) {
      if (y[r] == cls) order.emplace_back(keyed_hash(seed, static_cast<std::int64_t>(stay.number(r))), r);
    }
    std::sort(order.begin(), order.end());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
    for (std::size_t i = 0; i < n_train && i < order.size(); ++i) train[order[i].second] = true;
  }
  return train;
}

}  // namespace riskforge::pipeline
