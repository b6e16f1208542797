#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "riskforge/config.hpp"
#include "riskforge/error.hpp"
#include "riskforge/frame.hpp"

namespace riskforge::pipeline {

enum class Stage { Synth, Cohort, Features, Impute, Text, Select, Fit, Evaluate, Report };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);  // InvalidArgument

/// Every stage in execution order.
const std::vector<Stage>& stages();

/// Modeling settings: structured only, and structured plus text.
inline constexpr std::string_view kSettings[] = {"structured", "multimodal"};
/// Feature sets fitted per setting.
inline constexpr std::string_view kFeatureSets[] = {"LASSO", "GBT", "Combined"};

/// Runs one stage. Inputs are read from the run directory (raw tables from
/// cfg.raw_dir()); a missing upstream file throws MissingArtifact naming the
/// stage that produces it. Every output is written atomically.
void run_stage(Stage stage, const RunConfig& cfg, Warnings* warnings = nullptr);

/// synth (when `with_synth`) through report.
void run_all(const RunConfig& cfg, Warnings* warnings = nullptr, bool with_synth = true);

/// Structured modeling frame: keys, outcome, `<var>_mean` renamed to `<var>`
/// (min/max dropped), GCS components and total, age and flags.
PatientFrame modeling_frame(const PatientFrame& structured);

/// Candidate predictors: every numeric column except keys, the outcome and
/// the GCS components.
std::vector<std::string> candidate_features(const PatientFrame& frame);

/// Stratified holdout: within each outcome class rows are ordered by a seeded
/// hash of stay_id and the first round(fraction * n_class) go to training.
std::vector<bool> stratified_split(const PatientFrame& cohort, double train_fraction, std::uint64_t seed);

}  // namespace riskforge::pipeline
