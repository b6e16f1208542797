#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "riskforge/frame.hpp"

namespace riskforge::synth {

/// Per-variable generator parameters in natural units.
struct VariableSpec {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
  double severity_loading = 0.0;  // loading on the shared acuity factor
  std::string partner;            // variable it is built from, if any
  double partner_corr = 0.0;
};

const std::vector<VariableSpec>& variable_specs();

/// Effects per population standard deviation: lactate, HR, age and BUN raise
/// risk; GCS, SpO2, temperature and hemoglobin lower it.
std::map<std::string, double> default_beta();

struct SynthConfig {
  std::size_t n_patients = 2000;
  double prevalence_target = 0.52;
  std::map<std::string, double> true_beta = default_beta();
  double text_signal_strength = 1.5;
  double missing_rate = 0.10;
  std::map<std::string, double> missing_rates;  // per-variable overrides
  double discharge_coverage = 0.70;
  double radiology_coverage = 0.71;
  int embedding_dim = 768;
  std::uint64_t seed = 7;

  void validate() const;
  double missing_rate_for(const std::string& variable) const;
};

struct GroundTruth {
  double intercept = 0.0;
  std::map<std::string, double> beta;  // every generated variable, zeros included
  std::vector<std::string> informative;
  double text_signal_strength = 0.0;
  double bayes_auc = 0.0;
  double prevalence = 0.0;
};

struct SynthTables {
  PatientFrame patients, admissions, diagnoses, icustays;
  PatientFrame chartevents, labevents, procedureevents, inputevents;
  PatientFrame discharge, radiology, discharge_emb, radiology_emb;
};

struct SynthResult {
  SynthTables tables;
  /// One row per cohort patient: keys, every variable's patient-level value
  /// (MCAR cells masked), text_latent, eta, in_hospital_death. Variables are
  /// stored in natural units; (value - mean) / sd is the scale of `beta`.
  PatientFrame latent;
  GroundTruth truth;
};

/// Latent frame and ground truth only; no event tables.
SynthResult generate_latent(const SynthConfig& cfg);

/// Latent frame plus MIMIC-shaped raw tables, pseudo-notes and embeddings.
SynthResult generate(const SynthConfig& cfg);

PatientFrame ground_truth_frame(const GroundTruth& truth);

/// Writes every raw table as `<name>.csv` plus ground_truth.csv.
void write_tables(const SynthResult& result, const std::filesystem::path& dir);

}  // namespace riskforge::synth
