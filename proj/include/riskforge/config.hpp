#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "riskforge/cohort.hpp"
#include "riskforge/error.hpp"
#include "riskforge/gbt.hpp"
#include "riskforge/glm.hpp"
#include "riskforge/harmonize.hpp"
#include "riskforge/impute.hpp"
#include "riskforge/lasso.hpp"
#include "riskforge/synth.hpp"
#include "riskforge/text.hpp"

namespace riskforge {

inline constexpr std::uint64_t kDefaultSeed = 42;

struct RunConfig {
  std::filesystem::path input_dir;  // raw tables; defaults to <output_dir>/raw
  std::filesystem::path output_dir;

  cohort::CohortConfig cohort;
  harmonize::HarmonizeConfig harmonize;
  std::vector<impute::ImputePolicy> policies = impute::default_policies();
  impute::MiceConfig mice;
  text::TextConfig text;
  bool use_embeddings = true;
  lasso::CvConfig lasso;
  gbt::GbtConfig gbt;
  std::size_t top_k = 17;
  std::size_t top_k_text = 64;
  glm::VifConfig vif;
  std::size_t calibration_bins = 10;
  double threshold = 0.5;
  double train_fraction = 0.8;
  std::uint64_t seed = kDefaultSeed;  // root seed, expanded per stage
  synth::SynthConfig synth;
  bool synth_seed_set = false;

  /// Per-stage seeds; every stage draws from derive_seed(seed, stage).
  std::uint64_t stage_seed(std::string_view stage) const;
  std::filesystem::path raw_dir() const;
};

/// Sectioned key = value text. Relative paths resolve against `base_dir`.
/// Unknown sections or keys, unparseable values and out-of-range values throw
/// ConfigInvalid naming the field. Missing split.seed falls back to 42 with a
/// warning.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, Warnings* warnings = nullptr);

RunConfig load_config(const std::filesystem::path& path, Warnings* warnings = nullptr);

/// Range checks; throws ConfigInvalid(field).
void validate_config(const RunConfig& cfg);

/// Normalized config text that parses back to the same settings. Values that
/// are at their standard settings carry a comment line saying so.
std::string echo_config(const RunConfig& cfg);

}  // namespace riskforge
