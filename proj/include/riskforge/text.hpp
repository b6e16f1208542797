#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskforge/csv.hpp"
#include "riskforge/frame.hpp"
#include "riskforge/reduce.hpp"

namespace riskforge::text {

enum class NoteKind { Discharge, Radiology };

std::string_view to_string(NoteKind k);

struct NoteRecord {
  std::int64_t hadm_id = 0;
  NoteKind kind = NoteKind::Discharge;
  double charttime = 0.0;
  std::string text;
};

struct Coverage {
  NoteKind kind = NoteKind::Discharge;
  std::size_t admissions = 0;
  std::size_t with_note = 0;

  double fraction() const;
  std::string describe() const;  // "discharge 1618 (70.1%)"
};

Schema notes_schema();

/// Earliest note per cohort admission (ties broken by text), ascending hadm_id.
/// Notes with a masked hadm_id or for admissions outside the cohort are dropped.
std::vector<NoteRecord> select_notes(const PatientFrame& notes, const PatientFrame& cohort, NoteKind kind,
                                     Coverage* coverage = nullptr);

/// Fixed English stopword list; the negators no, nor, not, don't, won't are kept
/// out of it.
const std::set<std::string>& stopwords();

/// Lowercase ASCII letter runs; every other character separates tokens.
/// Stopwords are removed.
std::vector<std::string> normalize_text(std::string_view text);

struct TfidfModel {
  std::vector<std::string> vocabulary;
  std::vector<double> idf;
  std::vector<std::size_t> df;
  std::size_t documents = 0;

  std::optional<std::size_t> index_of(std::string_view term) const;
};

/// Top `max_vocab` terms by document frequency, ties lexicographic;
/// idf = ln((1+N)/(1+df)) + 1.
TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs, std::size_t max_vocab = 500);

/// Raw term counts times idf, L2-normalized. Empty or all-OOV docs give zeros.
Eigen::VectorXd transform_tfidf(const TfidfModel& model, const std::vector<std::string>& doc);

Eigen::MatrixXd tfidf_matrix(const TfidfModel& model, const std::vector<std::vector<std::string>>& docs);

/// Reduced vectors for one modality, keyed by hadm_id.
struct TextBlock {
  std::string prefix;     // column stem, e.g. "disch_tfidf_svd_"
  std::string indicator;  // e.g. "has_discharge_note"
  int dim = 0;
  std::map<std::int64_t, Eigen::VectorXd> vectors;
};

/// Appends `<prefix><i>` (1-based) for every block and one 0/1 column per
/// distinct indicator. Admissions without a vector get zeros.
PatientFrame apply_text_block(const PatientFrame& cohort, const std::vector<TextBlock>& blocks);

struct TextConfig {
  double svd_target = 0.80;
  double pca_target = 0.90;
  std::size_t max_vocab = 500;

  void validate() const;
};

struct TextInputs {
  PatientFrame discharge;                    // hadm_id, charttime, text
  PatientFrame radiology;                    // hadm_id, charttime, text
  std::optional<PatientFrame> discharge_emb; // hadm_id + embedding columns
  std::optional<PatientFrame> radiology_emb;
};

struct TextResult {
  PatientFrame features;  // keys + text columns, one row per cohort stay
  std::vector<std::pair<std::string, ReducedBasis>> bases;
  std::vector<TfidfModel> tfidf;  // discharge, radiology
  std::vector<Coverage> coverage;
};

/// Vocabulary and bases are fitted on admissions in `fit_hadm` only and then
/// applied to every cohort admission.
TextResult build_text_features(const PatientFrame& cohort, const TextInputs& inputs,
                               const std::set<std::int64_t>& fit_hadm, const TextConfig& cfg);

}  // namespace riskforge::text
