#include "riskforge/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "riskforge/error.hpp"

namespace riskforge::text {

std::string_view to_string(NoteKind k) { return k == NoteKind::Discharge ? "discharge" : "radiology"; }

double Coverage::fraction() const {
  return admissions == 0 ? 0.0 : static_cast<double>(with_note) / static_cast<double>(admissions);
}

std::string Coverage::describe() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s %zu (%.1f%%)", std::string(to_string(kind)).c_str(), with_note,
                100.0 * fraction());
  return buf;
}

Schema notes_schema() {
  return {{"hadm_id", ColumnType::Numeric, true},
          {"charttime", ColumnType::Timestamp, true},
          {"text", ColumnType::Categorical, true}};
}

std::vector<NoteRecord> select_notes(const PatientFrame& notes, const PatientFrame& cohort, NoteKind kind,
                                     Coverage* coverage) {
  std::set<std::int64_t> admissions;
  const Column& ch = cohort.column("hadm_id");
  for (std::size_t r = 0; r < cohort.rows(); ++r) {
    if (!ch.is_missing(r)) admissions.insert(static_cast<std::int64_t>(ch.number(r)));
  }
  const Column& hadm = notes.column("hadm_id");
  const Column& time = notes.column("charttime");
  const Column& body = notes.column("text");
  std::map<std::int64_t, NoteRecord> best;
  for (std::size_t r = 0; r < notes.rows(); ++r) {
    if (hadm.is_missing(r)) continue;
    const auto id = static_cast<std::int64_t>(hadm.number(r));
    if (!admissions.count(id)) continue;
    NoteRecord rec{id, kind, time.is_missing(r) ? std::numeric_limits<double>::infinity() : time.number(r),
                   body.is_missing(r) ? std::string() : body.text(r)};
    auto it = best.find(id);
    if (it == best.end()) {
      best.emplace(id, std::move(rec));
    } else if (rec.charttime < it->second.charttime ||
               (rec.charttime == it->second.charttime && rec.text < it->second.text)) {
      it->second = std::move(rec);
    }
  }
  std::vector<NoteRecord> out;
  out.reserve(best.size());
  for (auto& [id, rec] : best) out.push_back(std::move(rec));
  if (coverage != nullptr) *coverage = {kind, admissions.size(), out.size()};
  return out;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words{
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll",
      "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's",
      "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
      "themselves", "what", "which", "who", "whom", "this", "that", "that'll", "these", "those", "am", "is",
      "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does", "did",
      "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at",
      "by", "for", "with", "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
      "further", "then", "once", "here", "there", "when", "where", "why", "how", "all", "any", "both",
      "each", "few", "more", "most", "other", "some", "such", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "should've", "now", "d", "ll", "m", "o",
      "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn",
      "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
      "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn", "shouldn't",
      "wasn", "wasn't", "weren", "weren't", "won", "wouldn", "wouldn't"};
  return words;
}

std::vector<std::string> normalize_text(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords().count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalpha(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::optional<std::size_t> TfidfModel::index_of(std::string_view term) const {
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), term);
  if (it == vocabulary.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - vocabulary.begin());
}

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs, std::size_t max_vocab) {
  const bool any = std::any_of(docs.begin(), docs.end(), [](const auto& d) { return !d.empty(); });
  if (!any) throw Error(ErrorCode::EmptyCorpus, "no non-empty documents");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_vocab) ranked.resize(max_vocab);
  std::sort(ranked.begin(), ranked.end());  // vocabulary stored lexicographically

  TfidfModel model;
  model.documents = docs.size();
  const double n = static_cast<double>(docs.size());
  for (auto& [term, count] : ranked) {
    model.vocabulary.push_back(term);
    model.df.push_back(count);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

Eigen::VectorXd transform_tfidf(const TfidfModel& model, const std::vector<std::string>& doc) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.vocabulary.size()));
  for (const auto& t : doc) {
    if (auto i = model.index_of(t)) v[static_cast<Eigen::Index>(*i)] += 1.0;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= model.idf[static_cast<std::size_t>(i)];
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

Eigen::MatrixXd tfidf_matrix(const TfidfModel& model, const std::vector<std::vector<std::string>>& docs) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(model.vocabulary.size()));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = transform_tfidf(model, docs[i]).transpose();
  }
  return m;
}

PatientFrame apply_text_block(const PatientFrame& cohort, const std::vector<TextBlock>& blocks) {
  const Column& hadm = cohort.column("hadm_id");
  const std::size_t n = cohort.rows();
  std::vector<std::int64_t> ids(n, std::numeric_limits<std::int64_t>::min());
  for (std::size_t r = 0; r < n; ++r) {
    if (!hadm.is_missing(r)) ids[r] = static_cast<std::int64_t>(hadm.number(r));
  }
  PatientFrame out = cohort;
  std::vector<std::string> indicator_order;
  std::map<std::string, std::vector<double>> indicators;
  for (const TextBlock& b : blocks) {
    if (!b.indicator.empty() && !indicators.count(b.indicator)) {
      indicator_order.push_back(b.indicator);
      indicators[b.indicator].assign(n, 0.0);
    }
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(b.dim), std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
      auto it = b.vectors.find(ids[r]);
      if (it == b.vectors.end()) continue;
      if (it->second.size() != b.dim) {
        throw Error(ErrorCode::LayoutMismatch, b.prefix + ": vector size differs from block dimension");
      }
      for (int i = 0; i < b.dim; ++i) cols[static_cast<std::size_t>(i)][r] = it->second[i];
      if (!b.indicator.empty()) indicators[b.indicator][r] = 1.0;
    }
    for (int i = 0; i < b.dim; ++i) {
      out = out.with_column(Column::numeric(b.prefix + std::to_string(i + 1), std::move(cols[static_cast<std::size_t>(i)])));
    }
  }
  for (const auto& name : indicator_order) out = out.with_column(Column::numeric(name, indicators[name]));
  return out;
}

void TextConfig::validate() const {
  if (!(svd_target > 0.0 && svd_target <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "text.svd_target: must lie in (0, 1]");
  }
  if (!(pca_target > 0.0 && pca_target <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "text.pca_target: must lie in (0, 1]");
  }
  if (max_vocab == 0) throw Error(ErrorCode::ConfigInvalid, "text.max_vocab: must be >= 1");
}

namespace {

TextBlock tfidf_block(const std::vector<NoteRecord>& notes, const std::set<std::int64_t>& fit_hadm,
                      const TextConfig& cfg, const std::string& prefix, const std::string& indicator,
                      TextResult& result) {
  std::vector<std::vector<std::string>> tokens, fit_tokens;
  for (const auto& n : notes) {
    tokens.push_back(normalize_text(n.text));
    if (fit_hadm.count(n.hadm_id)) fit_tokens.push_back(tokens.back());
  }
  TfidfModel model = fit_tfidf(fit_tokens, cfg.max_vocab);
  const ReducedBasis basis = fit_reduced_basis(tfidf_matrix(model, fit_tokens), BasisKind::Svd, cfg.svd_target);
  const Eigen::MatrixXd reduced = project(basis, tfidf_matrix(model, tokens));
  TextBlock block{prefix, indicator, basis.retained, {}};
  for (std::size_t i = 0; i < notes.size(); ++i) {
    block.vectors[notes[i].hadm_id] = reduced.row(static_cast<Eigen::Index>(i)).transpose();
  }
  result.tfidf.push_back(std::move(model));
  result.bases.emplace_back(prefix, basis);
  return block;
}

TextBlock embedding_block(const PatientFrame& emb, const std::set<std::int64_t>& cohort_hadm,
                          const std::set<std::int64_t>& fit_hadm, const TextConfig& cfg,
                          const std::string& prefix, const std::string& indicator, TextResult& result) {
  std::vector<std::size_t> value_cols;
  for (std::size_t j = 0; j < emb.cols(); ++j) {
    const Column& c = emb.column(j);
    if (c.is_numeric() && c.name() != "hadm_id" && c.name() != "subject_id" && c.name() != "stay_id") {
      value_cols.push_back(j);
    }
  }
  const Column& hadm = emb.column("hadm_id");
  std::vector<std::int64_t> ids;
  std::vector<std::size_t> rows;
  std::set<std::int64_t> seen;
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    if (hadm.is_missing(r)) continue;
    const auto id = static_cast<std::int64_t>(hadm.number(r));
    if (!cohort_hadm.count(id) || !seen.insert(id).second) continue;
    bool complete = true;
    for (auto j : value_cols) complete = complete && !emb.column(j).is_missing(r);
    if (!complete) continue;
    ids.push_back(id);
    rows.push_back(r);
  }
  Eigen::MatrixXd all(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(value_cols.size()));
  std::vector<Eigen::Index> fit_rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < value_cols.size(); ++j) {
      all(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = emb.column(value_cols[j]).number(rows[i]);
    }
    if (fit_hadm.count(ids[i])) fit_rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (fit_rows.size() < 2) throw Error(ErrorCode::TooFewRows, prefix + ": fewer than two fitting embeddings");
  const ReducedBasis basis = fit_reduced_basis(all(fit_rows, Eigen::all), BasisKind::Pca, cfg.pca_target);
  const Eigen::MatrixXd reduced = project(basis, all);
  TextBlock block{prefix, indicator, basis.retained, {}};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    block.vectors[ids[i]] = reduced.row(static_cast<Eigen::Index>(i)).transpose();
  }
  result.bases.emplace_back(prefix, basis);
  return block;
}

}  // namespace

TextResult build_text_features(const PatientFrame& cohort, const TextInputs& inputs,
                               const std::set<std::int64_t>& fit_hadm, const TextConfig& cfg) {
  cfg.validate();
  TextResult result;
  std::set<std::int64_t> cohort_hadm;
  const Column& hadm = cohort.column("hadm_id");
  for (std::size_t r = 0; r < cohort.rows(); ++r) {
    if (!hadm.is_missing(r)) cohort_hadm.insert(static_cast<std::int64_t>(hadm.number(r)));
  }
  std::vector<TextBlock> blocks;
  Coverage dc, rc;
  const auto dnotes = select_notes(inputs.discharge, cohort, NoteKind::Discharge, &dc);
  const auto rnotes = select_notes(inputs.radiology, cohort, NoteKind::Radiology, &rc);
  result.coverage = {dc, rc};
  blocks.push_back(tfidf_block(dnotes, fit_hadm, cfg, "disch_tfidf_svd_", "has_discharge_note", result));
  blocks.push_back(tfidf_block(rnotes, fit_hadm, cfg, "radio_tfidf_svd_", "has_radiology_note", result));
  if (inputs.discharge_emb) {
    blocks.push_back(embedding_block(*inputs.discharge_emb, cohort_hadm, fit_hadm, cfg,
                                     "discharge_bert_pca_", "has_discharge_note", result));
  }
  if (inputs.radiology_emb) {
    blocks.push_back(embedding_block(*inputs.radiology_emb, cohort_hadm, fit_hadm, cfg,
                                     "radiology_bert_pca_", "has_radiology_note", result));
  }
  std::vector<std::string> keys;
  for (const char* k : {"subject_id", "hadm_id", "stay_id"}) {
    if (cohort.has(k)) keys.emplace_back(k);
  }
  result.features = apply_text_block(cohort.select(keys), blocks);
  return result;
}

}  // namespace riskforge::text
