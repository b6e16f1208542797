#include "riskforge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "riskforge/csv.hpp"
#include "riskforge/rng.hpp"

namespace riskforge {

namespace {

using Setter = std::function<void(const std::string&)>;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

[[noreturn]] void invalid(const std::string& field, const std::string& reason) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + reason);
}

double to_double(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) invalid(field, "not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) invalid(field, "not an integer: '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& field, const std::string& text) {
  const long long v = to_int(field, text);
  if (v < 0) invalid(field, "must be >= 0");
  return static_cast<std::size_t>(v);
}

std::uint64_t to_seed(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) invalid(field, "not a seed: '" + s + "'");
  return v;
}

bool to_bool(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  invalid(field, "not a boolean: '" + s + "'");
}

std::vector<std::string> to_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "[lo,hi]", "(lo,hi]", ... or bare "lo,hi" (inclusive).
harmonize::PlausibilityRule to_rule(const std::string& field, const std::string& variable, const std::string& text) {
  std::string s = trim(text);
  harmonize::PlausibilityRule rule;
  rule.variable = variable;
  if (!s.empty() && (s.front() == '[' || s.front() == '(')) {
    rule.lower_inclusive = s.front() == '[';
    s.erase(0, 1);
  }
  if (!s.empty() && (s.back() == ']' || s.back() == ')')) {
    rule.upper_inclusive = s.back() == ']';
    s.pop_back();
  }
  const auto parts = to_list(s);
  if (parts.size() != 2) invalid(field, "expected lower,upper");
  rule.lower = to_double(field, parts[0]);
  rule.upper = to_double(field, parts[1]);
  if (!(rule.lower < rule.upper)) invalid(field, "lower must be < upper");
  return rule;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(trim(text));
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::string fmt(double v) { return format_number(v); }

}  // namespace

std::uint64_t RunConfig::stage_seed(std::string_view stage) const { return derive_seed(seed, stage); }

std::filesystem::path RunConfig::raw_dir() const { return input_dir.empty() ? output_dir / "raw" : input_dir; }

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, Warnings* warnings) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    invalid("config", std::string("line ") + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg;
  cfg.output_dir = (base_dir / "run").lexically_normal();
  bool seed_set = false;
  bool beta_replaced = false;

  std::map<std::string, std::map<std::string, Setter>> fixed{
      {"paths",
       {{"input_dir", [&](const std::string& v) { cfg.input_dir = resolve(base_dir, v); }},
        {"output_dir", [&](const std::string& v) { cfg.output_dir = resolve(base_dir, v); }}}},
      {"cohort",
       {{"icd_codes", [&](const std::string& v) { cfg.cohort.icd_codes = to_list(v); }},
        {"min_age", [&](const std::string& v) { cfg.cohort.min_age = static_cast<int>(to_int("cohort.min_age", v)); }}}},
      {"text",
       {{"max_vocab", [&](const std::string& v) { cfg.text.max_vocab = to_count("text.max_vocab", v); }},
        {"svd_target", [&](const std::string& v) { cfg.text.svd_target = to_double("text.svd_target", v); }},
        {"pca_target", [&](const std::string& v) { cfg.text.pca_target = to_double("text.pca_target", v); }},
        {"use_embeddings", [&](const std::string& v) { cfg.use_embeddings = to_bool("text.use_embeddings", v); }}}},
      {"lasso",
       {{"folds", [&](const std::string& v) { cfg.lasso.folds = static_cast<int>(to_int("lasso.folds", v)); }},
        {"grid_size", [&](const std::string& v) { cfg.lasso.grid_size = to_count("lasso.grid_size", v); }},
        {"min_ratio", [&](const std::string& v) { cfg.lasso.min_ratio = to_double("lasso.min_ratio", v); }},
        {"rule",
         [&](const std::string& v) {
           try {
             cfg.lasso.rule = lasso::parse_rule(trim(v));
           } catch (const Error&) {
             invalid("lasso.rule", "expected min, 1se or pct75");
           }
         }}}},
      {"gbt",
       {{"max_depth", [&](const std::string& v) { cfg.gbt.max_depth = static_cast<int>(to_int("gbt.max_depth", v)); }},
        {"learning_rate", [&](const std::string& v) { cfg.gbt.learning_rate = to_double("gbt.learning_rate", v); }},
        {"n_trees", [&](const std::string& v) { cfg.gbt.n_trees = static_cast<int>(to_int("gbt.n_trees", v)); }},
        {"subsample", [&](const std::string& v) { cfg.gbt.subsample = to_double("gbt.subsample", v); }},
        {"reg_lambda", [&](const std::string& v) { cfg.gbt.reg_lambda = to_double("gbt.reg_lambda", v); }},
        {"gamma", [&](const std::string& v) { cfg.gbt.gamma = to_double("gbt.gamma", v); }},
        {"top_k", [&](const std::string& v) { cfg.top_k = to_count("gbt.top_k", v); }},
        {"top_k_text", [&](const std::string& v) { cfg.top_k_text = to_count("gbt.top_k_text", v); }}}},
      {"mice",
       {{"m", [&](const std::string& v) { cfg.mice.m = static_cast<int>(to_int("mice.m", v)); }},
        {"max_iter", [&](const std::string& v) { cfg.mice.max_iter = static_cast<int>(to_int("mice.max_iter", v)); }},
        {"ridge_penalty", [&](const std::string& v) { cfg.mice.ridge_penalty = to_double("mice.ridge_penalty", v); }}}},
      {"vif",
       {{"warn", [&](const std::string& v) { cfg.vif.warn_threshold = to_double("vif.warn", v); }},
        {"drop", [&](const std::string& v) { cfg.vif.drop_threshold = to_double("vif.drop", v); }},
        {"preferences",
         [&](const std::string& v) {
           cfg.vif.preferences.clear();
           for (const auto& pair : to_list(v)) {
             const auto colon = pair.find(':');
             if (colon == std::string::npos) invalid("vif.preferences", "expected keep:drop pairs");
             cfg.vif.preferences.emplace_back(trim(pair.substr(0, colon)), trim(pair.substr(colon + 1)));
           }
         }},
        {"exempt", [&](const std::string& v) { cfg.vif.exempt = to_list(v); }}}},
      {"eval",
       {{"calibration_bins", [&](const std::string& v) { cfg.calibration_bins = to_count("eval.calibration_bins", v); }},
        {"threshold", [&](const std::string& v) { cfg.threshold = to_double("eval.threshold", v); }}}},
      {"split",
       {{"train_fraction", [&](const std::string& v) { cfg.train_fraction = to_double("split.train_fraction", v); }},
        {"seed",
         [&](const std::string& v) {
           cfg.seed = to_seed("split.seed", v);
           seed_set = true;
         }}}},
      {"synth",
       {{"n_patients", [&](const std::string& v) { cfg.synth.n_patients = to_count("synth.n_patients", v); }},
        {"prevalence", [&](const std::string& v) { cfg.synth.prevalence_target = to_double("synth.prevalence", v); }},
        {"text_signal_strength",
         [&](const std::string& v) { cfg.synth.text_signal_strength = to_double("synth.text_signal_strength", v); }},
        {"missing_rate", [&](const std::string& v) { cfg.synth.missing_rate = to_double("synth.missing_rate", v); }},
        {"discharge_coverage",
         [&](const std::string& v) { cfg.synth.discharge_coverage = to_double("synth.discharge_coverage", v); }},
        {"radiology_coverage",
         [&](const std::string& v) { cfg.synth.radiology_coverage = to_double("synth.radiology_coverage", v); }},
        {"embedding_dim",
         [&](const std::string& v) { cfg.synth.embedding_dim = static_cast<int>(to_int("synth.embedding_dim", v)); }},
        {"seed",
         [&](const std::string& v) {
           cfg.synth.seed = to_seed("synth.seed", v);
           cfg.synth_seed_set = true;
         }}}},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) invalid(section, "key outside of any section");
    for (const auto& [key, node] : body) {
      const std::string field = section + "." + key;
      const std::string value = node.data();
      if (section == "impute") {
        impute::Method m{};
        try {
          m = impute::parse_method(trim(value));
        } catch (const Error&) {
          invalid(field, "expected mean, median, mice, zero or none");
        }
        auto it = std::find_if(cfg.policies.begin(), cfg.policies.end(),
                               [&](const impute::ImputePolicy& p) { return p.variable == key; });
        if (it != cfg.policies.end()) {
          it->method = m;
        } else {
          cfg.policies.push_back({key, m});
        }
      } else if (section == "plausibility") {
        auto rule = to_rule(field, key, value);
        auto& rules = cfg.harmonize.plausibility;
        auto it = std::find_if(rules.begin(), rules.end(),
                               [&](const harmonize::PlausibilityRule& r) { return r.variable == key; });
        if (it != rules.end()) {
          rule.unit = it->unit;
          *it = rule;
        } else {
          rules.push_back(rule);
        }
      } else if (section == "synth_beta") {
        if (!beta_replaced) cfg.synth.true_beta.clear();
        beta_replaced = true;
        cfg.synth.true_beta[key] = to_double(field, value);
      } else if (section == "synth_missing") {
        cfg.synth.missing_rates[key] = to_double(field, value);
      } else {
        auto sec = fixed.find(section);
        if (sec == fixed.end()) invalid(section, "unknown section");
        auto setter = sec->second.find(key);
        if (setter == sec->second.end()) invalid(field, "unknown key");
        setter->second(value);
      }
    }
  }
  if (!seed_set) {
    warn(warnings, ErrorCode::ConfigInvalid, "split.seed: not set, using default " + std::to_string(kDefaultSeed));
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Warnings* warnings) {
  const std::string text = read_text(path);
  return parse_config(text, std::filesystem::absolute(path).parent_path(), warnings);
}

void validate_config(const RunConfig& cfg) {
  cfg.cohort.validate();
  for (const auto& r : cfg.harmonize.plausibility) r.validate();
  cfg.mice.validate();
  cfg.text.validate();
  cfg.lasso.validate();
  cfg.gbt.validate();
  cfg.synth.validate();
  if (cfg.top_k == 0) invalid("gbt.top_k", "must be >= 1");
  if (cfg.top_k_text == 0) invalid("gbt.top_k_text", "must be >= 1");
  if (!(cfg.vif.warn_threshold > 1.0)) invalid("vif.warn", "must be > 1");
  if (!(cfg.vif.drop_threshold >= cfg.vif.warn_threshold)) invalid("vif.drop", "must be >= vif.warn");
  if (cfg.calibration_bins < 1) invalid("eval.calibration_bins", "must be >= 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) invalid("eval.threshold", "must lie in (0, 1)");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) invalid("split.train_fraction", "must lie in (0, 1)");
  if (!(cfg.synth.prevalence_target > 0.0 && cfg.synth.prevalence_target < 1.0)) {
    invalid("synth.prevalence", "must lie in (0, 1)");
  }
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream out;
  auto ref = [&](bool matches, const char* note) {
    if (matches) out << "; standard setting: " << note << '\n';
  };
  out << "[paths]\n";
  if (!cfg.input_dir.empty()) out << "input_dir = " << cfg.input_dir.string() << '\n';
  out << "output_dir = " << cfg.output_dir.string() << "\n\n";

  out << "[cohort]\n";
  const cohort::CohortConfig cohort_default;
  ref(cfg.cohort.icd_codes == cohort_default.icd_codes, "cardiac arrest, ICD-9 4275 and ICD-10 I46 family");
  out << "icd_codes = ";
  for (std::size_t i = 0; i < cfg.cohort.icd_codes.size(); ++i) out << (i ? ", " : "") << cfg.cohort.icd_codes[i];
  out << '\n';
  ref(cfg.cohort.min_age == 18, "adults only");
  out << "min_age = " << cfg.cohort.min_age << "\n\n";

  out << "[text]\n";
  ref(cfg.text.max_vocab == 500, "500-term vocabulary per note type");
  out << "max_vocab = " << cfg.text.max_vocab << '\n';
  ref(cfg.text.svd_target == 0.80, "truncated SVD keeps 80% of variance");
  out << "svd_target = " << fmt(cfg.text.svd_target) << '\n';
  ref(cfg.text.pca_target == 0.90, "embedding PCA keeps 90% of variance");
  out << "pca_target = " << fmt(cfg.text.pca_target) << '\n';
  out << "use_embeddings = " << (cfg.use_embeddings ? "true" : "false") << "\n\n";

  out << "[lasso]\n";
  ref(cfg.lasso.folds == 10, "10-fold cross-validation");
  out << "folds = " << cfg.lasso.folds << '\n';
  out << "grid_size = " << cfg.lasso.grid_size << '\n';
  out << "min_ratio = " << fmt(cfg.lasso.min_ratio) << '\n';
  ref(cfg.lasso.rule == lasso::Rule::Pct75, "75th percentile of the 1-SE range");
  out << "rule = " << lasso::to_string(cfg.lasso.rule) << "\n\n";

  out << "[gbt]\n";
  ref(cfg.gbt.max_depth == 3, "max_depth 3");
  out << "max_depth = " << cfg.gbt.max_depth << '\n';
  ref(cfg.gbt.learning_rate == 0.05, "learning rate 0.05");
  out << "learning_rate = " << fmt(cfg.gbt.learning_rate) << '\n';
  ref(cfg.gbt.n_trees == 100, "100 estimators");
  out << "n_trees = " << cfg.gbt.n_trees << '\n';
  ref(cfg.gbt.subsample == 0.8, "row subsample 0.8");
  out << "subsample = " << fmt(cfg.gbt.subsample) << '\n';
  out << "reg_lambda = " << fmt(cfg.gbt.reg_lambda) << '\n';
  out << "gamma = " << fmt(cfg.gbt.gamma) << '\n';
  ref(cfg.top_k == 17, "17 top-ranked structured features");
  out << "top_k = " << cfg.top_k << '\n';
  ref(cfg.top_k_text == 64, "64 top-ranked multimodal features");
  out << "top_k_text = " << cfg.top_k_text << "\n\n";

  out << "[mice]\n";
  ref(cfg.mice.m == 5, "m = 5 imputations");
  out << "m = " << cfg.mice.m << '\n';
  out << "max_iter = " << cfg.mice.max_iter << '\n';
  out << "ridge_penalty = " << fmt(cfg.mice.ridge_penalty) << "\n\n";

  out << "[impute]\n";
  for (const auto& p : cfg.policies) out << p.variable << " = " << impute::to_string(p.method) << '\n';
  out << '\n';

  out << "[plausibility]\n";
  for (const auto& r : cfg.harmonize.plausibility) {
    out << r.variable << " = " << (r.lower_inclusive ? '[' : '(') << fmt(r.lower) << ", " << fmt(r.upper)
        << (r.upper_inclusive ? ']' : ')') << '\n';
  }
  out << '\n';

  out << "[vif]\n";
  ref(cfg.vif.warn_threshold == 5.0, "VIF above 5 flagged");
  out << "warn = " << fmt(cfg.vif.warn_threshold) << '\n';
  ref(cfg.vif.drop_threshold == 10.0, "VIF above 10 dropped");
  out << "drop = " << fmt(cfg.vif.drop_threshold) << '\n';
  ref(cfg.vif.preferences == glm::VifConfig{}.preferences, "PT over INR, Hemoglobin over Hematocrit, MBP over DBP");
  out << "preferences = ";
  for (std::size_t i = 0; i < cfg.vif.preferences.size(); ++i) {
    out << (i ? ", " : "") << cfg.vif.preferences[i].first << ':' << cfg.vif.preferences[i].second;
  }
  out << '\n';
  if (!cfg.vif.exempt.empty()) {
    out << "exempt = ";
    for (std::size_t i = 0; i < cfg.vif.exempt.size(); ++i) out << (i ? ", " : "") << cfg.vif.exempt[i];
    out << '\n';
  }
  out << '\n';

  out << "[eval]\n";
  out << "calibration_bins = " << cfg.calibration_bins << '\n';
  out << "threshold = " << fmt(cfg.threshold) << "\n\n";

  out << "[split]\n";
  out << "train_fraction = " << fmt(cfg.train_fraction) << '\n';
  out << "seed = " << cfg.seed << "\n\n";

  out << "[synth]\n";
  out << "n_patients = " << cfg.synth.n_patients << '\n';
  ref(cfg.synth.prevalence_target == 0.52, "52% in-hospital mortality");
  out << "prevalence = " << fmt(cfg.synth.prevalence_target) << '\n';
  out << "text_signal_strength = " << fmt(cfg.synth.text_signal_strength) << '\n';
  out << "missing_rate = " << fmt(cfg.synth.missing_rate) << '\n';
  ref(cfg.synth.discharge_coverage == 0.70, "discharge note coverage near 70%");
  out << "discharge_coverage = " << fmt(cfg.synth.discharge_coverage) << '\n';
  ref(cfg.synth.radiology_coverage == 0.71, "radiology note coverage near 71%");
  out << "radiology_coverage = " << fmt(cfg.synth.radiology_coverage) << '\n';
  ref(cfg.synth.embedding_dim == 768, "768-dimensional note embeddings");
  out << "embedding_dim = " << cfg.synth.embedding_dim << '\n';
  if (cfg.synth_seed_set) out << "seed = " << cfg.synth.seed << '\n';
  out << '\n';

  out << "[synth_beta]\n";
  for (const auto& [k, v] : cfg.synth.true_beta) out << k << " = " << fmt(v) << '\n';
  if (!cfg.synth.missing_rates.empty()) {
    out << "\n[synth_missing]\n";
    for (const auto& [k, v] : cfg.synth.missing_rates) out << k << " = " << fmt(v) << '\n';
  }
  return out.str();
}

}  // namespace riskforge
