#include "riskforge/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"
#include "riskforge/rng.hpp"

namespace riskforge::gbt {

namespace {

constexpr std::string_view kMagic = "riskforge-gbt v1";

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class Grower {
 public:
  Grower(const Eigen::MatrixXd& x, const std::vector<std::vector<Eigen::Index>>& order,
         const std::vector<std::vector<Eigen::Index>>& missing, const GbtConfig& cfg)
      : x_(x), order_(order), missing_(missing), cfg_(cfg), node_of_(static_cast<std::size_t>(x.rows()), -1) {}

  Tree grow(const std::vector<Eigen::Index>& rows, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
            std::vector<double>& importance) {
    Tree tree;
    tree.nodes.push_back({});
    std::fill(node_of_.begin(), node_of_.end(), -1);
    for (auto r : rows) node_of_[static_cast<std::size_t>(r)] = 0;
    build(tree, 0, 0, g, h, importance);
    return tree;
  }

 private:
  double score(double gs, double hs) const { return gs * gs / (hs + cfg_.reg_lambda); }

  void build(Tree& tree, int id, int depth, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
             std::vector<double>& importance) {
    double gs = 0.0, hs = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < node_of_.size(); ++r) {
      if (node_of_[r] != id) continue;
      gs += g[static_cast<Eigen::Index>(r)];
      hs += h[static_cast<Eigen::Index>(r)];
      ++count;
    }
    const Split split = depth < cfg_.max_depth && count >= 2 ? best_split(id, gs, hs, g, h) : Split{};
    if (split.feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].weight = -gs / (hs + cfg_.reg_lambda);
      return;
    }
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.push_back({});
    tree.nodes.push_back({});
    Node& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.gain = split.gain;
    node.left = left;
    node.right = right;
    importance[static_cast<std::size_t>(split.feature)] += split.gain;
    for (std::size_t r = 0; r < node_of_.size(); ++r) {
      if (node_of_[r] != id) continue;
      const double v = x_(static_cast<Eigen::Index>(r), split.feature);
      node_of_[r] = (std::isnan(v) || v < split.threshold) ? left : right;
    }
    build(tree, left, depth + 1, g, h, importance);
    build(tree, right, depth + 1, g, h, importance);
  }

  Split best_split(int id, double gs, double hs, const Eigen::VectorXd& g, const Eigen::VectorXd& h) const {
    Split best;
    const double parent = score(gs, hs);
    for (int f = 0; f < static_cast<int>(x_.cols()); ++f) {
      double gl = 0.0, hl = 0.0;
      for (auto r : missing_[static_cast<std::size_t>(f)]) {
        if (node_of_[static_cast<std::size_t>(r)] != id) continue;
        gl += g[r];
        hl += h[r];
      }
      const auto& ord = order_[static_cast<std::size_t>(f)];
      Eigen::Index prev = -1;
      for (auto r : ord) {
        if (node_of_[static_cast<std::size_t>(r)] != id) continue;
        if (prev >= 0) {
          const double a = x_(prev, f), b = x_(r, f);
          if (a < b) {
            const double gain = 0.5 * (score(gl, hl) + score(gs - gl, hs - hl) - parent) - cfg_.gamma;
            if (gain > best.gain) {
              const double mid = a + (b - a) / 2.0;
              best = {f, mid > a ? mid : b, gain};
            }
          }
        }
        gl += g[r];
        hl += h[r];
        prev = r;
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<std::vector<Eigen::Index>>& order_;
  const std::vector<std::vector<Eigen::Index>>& missing_;
  const GbtConfig& cfg_;
  std::vector<int> node_of_;
};

}  // namespace

void GbtConfig::validate() const {
  if (max_depth < 1) throw Error(ErrorCode::ConfigInvalid, "gbt.max_depth: must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "gbt.learning_rate: must lie in (0, 1]");
  }
  if (n_trees < 0) throw Error(ErrorCode::ConfigInvalid, "gbt.n_trees: must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "gbt.subsample: must lie in (0, 1]");
  }
  if (!(reg_lambda >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "gbt.reg_lambda: must be >= 0");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "gbt.gamma: must be >= 0");
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::size_t id = 0;
  while (nodes[id].feature >= 0) {
    const Node& n = nodes[id];
    const double v = row[n.feature];
    id = static_cast<std::size_t>((std::isnan(v) || v < n.threshold) ? n.left : n.right);
  }
  return nodes[id].weight;
}

GbtModel fit_gbt(const FeatureMatrix& x, std::span<const double> y, const GbtConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || n == 0) {
    throw Error(ErrorCode::InvalidArgument, "outcome length does not match design rows");
  }
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "outcome must be 0/1");
  }
  GbtModel model;
  model.feature_names = x.names;
  model.learning_rate = cfg.learning_rate;
  model.importance_gain.assign(static_cast<std::size_t>(x.cols()), 0.0);
  const double prevalence = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  model.base_score = std::clamp(std::log(prevalence / (1.0 - prevalence)), -10.0, 10.0);

  std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(x.cols()));
  std::vector<std::vector<Eigen::Index>> missing(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& ord = order[static_cast<std::size_t>(f)];
    for (Eigen::Index i = 0; i < n; ++i) {
      (std::isnan(x.values(i, f)) ? missing[static_cast<std::size_t>(f)] : ord).push_back(i);
    }
    std::stable_sort(ord.begin(), ord.end(), [&](Eigen::Index a, Eigen::Index b) {
      return x.values(a, f) < x.values(b, f);
    });
  }

  Rng rng(cfg.seed);
  Grower grower(x.values, order, missing, cfg);
  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_score);
  Eigen::VectorXd g(n), h(n);
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - y[static_cast<std::size_t>(i)];
      h[i] = p * (1.0 - p);
    }
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (cfg.subsample >= 1.0 || uniform01(rng) < cfg.subsample) rows.push_back(i);
    }
    Tree tree = grower.grow(rows, g, h, model.importance_gain);
    for (Eigen::Index i = 0; i < n; ++i) margin[i] += cfg.learning_rate * tree.predict(x.values.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Eigen::VectorXd predict_margin(const GbtModel& model, const FeatureMatrix& x) {
  Eigen::MatrixXd cols(x.rows(), static_cast<Eigen::Index>(model.feature_names.size()));
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    cols.col(static_cast<Eigen::Index>(j)) = x.values.col(x.index_of(model.feature_names[j]));
  }
  Eigen::VectorXd margin = Eigen::VectorXd::Constant(x.rows(), model.base_score);
  for (const Tree& t : model.trees) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) margin[i] += model.learning_rate * t.predict(cols.row(i));
  }
  return margin;
}

std::vector<double> predict_proba(const GbtModel& model, const FeatureMatrix& x) {
  const Eigen::VectorXd m = predict_margin(model, x);
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(m[i]);
  return out;
}

std::vector<Importance> gain_importance(const GbtModel& model) {
  std::vector<Importance> out;
  for (std::size_t j = 0; j < model.importance_gain.size(); ++j) {
    if (model.importance_gain[j] > 0.0) {
      out.push_back({model.feature_names[j], static_cast<int>(j), model.importance_gain[j]});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    return a.gain != b.gain ? a.gain > b.gain : a.index < b.index;
  });
  return out;
}

std::vector<std::string> top_k_features(const GbtModel& model, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "top_k_features needs k >= 1");
  std::vector<std::string> out;
  for (const auto& imp : gain_importance(model)) {
    if (out.size() == k) break;
    out.push_back(imp.feature);
  }
  return out;
}

PatientFrame importance_frame(const GbtModel& model) {
  const auto ranked = gain_importance(model);
  double total = 0.0;
  for (const auto& r : ranked) total += r.gain;
  std::vector<std::string> names;
  std::vector<double> rank, gain, rel;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    names.push_back(ranked[i].feature);
    rank.push_back(static_cast<double>(i + 1));
    gain.push_back(ranked[i].gain);
    rel.push_back(ranked[i].gain / total);
  }
  return PatientFrame({Column::numeric("rank", std::move(rank)), Column::categorical("feature", std::move(names)),
                       Column::numeric("gain", std::move(gain)), Column::numeric("relative_gain", std::move(rel))});
}

std::string serialize(const GbtModel& model) {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "base_score " << format_number(model.base_score) << '\n';
  out << "learning_rate " << format_number(model.learning_rate) << '\n';
  out << "features " << model.feature_names.size() << '\n';
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    out << model.feature_names[j] << ' ' << format_number(model.importance_gain[j]) << '\n';
  }
  out << "trees " << model.trees.size() << '\n';
  for (const Tree& t : model.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const Node& n : t.nodes) {
      out << n.feature << ' ' << format_number(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
          << format_number(n.weight) << ' ' << format_number(n.gain) << '\n';
    }
  }
  return out.str();
}

GbtModel deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& what) { return Error(ErrorCode::IoFailure, "gbt model: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("unsupported header '" + line + "'");
  GbtModel model;
  std::string key;
  std::size_t count = 0;
  in >> key >> model.base_score;
  if (key != "base_score") throw fail("expected base_score");
  in >> key >> model.learning_rate;
  if (key != "learning_rate") throw fail("expected learning_rate");
  in >> key >> count;
  if (key != "features") throw fail("expected features");
  for (std::size_t j = 0; j < count; ++j) {
    std::string name;
    double gain = 0.0;
    in >> name >> gain;
    model.feature_names.push_back(name);
    model.importance_gain.push_back(gain);
  }
  in >> key >> count;
  if (key != "trees") throw fail("expected trees");
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t nodes = 0;
    in >> key >> nodes;
    if (key != "tree") throw fail("expected tree");
    Tree tree;
    for (std::size_t i = 0; i < nodes; ++i) {
      Node n;
      in >> n.feature >> n.threshold >> n.left >> n.right >> n.weight >> n.gain;
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }
  if (!in) throw fail("truncated input");
  return model;
}

}  // namespace riskforge::gbt
