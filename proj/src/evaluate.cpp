#include "riskforge/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskforge/error.hpp"

namespace riskforge::eval {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> y) {
  if (a.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "scores and outcome differ in length");
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "outcome must be 0/1");
  }
}

void check_probs(std::span<const double> probs) {
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::OutOfRange, "probability outside [0, 1]");
  }
}

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

}  // namespace

RocCurve roc(std::span<const double> scores, std::span<const double> y) {
  check_lengths(scores, y);
  const double pos = std::accumulate(y.begin(), y.end(), 0.0);
  const double neg = static_cast<double>(y.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error(ErrorCode::SingleClass, "roc needs both outcome classes");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorCode::InvalidArgument, "roc scores contain NaN");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.tpr.push_back(0.0);
  c.fpr.push_back(0.0);
  double tp = 0.0, fp = 0.0;
  double area2 = 0.0;  // twice the area in count units
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    const double tp0 = tp, fp0 = fp;
    while (i < idx.size() && scores[idx[i]] == s) {
      (y[idx[i]] == 1.0 ? tp : fp) += 1.0;
      ++i;
    }
    area2 += (fp - fp0) * (tp + tp0);
    c.thresholds.push_back(s);
    c.tpr.push_back(tp / pos);
    c.fpr.push_back(fp / neg);
  }
  c.auc = area2 / (2.0 * pos * neg);
  return c;
}

std::vector<CalibrationBin> calibration(std::span<const double> probs, std::span<const double> y, std::size_t bins) {
  check_lengths(probs, y);
  check_probs(probs);
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "calibration needs at least one bin");
  const std::size_t n = probs.size();
  if (n < bins) {
    throw Error(ErrorCode::TooFewRows, std::to_string(n) + " rows for " + std::to_string(bins) + " bins");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end) in sorted order
  for (std::size_t b = 0; b < bins; ++b) ranges.emplace_back(b * n / bins, (b + 1) * n / bins);
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& r : ranges) {
    if (!merged.empty() && probs[idx[merged.back().second - 1]] == probs[idx[r.first]]) {
      merged.back().second = r.second;
    } else {
      merged.push_back(r);
    }
  }
  std::vector<CalibrationBin> out;
  for (const auto& [lo, hi] : merged) {
    CalibrationBin bin;
    bin.count = hi - lo;
    bin.lower = probs[idx[lo]];
    bin.upper = probs[idx[hi - 1]];
    double sp = 0.0, sy = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      sp += probs[idx[k]];
      sy += y[idx[k]];
    }
    bin.mean_prob = sp / static_cast<double>(bin.count);
    bin.event_rate = sy / static_cast<double>(bin.count);
    out.push_back(bin);
  }
  return out;
}

std::vector<double> dca_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 99; ++k) g.push_back(k / 100.0);
  return g;
}

DcaCurve decision_curve(std::span<const double> probs, std::span<const double> y, std::span<const double> grid) {
  check_lengths(probs, y);
  check_probs(probs);
  const double n = static_cast<double>(y.size());
  if (n == 0.0) throw Error(ErrorCode::TooFewRows, "decision curve needs rows");
  DcaCurve c;
  c.prevalence = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double pi = c.prevalence;
  for (double t : grid) {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidArgument, "dca threshold outside (0, 1)");
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] >= t) (y[i] == 1.0 ? tp : fp) += 1.0;
    }
    const double odds = t / (1.0 - t);
    const double nb = tp / n - fp / n * odds;
    const double all = pi - (1.0 - pi) * odds;
    c.thresholds.push_back(t);
    c.net_benefit.push_back(nb);
    c.nb_treat_all.push_back(all);
    c.nb_treat_none.push_back(0.0);
    c.standardized_net_benefit.push_back(safe_div(nb, pi));
    c.standardized_treat_all.push_back(safe_div(all, pi));
  }
  return c;
}

ThresholdMetrics threshold_metrics(std::span<const double> probs, std::span<const double> y, double t) {
  check_lengths(probs, y);
  check_probs(probs);
  ThresholdMetrics m;
  m.threshold = t;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= t;
    const bool pos = y[i] == 1.0;
    if (pred && pos) ++m.tp;
    else if (pred) ++m.fp;
    else if (pos) ++m.fn;
    else ++m.tn;
  }
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  m.accuracy = safe_div(d(m.tp + m.tn), d(probs.size()));
  m.precision_pos = safe_div(d(m.tp), d(m.tp + m.fp));
  m.recall_pos = safe_div(d(m.tp), d(m.tp + m.fn));
  m.f1_pos = safe_div(2.0 * d(m.tp), d(2 * m.tp + m.fp + m.fn));
  m.specificity = safe_div(d(m.tn), d(m.tn + m.fp));
  return m;
}

PatientFrame roc_frame(const std::vector<ModelScores>& models, std::span<const double> y) {
  std::vector<std::string> name;
  std::vector<double> thr, tpr, fpr;
  std::vector<std::uint8_t> thr_missing;
  for (const auto& m : models) {
    const RocCurve c = roc(m.probs, y);
    for (std::size_t i = 0; i < c.tpr.size(); ++i) {
      name.push_back(m.model);
      const bool inf = std::isinf(c.thresholds[i]);
      thr.push_back(inf ? std::numeric_limits<double>::quiet_NaN() : c.thresholds[i]);
      thr_missing.push_back(inf ? 1 : 0);
      tpr.push_back(c.tpr[i]);
      fpr.push_back(c.fpr[i]);
    }
  }
  return PatientFrame({Column::categorical("model", std::move(name)),
                       Column::numeric("threshold", std::move(thr), std::move(thr_missing)),
                       Column::numeric("fpr", std::move(fpr)), Column::numeric("tpr", std::move(tpr))});
}

PatientFrame calibration_frame(const std::vector<ModelScores>& models, std::span<const double> y, std::size_t bins) {
  std::vector<std::string> name;
  std::vector<double> bin, count, lo, hi, mp, er;
  for (const auto& m : models) {
    const auto cal = calibration(m.probs, y, bins);
    for (std::size_t b = 0; b < cal.size(); ++b) {
      name.push_back(m.model);
      bin.push_back(static_cast<double>(b + 1));
      count.push_back(static_cast<double>(cal[b].count));
      lo.push_back(cal[b].lower);
      hi.push_back(cal[b].upper);
      mp.push_back(cal[b].mean_prob);
      er.push_back(cal[b].event_rate);
    }
  }
  return PatientFrame({Column::categorical("model", std::move(name)), Column::numeric("bin", std::move(bin)),
                       Column::numeric("count", std::move(count)), Column::numeric("lower", std::move(lo)),
                       Column::numeric("upper", std::move(hi)), Column::numeric("mean_prob", std::move(mp)),
                       Column::numeric("event_rate", std::move(er))});
}

PatientFrame dca_frame(const std::vector<ModelScores>& models, std::span<const double> y) {
  std::vector<std::string> name;
  std::vector<double> thr, nb, snb, all, sall, none;
  const auto grid = dca_grid();
  for (const auto& m : models) {
    const DcaCurve c = decision_curve(m.probs, y, grid);
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
      name.push_back(m.model);
      thr.push_back(c.thresholds[i]);
      nb.push_back(c.net_benefit[i]);
      snb.push_back(c.standardized_net_benefit[i]);
      all.push_back(c.nb_treat_all[i]);
      sall.push_back(c.standardized_treat_all[i]);
      none.push_back(0.0);
    }
  }
  return PatientFrame({Column::categorical("model", std::move(name)), Column::numeric("threshold", std::move(thr)),
                       Column::numeric("net_benefit", std::move(nb)),
                       Column::numeric("standardized_net_benefit", std::move(snb)),
                       Column::numeric("nb_treat_all", std::move(all)),
                       Column::numeric("standardized_treat_all", std::move(sall)),
                       Column::numeric("nb_treat_none", std::move(none))});
}

PatientFrame metrics_frame(const std::vector<ModelScores>& models, std::span<const double> y, double t) {
  std::vector<std::string> name;
  std::vector<double> auc, acc, prec, rec, f1, spec;
  for (const auto& m : models) {
    const ThresholdMetrics tm = threshold_metrics(m.probs, y, t);
    name.push_back(m.model);
    auc.push_back(roc(m.probs, y).auc);
    acc.push_back(tm.accuracy);
    prec.push_back(tm.precision_pos);
    rec.push_back(tm.recall_pos);
    f1.push_back(tm.f1_pos);
    spec.push_back(tm.specificity);
  }
  return PatientFrame({Column::categorical("model", std::move(name)), Column::numeric("auc", std::move(auc)),
                       Column::numeric("accuracy", std::move(acc)), Column::numeric("precision", std::move(prec)),
                       Column::numeric("recall", std::move(rec)), Column::numeric("f1", std::move(f1)),
                       Column::numeric("specificity", std::move(spec))});
}

}  // namespace riskforge::eval
