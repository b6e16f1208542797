#pragma once

#include <span>
#include <string>
#include <vector>

#include "riskforge/frame.hpp"

namespace riskforge::eval {

struct RocCurve {
  std::vector<double> thresholds;  // first entry is +inf, the (0, 0) corner
  std::vector<double> tpr;
  std::vector<double> fpr;
  double auc = 0.0;
};

/// Sweep over unique scores, descending; tied scores move together.
RocCurve roc(std::span<const double> scores, std::span<const double> y);

struct CalibrationBin {
  std::size_t count = 0;
  double lower = 0.0;  // smallest probability in the bin
  double upper = 0.0;  // largest probability in the bin
  double mean_prob = 0.0;
  double event_rate = 0.0;
};

/// Equal-frequency bins by rank; adjacent bins whose boundary probabilities
/// tie are merged, so identical probabilities never straddle two bins.
std::vector<CalibrationBin> calibration(std::span<const double> probs, std::span<const double> y,
                                        std::size_t bins = 10);

struct DcaCurve {
  std::vector<double> thresholds;
  std::vector<double> net_benefit;
  std::vector<double> nb_treat_all;
  std::vector<double> nb_treat_none;
  std::vector<double> standardized_net_benefit;
  std::vector<double> standardized_treat_all;
  double prevalence = 0.0;
};

/// 0.01, 0.02, ..., 0.99.
std::vector<double> dca_grid();

/// Classification at prob >= t; NB = TP/n - FP/n * t/(1-t).
DcaCurve decision_curve(std::span<const double> probs, std::span<const double> y,
                        std::span<const double> grid);

struct ThresholdMetrics {
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision_pos = 0.0;
  double recall_pos = 0.0;
  double f1_pos = 0.0;
  double specificity = 0.0;
};

ThresholdMetrics threshold_metrics(std::span<const double> probs, std::span<const double> y, double t = 0.5);

struct ModelScores {
  std::string model;
  std::vector<double> probs;
};

/// Long-format tables keyed by a `model` column.
PatientFrame roc_frame(const std::vector<ModelScores>& models, std::span<const double> y);
PatientFrame calibration_frame(const std::vector<ModelScores>& models, std::span<const double> y,
                               std::size_t bins = 10);
PatientFrame dca_frame(const std::vector<ModelScores>& models, std::span<const double> y);
PatientFrame metrics_frame(const std::vector<ModelScores>& models, std::span<const double> y, double t = 0.5);

}  // namespace riskforge::eval
