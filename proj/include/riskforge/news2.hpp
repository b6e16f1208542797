#pragma once

#include <array>
#include <string>
#include <vector>

#include "riskforge/frame.hpp"

namespace riskforge::news2 {

struct News2Input {
  double rr = 0.0;    // breaths/min
  double spo2 = 0.0;  // %
  double sbp = 0.0;   // mmHg
  double hr = 0.0;    // bpm
  double bt = 0.0;    // degrees C
  double gcs_total = 15.0;
};

/// One banded parameter. Band i covers (upper[i-1], upper[i]]; the last band
/// is open-ended. Fractional (averaged) readings fall into the band whose
/// upper bound they do not exceed.
struct Band {
  std::string parameter;
  std::vector<double> upper;  // inclusive upper bounds, ascending
  std::vector<int> points;    // one more entry than `upper`
  double min_valid = 0.0;
  double max_valid = 0.0;

  int score(double value) const;  // throws OutOfRange
};

/// RR, SpO2, SBP, HR, BT bands of the published chart.
const std::vector<Band>& chart();

/// rr, spo2, sbp, hr, bt, consciousness (GCS < 15 -> 3).
std::array<int, 6> subscores(const News2Input& in);

int news2_score(const News2Input& in);

/// Scores every row of a frame holding RR, SpO2, SBP, HR, BT and GCS_Total.
/// `bt_fahrenheit` converts BT before banding.
std::vector<double> score_frame(const PatientFrame& frame, bool bt_fahrenheit = true);

}  // namespace riskforge::news2
