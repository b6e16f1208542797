#include "riskforge/news2.hpp"

#include <cmath>
#include <numeric>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"

namespace riskforge::news2 {

int Band::score(double value) const {
  if (!std::isfinite(value) || value < min_valid || value > max_valid) {
    throw Error(ErrorCode::OutOfRange, parameter + " = " + format_number(value));
  }
  for (std::size_t i = 0; i < upper.size(); ++i) {
    if (value <= upper[i]) return points[i];
  }
  return points.back();
}

const std::vector<Band>& chart() {
  static const std::vector<Band> bands{
      {"RR", {8, 11, 20, 24}, {3, 1, 0, 2, 3}, 0, 100},
      {"SpO2", {91, 93, 95}, {3, 2, 1, 0}, 0, 100},
      {"SBP", {90, 100, 110, 219}, {3, 2, 1, 0, 3}, 0, 400},
      {"HR", {40, 50, 90, 110, 130}, {3, 1, 0, 1, 2, 3}, 0, 400},
      {"BT", {35.0, 36.0, 38.0, 39.0}, {3, 1, 0, 1, 2}, 20, 46},
  };
  return bands;
}

std::array<int, 6> subscores(const News2Input& in) {
  const auto& c = chart();
  if (!std::isfinite(in.gcs_total) || in.gcs_total < 3.0 || in.gcs_total > 15.0) {
    throw Error(ErrorCode::OutOfRange, "GCS_Total = " + format_number(in.gcs_total));
  }
  return {c[0].score(in.rr), c[1].score(in.spo2), c[2].score(in.sbp),
          c[3].score(in.hr), c[4].score(in.bt),   in.gcs_total < 15.0 ? 3 : 0};
}

int news2_score(const News2Input& in) {
  const auto s = subscores(in);
  return std::accumulate(s.begin(), s.end(), 0);
}

std::vector<double> score_frame(const PatientFrame& frame, bool bt_fahrenheit) {
  const Column& rr = frame.column("RR");
  const Column& spo2 = frame.column("SpO2");
  const Column& sbp = frame.column("SBP");
  const Column& hr = frame.column("HR");
  const Column& bt = frame.column("BT");
  const Column& gcs = frame.column("GCS_Total");
  std::vector<double> out;
  out.reserve(frame.rows());
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    for (const Column* c : {&rr, &spo2, &sbp, &hr, &bt, &gcs}) {
      if (c->is_missing(r)) throw Error(ErrorCode::OutOfRange, c->name() + " is missing at row " + std::to_string(r));
    }
    const double temp = bt_fahrenheit ? (bt.number(r) - 32.0) * 5.0 / 9.0 : bt.number(r);
    out.push_back(news2_score({rr.number(r), spo2.number(r), sbp.number(r), hr.number(r), temp, gcs.number(r)}));
  }
  return out;
}

}  // namespace riskforge::news2
