#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "riskforge/csv.hpp"
#include "riskforge/error.hpp"
#include "riskforge/frame.hpp"

using namespace riskforge;

namespace {

Schema event_schema() {
  return {{"subject_id", ColumnType::Numeric, true},
          {"hadm_id", ColumnType::Numeric, true},
          {"valuenum", ColumnType::Numeric, true}};
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no riskforge::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Csv, BlankCellIsMasked) {
  auto f = parse_csv("subject_id,hadm_id,valuenum\n1,10,5.5\n1,10,\n2,20,7\n", event_schema());
  ASSERT_EQ(f.rows(), 3u);
  EXPECT_EQ(f.column("valuenum").missing_count(), 1u);
  EXPECT_TRUE(f.column("valuenum").is_missing(1));
  EXPECT_DOUBLE_EQ(f.column("valuenum").number(2), 7.0);
}

TEST(Csv, HeaderOnlyGivesZeroRows) {
  auto f = parse_csv("subject_id,hadm_id,valuenum\n", event_schema());
  EXPECT_EQ(f.rows(), 0u);
  EXPECT_EQ(f.cols(), 3u);
}

TEST(Csv, MissingRequiredColumn) {
  EXPECT_EQ(code_of([] { parse_csv("subject_id,valuenum\n1,2\n", event_schema()); }), ErrorCode::MissingColumn);
}

TEST(Csv, OptionalColumnBecomesMasked) {
  Schema s = event_schema();
  s.push_back({"valueuom", ColumnType::Categorical, false});
  auto f = parse_csv("subject_id,hadm_id,valuenum\n1,2,3\n", s);
  EXPECT_EQ(f.column("valueuom").missing_count(), 1u);
}

TEST(Csv, QuotedFieldsAndTimestamps) {
  Schema s{{"text", ColumnType::Categorical, true}, {"charttime", ColumnType::Timestamp, true}};
  auto f = parse_csv("text,charttime\n\"a, \"\"quoted\"\" note\",1970-01-02 06:00\n", s);
  EXPECT_EQ(f.column("text").text(0), "a, \"quoted\" note");
  EXPECT_DOUBLE_EQ(f.column("charttime").number(0), 30.0);
  EXPECT_EQ(format_timestamp(30.0), "1970-01-02 06:00:00");
}

TEST(Csv, TimestampRoundTrip) {
  for (std::string t : {"2150-03-01 00:00:00", "2000-02-29 23:59:59", "1969-12-31 12:30:00"}) {
    auto h = parse_timestamp(t);
    ASSERT_TRUE(h.has_value()) << t;
    EXPECT_EQ(format_timestamp(*h), t);
  }
  EXPECT_FALSE(parse_timestamp("2020-13-01").has_value());
}

TEST(Csv, WriteReadRoundTrip) {
  PatientFrame f({Column::numeric("x", {0.1, 1e-300, -3.0}, {0, 0, 1}),
                  Column::categorical("name", {"a,b", "", "c\"d"}, {0, 1, 0})});
  auto path = std::filesystem::temp_directory_path() / "riskforge_roundtrip.csv";
  write_csv(f, path);
  auto g = read_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(g.rows(), 3u);
  EXPECT_EQ(g.column("x").number(0), 0.1);
  EXPECT_EQ(g.column("x").number(1), 1e-300);
  EXPECT_TRUE(g.column("x").is_missing(2));
  EXPECT_EQ(g.column("name").text(0), "a,b");
  EXPECT_TRUE(g.column("name").is_missing(1));
  EXPECT_EQ(g.column("name").text(2), "c\"d");
  EXPECT_EQ(to_csv(f), to_csv(g));
}

TEST(Csv, FormatNumberShortest) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(70.0), "70");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Join, InnerLeftDisjoint) {
  PatientFrame left({Column::numeric("hadm_id", {1, 2}), Column::numeric("a", {10, 20})});
  PatientFrame right({Column::numeric("hadm_id", {2}), Column::numeric("b", {7})});
  auto inner = join(left, right, {{JoinKey::HadmId}, JoinKind::Inner});
  ASSERT_EQ(inner.rows(), 1u);
  EXPECT_EQ(inner.column("a").number(0), 20.0);
  EXPECT_EQ(inner.column("b").number(0), 7.0);

  auto lj = join(left, right, {{JoinKey::HadmId}, JoinKind::Left});
  ASSERT_EQ(lj.rows(), 2u);
  EXPECT_TRUE(lj.column("b").is_missing(0));
  EXPECT_FALSE(lj.column("b").is_missing(1));

  PatientFrame other({Column::numeric("hadm_id", {5}), Column::numeric("b", {1})});
  EXPECT_EQ(join(left, other, {{JoinKey::HadmId}, JoinKind::Inner}).rows(), 0u);
}

TEST(Join, CollidingNamesSuffixed) {
  PatientFrame left({Column::numeric("stay_id", {1}), Column::numeric("v", {1})});
  PatientFrame right({Column::numeric("stay_id", {1}), Column::numeric("v", {2})});
  auto j = join(left, right, {{JoinKey::StayId}, JoinKind::Inner});
  EXPECT_EQ(j.column("v").number(0), 1.0);
  EXPECT_EQ(j.column("v_r").number(0), 2.0);
}

TEST(Join, MissingKeyColumn) {
  PatientFrame left({Column::numeric("a", {1})});
  PatientFrame right({Column::numeric("hadm_id", {1})});
  EXPECT_THROW(join(left, right, {{JoinKey::HadmId}, JoinKind::Inner}), Error);
}

TEST(Aggregate, MeanMinMax) {
  PatientFrame f({Column::numeric("stay_id", {1, 1, 2, 3, 3}),
                  Column::numeric("HR", {60, 80, 98.6, 0, 0}, {0, 0, 0, 1, 1})});
  const std::vector<std::string> cols{"HR"};
  const std::vector<Stat> stats{Stat::Mean, Stat::Min, Stat::Max};
  auto a = aggregate_by_key(f, "stay_id", cols, stats);
  ASSERT_EQ(a.rows(), 3u);
  EXPECT_EQ(a.column("HR_mean").number(0), 70.0);
  EXPECT_EQ(a.column("HR_min").number(0), 60.0);
  EXPECT_EQ(a.column("HR_max").number(0), 80.0);
  for (auto c : {"HR_mean", "HR_min", "HR_max"}) {
    EXPECT_EQ(a.column(c).number(1), 98.6);
    EXPECT_TRUE(a.column(c).is_missing(2));
  }
}

TEST(Aggregate, MatchesBruteForce) {
  std::vector<double> key, val;
  std::vector<std::uint8_t> miss;
  for (int i = 0; i < 200; ++i) {
    key.push_back((i * 7) % 13);
    val.push_back(std::sin(i) * 50);
    miss.push_back(i % 5 == 0);
  }
  PatientFrame f({Column::numeric("stay_id", key), Column::numeric("v", val, miss)});
  const std::vector<std::string> cols{"v"};
  const std::vector<Stat> stats{Stat::Mean, Stat::Min, Stat::Max};
  auto a = aggregate_by_key(f, "stay_id", cols, stats);
  ASSERT_EQ(a.rows(), 13u);
  for (std::size_t g = 0; g < a.rows(); ++g) {
    const double k = a.column("stay_id").number(g);
    EXPECT_EQ(k, static_cast<double>(g));
    double sum = 0, lo = 1e9, hi = -1e9;
    int cnt = 0;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (key[i] != k || miss[i]) continue;
      sum += val[i];
      lo = std::min(lo, val[i]);
      hi = std::max(hi, val[i]);
      ++cnt;
    }
    EXPECT_NEAR(a.column("v_mean").number(g), sum / cnt, 1e-12);
    EXPECT_EQ(a.column("v_min").number(g), lo);
    EXPECT_EQ(a.column("v_max").number(g), hi);
  }
}

TEST(Frame, MaskIsAuthoritative) {
  auto c = Column::numeric("x", {1.0, 2.0}, {0, 1});
  PatientFrame f({c});
  EXPECT_FALSE(f.value("x", 1).has_value());
  EXPECT_EQ(*f.value("x", 0), 1.0);
}
