#include <gtest/gtest.h>

#include "riskforge/cohort.hpp"

using namespace riskforge;
using namespace riskforge::cohort;

TEST(Cohort, CodeMatching) {
  EXPECT_TRUE(code_matches("4275", "4275"));
  EXPECT_FALSE(code_matches("42751", "4275"));
  EXPECT_TRUE(code_matches("I462", "I46"));
  EXPECT_TRUE(code_matches("I462", "I46*"));
  EXPECT_FALSE(code_matches("E11", "I46*"));
}

TEST(Cohort, FilterByDiagnosis) {
  CohortConfig cfg;
  cfg.icd_codes = {"4275", "I46*"};
  PatientFrame dx({Column::numeric("subject_id", {1, 2, 3}), Column::numeric("hadm_id", {10, 20, 30}),
                   Column::categorical("icd_code", {"4275", "I462", "E11"})});
  EXPECT_EQ(filter_by_diagnosis(dx, cfg).rows(), 2u);
}

TEST(Cohort, DuplicateAdmissionKeptOnce) {
  CohortConfig cfg;
  PatientFrame dx({Column::numeric("subject_id", {1, 1}), Column::numeric("hadm_id", {10, 10}),
                   Column::categorical("icd_code", {"4275", "I469"})});
  EXPECT_EQ(filter_by_diagnosis(dx, cfg).rows(), 1u);
}

TEST(Cohort, NoMatchWarns) {
  CohortConfig cfg;
  PatientFrame dx({Column::numeric("subject_id", {1}), Column::numeric("hadm_id", {10}),
                   Column::categorical("icd_code", {"E11"})});
  Warnings w;
  EXPECT_EQ(filter_by_diagnosis(dx, cfg, &w).rows(), 0u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].code, ErrorCode::EmptyCohort);
}

TEST(Cohort, FirstIcuStay) {
  PatientFrame stays({Column::numeric("subject_id", {1, 1, 2, 3, 3}), Column::numeric("hadm_id", {10, 11, 20, 30, 30}),
                      Column::numeric("stay_id", {100, 101, 200, 9, 4}), Column::numeric("intime", {5, 2, 7, 3, 3})});
  auto f = first_icu_stay(stays);
  ASSERT_EQ(f.rows(), 3u);
  std::map<double, double> by_subject;
  for (std::size_t r = 0; r < f.rows(); ++r) by_subject[f.column("subject_id").number(r)] = f.column("stay_id").number(r);
  EXPECT_EQ(by_subject[1], 101);
  EXPECT_EQ(by_subject[2], 200);
  EXPECT_EQ(by_subject[3], 4);
}

TEST(Cohort, FirstIcuStayTieMatchesEnumeration) {
  // Every ordering of three equal-intime stays must pick the smallest id.
  std::vector<double> ids{9, 4, 6};
  std::sort(ids.begin(), ids.end());
  do {
    PatientFrame stays({Column::numeric("subject_id", {1, 1, 1}), Column::numeric("hadm_id", {1, 1, 1}),
                        Column::numeric("stay_id", ids), Column::numeric("intime", {3, 3, 3})});
    EXPECT_EQ(first_icu_stay(stays).column("stay_id").number(0), 4.0);
  } while (std::next_permutation(ids.begin(), ids.end()));
}

TEST(Cohort, MissingIntimeThrows) {
  PatientFrame stays({Column::numeric("subject_id", {1}), Column::numeric("hadm_id", {1}), Column::numeric("stay_id", {1}),
                      Column::numeric("intime", {0}, {1})});
  EXPECT_THROW(first_icu_stay(stays), Error);
}

TEST(Cohort, LabelMortality) {
  PatientFrame adm({Column::numeric("subject_id", {1, 2, 3}), Column::numeric("hadm_id", {1, 2, 3}),
                    Column::numeric("dischtime", {12, 12, 10}), Column::numeric("deathtime", {10, 0, 12}, {0, 1, 0})});
  auto f = label_mortality(adm);
  EXPECT_EQ(f.column("in_hospital_death").number(0), 1.0);
  EXPECT_EQ(f.column("in_hospital_death").number(1), 0.0);
  EXPECT_EQ(f.column("in_hospital_death").number(2), 0.0);
}

TEST(Cohort, AgeFilter) {
  CohortConfig cfg;
  PatientFrame f({Column::numeric("subject_id", {1, 2, 3, 4}), Column::numeric("anchor_age", {17, 18, 90, 50}, {0, 0, 0, 1})});
  auto g = apply_age_filter(f, cfg);
  // Brute-force filter, masked treated as ineligible.
  std::vector<double> expect;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    if (!f.column("anchor_age").is_missing(r) && f.column("anchor_age").number(r) >= 18) {
      expect.push_back(f.column("subject_id").number(r));
    }
  }
  ASSERT_EQ(g.rows(), expect.size());
  for (std::size_t r = 0; r < g.rows(); ++r) EXPECT_EQ(g.column("subject_id").number(r), expect[r]);

  PatientFrame adults({Column::numeric("subject_id", {1, 2}), Column::numeric("anchor_age", {30, 40})});
  EXPECT_EQ(apply_age_filter(adults, cfg).rows(), 2u);
}

TEST(Cohort, BuildCohortEndToEnd) {
  CohortTables t;
  t.diagnoses = PatientFrame({Column::numeric("subject_id", {1, 2, 3}), Column::numeric("hadm_id", {10, 20, 30}),
                              Column::categorical("icd_code", {"4275", "I469", "E11"})});
  t.patients = PatientFrame({Column::numeric("subject_id", {1, 2, 3}), Column::numeric("anchor_age", {70, 16, 60})});
  t.icustays = PatientFrame({Column::numeric("subject_id", {1, 1, 2, 3}), Column::numeric("hadm_id", {10, 10, 20, 30}),
                             Column::numeric("stay_id", {100, 101, 200, 300}), Column::numeric("intime", {4, 1, 1, 1})});
  t.admissions = PatientFrame({Column::numeric("subject_id", {1, 2, 3}), Column::numeric("hadm_id", {10, 20, 30}),
                               Column::numeric("dischtime", {50, 50, 50}), Column::numeric("deathtime", {40, 0, 0}, {0, 1, 1})});
  auto c = build_cohort(t, CohortConfig{});
  ASSERT_EQ(c.rows(), 1u);
  EXPECT_EQ(c.column("stay_id").number(0), 101.0);
  EXPECT_EQ(c.column("in_hospital_death").number(0), 1.0);
}
