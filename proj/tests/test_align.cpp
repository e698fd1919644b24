#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "monoalign/align.hpp"
#include "monoalign/gbt.hpp"

using namespace monoalign;

namespace {

std::shared_ptr<const FeatureSchema> survey_schema() {
  return std::make_shared<const FeatureSchema>(
      std::vector<FeatureSpec>{{"age", FeatureKind::kOrdinal, {}, {}, true},
                               {"stage", FeatureKind::kOrdinal, {}, {}, true},
                               {"grade", FeatureKind::kOrdinal, {}, {}, true},
                               {"site", FeatureKind::kCategorical, {}, {"a", "b"}, false}},
      "y");
}

std::string survey_text(const std::vector<std::string>& age_answers) {
  std::string text = "respondent,feature,answer\n";
  for (std::size_t r = 0; r < age_answers.size(); ++r) text += "c" + std::to_string(r) + ",age," + age_answers[r] + "\n";
  return text;
}

}  // namespace

TEST_CASE("survey answers parse") {
  CHECK(parse_survey_answer("always-increase") == SurveyAnswer::kAlwaysIncrease);
  CHECK(parse_survey_answer("always-decrease") == SurveyAnswer::kAlwaysDecrease);
  CHECK(parse_survey_answer("neither/unsure") == SurveyAnswer::kNeither);
  CHECK(parse_survey_answer("unsure") == SurveyAnswer::kNeither);
  CHECK_THROWS_AS(parse_survey_answer("sometimes"), DataError);
  CHECK_THROWS_AS(parse_survey("who,what\n"), DataError);
  CHECK_THROWS_AS(parse_survey("respondent,feature,answer\na,age,neither\na,age,unsure\n"), DataError);
}

TEST_CASE("derive_constraints majority rule") {
  const auto schema = survey_schema();
  SUBCASE("3 of 5 say decrease") {
    const auto r = parse_survey(survey_text({"always-decrease", "always-decrease", "always-decrease", "neither", "always-increase"}));
    const auto c = derive_constraints(r, *schema);
    CHECK(c.directions[0] == -1);
    CHECK(c.provenance == ConstraintProvenance::kSurveyMajority);
  }
  SUBCASE("2 vs 2 vs 1 has no majority") {
    const auto r = parse_survey(survey_text({"always-decrease", "always-decrease", "always-increase", "always-increase", "neither"}));
    const auto c = derive_constraints(r, *schema);
    CHECK(c.directions[0] == 0);
  }
  SUBCASE("plurality without majority is flagged") {
    const auto r = parse_survey(survey_text({"always-decrease", "always-decrease", "always-increase", "neither"}));
    const auto c = derive_constraints(r, *schema);
    CHECK(c.directions[0] == 0);
    CHECK(c.flagged_for_review == std::vector<std::string>{"age"});
  }
  SUBCASE("a single respondent decides") {
    const auto c = derive_constraints(parse_survey(survey_text({"always-increase"})), *schema);
    CHECK(c.directions == std::vector<int>{1, 0, 0, 0});
  }
  SUBCASE("categorical features cannot be constrained") {
    CHECK_THROWS_AS(derive_constraints(parse_survey("respondent,feature,answer\na,site,always-increase\n"), *schema), DataError);
  }
  SUBCASE("order of responses does not matter") {
    std::string text = "respondent,feature,answer\n";
    const char* answers[] = {"always-increase", "always-decrease", "neither"};
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int r = 0; r < 7; ++r)
      for (const char* f : {"age", "stage", "grade"}) text += "c" + std::to_string(r) + "," + f + "," + answers[pick(rng)] + "\n";
    auto responses = parse_survey(text);
    const auto base = derive_constraints(responses, *schema);
    for (int k = 0; k < 10; ++k) {
      std::shuffle(responses.begin(), responses.end(), rng);
      const auto again = derive_constraints(responses, *schema);
      CHECK(again.directions == base.directions);
      CHECK(again.flagged_for_review == base.flagged_for_review);
    }
  }
}

TEST_CASE("pdp of an empty model is flat") {
  const auto d = generate_synthetic(fixture::clinical_spec(200, 1));
  TreeEnsemble m;
  m.base_score = 0.3;
  FeatureEncoder enc(*d.schema);
  for (const auto& c : enc.columns()) m.feature_names.push_back(c.name);
  m.constraints.assign(m.feature_names.size(), 0);
  m.schema_fingerprint = d.schema->fingerprint();
  const auto c = pdp(m, d, d, "stage");
  CHECK(c.grid.size() == 10);
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    CHECK(c.mean[k] == doctest::Approx(logistic(0.3)).epsilon(1e-15));
    CHECK(c.se[k] == doctest::Approx(0.0));
  }
}

TEST_CASE("pdp grid comes from the full data and means match direct recomputation") {
  auto schema = std::make_shared<const FeatureSchema>(
      std::vector<FeatureSpec>{{"gleason", FeatureKind::kOrdinal, {1, 2, 3, 4, 5}, {}, true},
                               {"psa", FeatureKind::kOrdinal, {}, {}, true}},
      "y");
  std::string text = "gleason,psa,y\n";
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> g(1, 5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 300; ++i) {
    const int gl = g(rng);
    const double psa = u(rng);
    text += std::to_string(gl) + "," + std::to_string(psa) + "," + (u(rng) < 0.15 * gl ? "1" : "0") + "\n";
  }
  const auto full = parse_dataset(text, schema);
  const std::vector<Eigen::Index> first{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto test = full.subset(first);
  const auto trained = train(full, ConstraintVector::from_map(*schema, {{"gleason", 1}}), [] {
    HyperGrid h;
    h.learning_rates = {0.3};
    h.num_rounds = {30};
    h.max_depths = {3};
    h.folds = 3;
    return h;
  }(), 1);
  const auto c = pdp(trained.model, test, full, "gleason");
  CHECK(c.grid == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(c.n_test == 10);
  const auto x = model_matrix(trained.model, test);
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    Eigen::MatrixXd probe = x;
    probe.col(0).setConstant(c.grid[k]);
    const Eigen::VectorXd p = trained.model.predict_proba(probe);
    CHECK(c.mean[k] == doctest::Approx(p.mean()).epsilon(1e-14));
    const double sd = std::sqrt((p.array() - p.mean()).square().sum() / 9.0);
    CHECK(c.se[k] == doctest::Approx(sd / std::sqrt(10.0)).epsilon(1e-12));
  }
  CHECK(violations(c, 1).empty());
  const auto band = pdp_plot_json(c);
  CHECK(band["band_high"][2].get<double>() == doctest::Approx(c.mean[2] + 2 * c.se[2]));
  CHECK(band["band_low"][2].get<double>() == doctest::Approx(c.mean[2] - 2 * c.se[2]));
}

TEST_CASE("constrained decreasing feature yields a non-increasing pdp") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = generate_synthetic(fixture::clinical_spec(500, 60 + seed, 0.25));
    HyperGrid h;
    h.learning_rates = {0.3};
    h.num_rounds = {60};
    h.max_depths = {4};
    h.folds = 3;
    const auto r = train(d, ConstraintVector::from_map(*d.schema, {{"response", -1}}), h, seed);
    const auto c = pdp(r.model, d, d, "response");
    for (std::size_t k = 1; k < c.grid.size(); ++k) CHECK(c.mean[k] <= c.mean[k - 1]);
    CHECK(violations(c, -1, 0.0).empty());
  }
}

TEST_CASE("violations scan") {
  PdpCurve c;
  c.feature = "x";
  c.grid = {1, 2, 3};
  c.mean = {0.8, 0.85, 0.7};
  c.se = {0, 0, 0};
  const auto v = violations(c, -1, 0.0);
  REQUIRE(v.size() == 1);
  CHECK(v[0].from == 0);
  CHECK(v[0].to == 1);
  CHECK(v[0].magnitude == doctest::Approx(0.05));
  CHECK(violations(c, -1, 0.06).empty());
  CHECK(violations(c, 1, 0.0).size() == 1);
  CHECK_THROWS_AS(violations(c, 0), DataError);

  fixture::TempDir tmp;
  write_pdp_csv({c}, tmp / "p.csv");
  CHECK(fixture::slurp(tmp / "p.csv") == "feature,value,mean,se\nx,1,0.8,0\nx,2,0.85,0\nx,3,0.7,0\n");
}
