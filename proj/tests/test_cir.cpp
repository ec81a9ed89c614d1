#include <doctest.h>

#include <cmath>
#include <map>

#include "gae/cir.hpp"
#include "oracle.hpp"

using namespace gae;

TEST_CASE("nearest neighbors") {
  Eigen::MatrixXd table(3, 2);
  table << 0, 0, 0, 0.1, 5, 5;
  CHECK(nearest_neighbors(table, 0, 1) == std::vector<Index>{1});
  CHECK(nearest_neighbors(table, 0, 2) == std::vector<Index>{1, 2});
  CHECK_THROWS_AS(nearest_neighbors(table, 0, 3), InsufficientPopulationError);
  CHECK_THROWS_AS(nearest_neighbors(table, 0, 0), InsufficientPopulationError);

  SUBCASE("ties resolve to the lower index") {
    Eigen::MatrixXd line(4, 1);
    line << 0, 1, -1, 1;
    CHECK(nearest_neighbors(line, 0, 3) == std::vector<Index>{1, 2, 3});
  }

  SUBCASE("random tables against the exhaustive sort") {
    Rng rng = make_rng(5);
    Eigen::MatrixXd codes(50, 8);
    for (Index i = 0; i < codes.size(); ++i) codes.data()[i] = uniform01(rng);
    for (Index i = 0; i < 50; ++i) {
      const auto expected = oracle::sorted_neighbors(codes, i);
      CHECK(nearest_neighbors(codes, i, 10) == std::vector<Index>(expected.begin(), expected.begin() + 10));
      CHECK(nearest_neighbors(codes, i, 49) == expected);
    }
  }

  SUBCASE("float expressions are accepted") {
    Eigen::MatrixXf cols(2, 3);
    cols << 0, 3, 1, 0, 3, 1;
    CHECK(nearest_neighbors(cols.transpose(), 0, 1) == std::vector<Index>{2});
  }
}

TEST_CASE("partner sampling") {
  Rng rng = make_rng(1);
  const std::vector<Index> single{7};
  CHECK(sample_partner(single, rng) == 7);
  CHECK_THROWS_AS(sample_partner(std::vector<Index>{}, rng), InsufficientPopulationError);

  const std::vector<Index> list{2, 5, 9};
  Rng a = make_rng(42), b = make_rng(42);
  for (int i = 0; i < 20; ++i) CHECK(sample_partner(list, a) == sample_partner(list, b));

  std::map<Index, int> counts;
  Rng r = make_rng(43);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[sample_partner(list, r)];
  const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  CHECK(counts.size() == 3);
  for (const auto& [index, count] : counts) CHECK(std::abs(count - draws / 3.0) < 3 * sigma);
}

TEST_CASE("linear schedule") {
  CirSchedule s;  // lambda_max 1, k_max 10, ramp 3000
  CHECK(schedule_at(s, 3000) == CirParams{1.0, 10});
  CHECK(schedule_at(s, 0) == CirParams{0.0, 1});
  CHECK(schedule_at(s, 1500) == CirParams{0.5, 6});
  CHECK(schedule_at(s, 9000) == CirParams{1.0, 10});

  CirParams previous = schedule_at(s, 0);
  for (long e = 1; e <= 3100; ++e) {
    const CirParams now = schedule_at(s, e);
    CHECK(now.lambda >= previous.lambda);
    CHECK(now.k >= previous.k);
    previous = now;
  }
}

TEST_CASE("stepwise schedule") {
  CirSchedule s;
  s.mode = ScheduleMode::kStepwise;
  s.steps = {{10, 0.2, 2}, {20, 0.6, 5}};
  CHECK(schedule_at(s, 0) == CirParams{0.0, 1});
  CHECK(schedule_at(s, 10) == CirParams{0.2, 2});
  CHECK(schedule_at(s, 19) == CirParams{0.2, 2});
  CHECK(schedule_at(s, 25) == CirParams{0.6, 5});

  const CirSchedule d = CirSchedule::default_stepwise(400, 1.0, 10);
  CHECK(d.steps.size() == 3);
  CHECK(schedule_at(d, 400) == CirParams{1.0, 10});
  CHECK(schedule_at(d, 100) == CirParams{0.25, 3});

  s.steps = {{20, 0.6, 5}, {10, 0.2, 2}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(parse_schedule_mode("cosine"), ConfigError);
}
