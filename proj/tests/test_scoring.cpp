#include <doctest.h>

#include <cmath>
#include <random>

#include "milkyway/scoring.hpp"
#include "oracles.hpp"

using namespace milkyway;

namespace {

std::vector<int> indicator(const std::set<int>& selected, int m) {
  std::vector<int> v(m, 0);
  for (int i : selected) v[i] = 1;
  return v;
}

}  // namespace

TEST_CASE("choice scoring on the pinned examples") {
  // gold {A}, pred {A} over 4 options
  CHECK(score_choice(indicator({0}, 4), indicator({0}, 4), AnswerType::SimpleMc) ==
        doctest::Approx(1.0));
  // gold {A,B}, pred {A,C}: 2*1/(2+2)
  CHECK(score_choice(indicator({0, 1}, 4), indicator({0, 2}, 4),
                     AnswerType::DifficultMc) == doctest::Approx(0.5));
  // binary with both options selected is invalid
  CHECK(score_choice(indicator({0}, 2), indicator({0, 1}, 2),
                     AnswerType::BinaryChoice) == 0.0);
  // but one matching selection scores 1
  CHECK(score_choice(indicator({1}, 2), indicator({1}, 2),
                     AnswerType::BinaryChoice) == doctest::Approx(1.0));
}

TEST_CASE("choice scoring errors") {
  CHECK_THROWS_AS(score_choice(indicator({0}, 3), indicator({0}, 4),
                               AnswerType::SimpleMc),
                  ScoringError);
  CHECK_THROWS_AS(score_choice(indicator({}, 4), indicator({0}, 4),
                               AnswerType::SimpleMc),
                  ScoringError);
}

TEST_CASE("numeric scoring on the pinned examples") {
  NumericHistory one_to_eight{{1, 2, 3, 4, 5, 6, 7, 8}, 1e-9};
  // pred == resolved
  CHECK(score_numeric(8.0, one_to_eight, 8.0) == doctest::Approx(1.0));
  // sample variance of 1..8 is 42/7 = 6; pred = v + 1.5*sigma -> 0.75
  const double sigma = std::sqrt(6.0);
  CHECK(score_numeric(8.0 + 1.5 * sigma, one_to_eight, 8.0) ==
        doctest::Approx(0.75).epsilon(1e-9));
  // degenerate flat history: any miss scores ~0
  NumericHistory flat{{5, 5, 5, 5, 5, 5, 5, 5}, 1e-9};
  CHECK(score_numeric(5.1, flat, 5.0) == 0.0);
  CHECK(score_numeric(5.0, flat, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("short histories raise the exclusion error") {
  NumericHistory seven{{1, 2, 3, 4, 5, 6, 7}, 1e-9};
  CHECK_THROWS_AS(score_numeric(1.0, seven, 1.0), InvalidHistoryError);
}

TEST_CASE("randomized oracle suite, exact to 1e-12") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> m_dist(2, 8);
  std::uniform_real_distribution<double> value_dist(-100.0, 100.0);

  int cases = 0;
  for (int i = 0; i < 250; ++i) {
    // choice case
    const int m = m_dist(rng);
    std::set<int> gold, pred;
    gold.insert(static_cast<int>(rng() % m));
    while (rng() % 3 == 0) gold.insert(static_cast<int>(rng() % m));
    while (rng() % 2 == 0) pred.insert(static_cast<int>(rng() % m));
    const AnswerType type = m == 2 ? AnswerType::BinaryChoice
                                   : (i % 2 == 0 ? AnswerType::SimpleMc
                                                 : AnswerType::DifficultMc);
    const double got =
        score_choice(indicator(gold, m), indicator(pred, m), type);
    double expected = oracle::f1_oracle(gold, pred);
    if (type == AnswerType::BinaryChoice && pred.size() > 1) expected = 0.0;
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    ++cases;

    // numeric case
    std::vector<double> history;
    for (int k = 0; k < 8; ++k) history.push_back(value_dist(rng));
    const double resolved = history[0];
    const double pred_value = resolved + value_dist(rng) / 10.0;
    NumericHistory h{history, 1e-9};
    CHECK(score_numeric(pred_value, h, resolved) ==
          doctest::Approx(oracle::numeric_score_oracle(pred_value, history, resolved,
                                                       1e-9))
              .epsilon(1e-12));
    ++cases;
  }
  CHECK(cases >= 200);
}

TEST_CASE("numeric score properties") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> value_dist(-50.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> history;
    for (int k = 0; k < 8; ++k) history.push_back(value_dist(rng));
    NumericHistory h{history, 1e-9};
    const double v = history[3];

    // range
    const double pred = v + value_dist(rng);
    const double s = score_numeric(pred, h, v);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);

    // monotone in |pred - v|
    const double near = score_numeric(v + 0.5, h, v);
    const double far = score_numeric(v + 1.5, h, v);
    CHECK(near >= far);

    // shift invariance
    const double shift = value_dist(rng);
    std::vector<double> shifted;
    for (double x : history) shifted.push_back(x + shift);
    NumericHistory hs{shifted, 1e-9};
    CHECK(score_numeric(pred + shift, hs, v + shift) ==
          doctest::Approx(s).epsilon(1e-9));
  }
}

TEST_CASE("F1 symmetry for multi-select types") {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    const int m = 3 + static_cast<int>(rng() % 5);
    std::set<int> a{static_cast<int>(rng() % m)}, b{static_cast<int>(rng() % m)};
    while (rng() % 2 == 0) a.insert(static_cast<int>(rng() % m));
    while (rng() % 2 == 0) b.insert(static_cast<int>(rng() % m));
    CHECK(score_choice(indicator(a, m), indicator(b, m), AnswerType::DifficultMc) ==
          doctest::Approx(score_choice(indicator(b, m), indicator(a, m),
                                       AnswerType::DifficultMc)));
  }
}

TEST_CASE("aggregation: means, counts, and the empty case") {
  std::vector<ScoreRecord> records;
  ScoreRecord a;
  a.question_id = "q1";
  a.answer_type = AnswerType::BinaryChoice;
  a.resolved = true;
  a.score = 1.0;
  ScoreRecord b = a;
  b.question_id = "q2";
  b.score = 0.0;
  records = {a, b};
  FutureWorldAggregate agg = aggregate_futureworld(records);
  CHECK(agg.overall.value() == doctest::Approx(0.5));
  CHECK(agg.bin.mean.value() == doctest::Approx(0.5));
  CHECK(agg.scored_total == 2);

  // duplicating every record leaves means unchanged
  std::vector<ScoreRecord> doubled = records;
  doubled.insert(doubled.end(), records.begin(), records.end());
  FutureWorldAggregate agg2 = aggregate_futureworld(doubled);
  CHECK(agg2.overall.value() == doctest::Approx(agg.overall.value()));
  CHECK(agg2.bin.mean.value() == doctest::Approx(agg.bin.mean.value()));

  // all-excluded yields the defined-empty result
  ScoreRecord excluded;
  excluded.excluded_reason = "unresolved";
  FutureWorldAggregate empty = aggregate_futureworld({excluded});
  CHECK_FALSE(empty.overall.has_value());
  CHECK(empty.scored_total == 0);
  CHECK(empty.excluded_total == 1);
}

TEST_CASE("type counts cover the published slice composition") {
  std::vector<ScoreRecord> records;
  auto push = [&records](AnswerType type, int count) {
    for (int i = 0; i < count; ++i) {
      ScoreRecord r;
      r.answer_type = type;
      r.resolved = true;
      r.score = 0.5;
      records.push_back(r);
    }
  };
  push(AnswerType::BinaryChoice, 44);
  push(AnswerType::SimpleMc, 49);
  push(AnswerType::DifficultMc, 22);
  push(AnswerType::Numeric, 101);
  FutureWorldAggregate agg = aggregate_futureworld(records);
  CHECK(agg.scored_total == 216);
  CHECK(agg.bin.scored + agg.smc.scored + agg.dmc.scored + agg.num.scored == 216);
}

TEST_CASE("futurex weighted overall") {
  CHECK(futurex_overall(71.43, 82.26, 63.05, 45.85) ==
        doctest::Approx(60.85).epsilon(1e-9));
  CHECK(futurex_overall(62.14, 59.80, 44.24, 31.57) ==
        doctest::Approx(44.074).epsilon(1e-9));
  CHECK(futurex_overall(0, 0, 0, 0) == 0.0);
}

TEST_CASE("ladder delta and matched-set enforcement") {
  std::set<std::string> ids{"q1", "q2"};
  std::vector<CheckpointScore> cell{{"T-4d", 44.0, ids},
                                    {"T-3d", 50.5, ids},
                                    {"T-2d", 58.6, ids},
                                    {"T-1d", 58.0, ids}};
  CHECK(ladder_delta(cell, "T-4d", "T-1d") == doctest::Approx(14.0));

  // constant scores
  std::vector<CheckpointScore> flat{{"T-4d", 10.0, ids}, {"T-1d", 10.0, ids}};
  CHECK(ladder_delta(flat, "T-4d", "T-1d") == doctest::Approx(0.0));

  // mismatched sets name the offending ids
  std::vector<CheckpointScore> bad{{"T-4d", 1.0, {"q1", "q2"}},
                                   {"T-1d", 2.0, {"q1", "q3"}}};
  try {
    ladder_delta(bad, "T-4d", "T-1d");
    FAIL("expected MatchedSetError");
  } catch (const MatchedSetError& e) {
    CHECK(e.offending_ids == std::vector<std::string>{"q2", "q3"});
  }

  CHECK_THROWS_AS(ladder_delta(flat, "T-9d", "T-1d"), ScoringError);
}

TEST_CASE("mechanism readout computes differences and keeps GH absent") {
  MechanismCell cell;
  cell.cell = "demo";
  cell.n = 28;
  cell.nh = std::vector<CheckpointScore>{{"T-4d", 56.5, {}}, {"T-1d", 60.2, {}}};
  cell.fh = std::vector<CheckpointScore>{{"T-4d", 55.5, {}}, {"T-1d", 68.5, {}}};
  auto rows = mechanism_readout({cell}, "T-4d", "T-1d");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].delta_nh.value() == doctest::Approx(3.7));
  CHECK(rows[0].delta_fh.value() == doctest::Approx(13.0));
  CHECK(rows[0].fh_minus_nh.value() == doctest::Approx(9.3));
  CHECK_FALSE(rows[0].delta_gh.has_value());
  CHECK_FALSE(rows[0].fh_minus_gh.has_value());

  MechanismCell single;
  single.cell = "one";
  single.fh = std::vector<CheckpointScore>{{"T-4d", 1.0, {}}, {"T-1d", 2.0, {}}};
  auto one = mechanism_readout({single}, "T-4d", "T-1d");
  CHECK(one[0].delta_fh.has_value());
  CHECK_FALSE(one[0].fh_minus_nh.has_value());
}
