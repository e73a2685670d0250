#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "grpolab/eval.hpp"
#include "grpolab/rewards.hpp"

using namespace grpolab;

namespace {

ParsedResponse well_formed(int cls) {
  return parse_response(render_response(cls, "t"));
}

ParsedResponse malformed() { return parse_response("no tags"); }

}  // namespace

TEST_CASE("dpa reward matches the frozen golden table bit-for-bit") {
  std::ifstream in(std::string(GRPOLAB_FIXTURES_DIR) + "/dpa_golden.csv");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "response_class,answer_class,reward");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    REQUIRE(c2 != std::string::npos);
    int response_class = std::stoi(line.substr(0, c1));
    int answer_class = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    double expect = std::strtod(line.c_str() + c2 + 1, nullptr);
    double got = dpa_reward(well_formed(response_class),
                            AnswerSet::from_class(answer_class));
    CAPTURE(response_class);
    CAPTURE(answer_class);
    CHECK(got == expect);  // both sides are correctly rounded IEEE quotients
    ++rows;
  }
  CHECK(rows == 256);
}

TEST_CASE("dpa reward worked examples") {
  AnswerSet acd = *AnswerSet::parse("ACD");
  CHECK(dpa_reward(well_formed(AnswerSet::parse("AC")->cls()), acd) ==
        2.0 / 3.0);
  CHECK(dpa_reward(well_formed(AnswerSet::parse("AD")->cls()), acd) ==
        2.0 / 3.0);
  CHECK(dpa_reward(well_formed(AnswerSet::parse("AB")->cls()), acd) == 0.0);
  CHECK(dpa_reward(well_formed(AnswerSet::kNoneClass), AnswerSet::none()) == 1.0);
  CHECK(dpa_reward(well_formed(acd.cls()), acd) == 1.0);
  CHECK(dpa_reward(malformed(), acd) == 0.0);
}

TEST_CASE("binary accuracy requires exact set equality") {
  AnswerSet acd = *AnswerSet::parse("ACD");
  CHECK(binary_accuracy_reward(well_formed(acd.cls()), acd) == 1.0);
  CHECK(binary_accuracy_reward(well_formed(AnswerSet::parse("AC")->cls()),
                               acd) == 0.0);
  CHECK(binary_accuracy_reward(malformed(), acd) == 0.0);
}

TEST_CASE("format reward is the parse flag") {
  CHECK(format_reward(well_formed(3)) == 1.0);
  CHECK(format_reward(malformed()) == 0.0);
  CHECK(format_reward(parse_response("<answer>AN</answer>")) == 0.0);
}

TEST_CASE("total reward composes format and the chosen accuracy") {
  AnswerSet acd = *AnswerSet::parse("ACD");
  RewardBreakdown wrong =
      total_reward(well_formed(AnswerSet::parse("B")->cls()), acd,
                   AccuracyMode::dpa);
  CHECK(wrong.format == 1.0);
  CHECK(wrong.accuracy == 0.0);
  CHECK(wrong.total == 1.0);

  for (AccuracyMode mode : {AccuracyMode::binary, AccuracyMode::dpa}) {
    RewardBreakdown exact = total_reward(well_formed(acd.cls()), acd, mode);
    CHECK(exact.total == 2.0);
  }

  RewardBreakdown bad = total_reward(malformed(), acd, AccuracyMode::dpa);
  CHECK(bad.format == 0.0);
  CHECK(bad.accuracy == 0.0);
  CHECK(bad.total == 0.0);
}

TEST_CASE("exhaustive 16x16 laws: dominance, gating, ranges") {
  for (int r = 0; r < AnswerSet::kClassCount; ++r) {
    ParsedResponse resp = well_formed(r);
    for (int a = 0; a < AnswerSet::kClassCount; ++a) {
      AnswerSet ans = AnswerSet::from_class(a);
      double dpa = dpa_reward(resp, ans);
      double bin = binary_accuracy_reward(resp, ans);
      CAPTURE(r);
      CAPTURE(a);
      CHECK(dpa >= bin);
      CHECK((dpa == 1.0) == (r == a));  // full credit iff exact equality
      CHECK(dpa >= 0.0);
      CHECK(dpa <= 1.0);
      // Partial credit iff the evaluation metric counts it correct.
      CHECK((dpa > 0.0) == is_correct(resp, ans));
      for (AccuracyMode mode : {AccuracyMode::binary, AccuracyMode::dpa}) {
        RewardBreakdown rb = total_reward(resp, ans, mode);
        CHECK(rb.total == rb.format + rb.accuracy);
        CHECK(rb.total >= 1.0);  // format-ok responses always earn format
        CHECK(rb.total <= 2.0);
      }
    }
  }
}

TEST_CASE("strict monotonicity along containment chains") {
  for (int r1 = 0; r1 < AnswerSet::kClassCount; ++r1) {
    for (int r2 = 0; r2 < AnswerSet::kClassCount; ++r2) {
      for (int a = 0; a < AnswerSet::kClassCount; ++a) {
        AnswerSet s1 = AnswerSet::from_class(r1);
        AnswerSet s2 = AnswerSet::from_class(r2);
        AnswerSet ans = AnswerSet::from_class(a);
        bool proper = s1.subset_of(s2) && !(s1 == s2);
        if (proper && s2.subset_of(ans)) {
          CHECK(dpa_reward(well_formed(r1), ans) <
                dpa_reward(well_formed(r2), ans));
        }
      }
    }
  }
}

TEST_CASE("accuracy is forced to zero when format fails") {
  ParsedResponse sneaky = parse_response("<answer>AN</answer>");
  for (int a = 0; a < AnswerSet::kClassCount; ++a) {
    AnswerSet ans = AnswerSet::from_class(a);
    for (AccuracyMode mode : {AccuracyMode::binary, AccuracyMode::dpa}) {
      RewardBreakdown rb = total_reward(sneaky, ans, mode);
      CHECK(rb.format == 0.0);
      CHECK(rb.accuracy == 0.0);
      CHECK(rb.total == 0.0);
    }
  }
}
