#include "doctest.h"

#include "cotgauge/extract.hpp"
#include "cotgauge/util.hpp"

using namespace cotgauge;

namespace {

const AnswerForm kNumeric = AnswerForm::numeric();
const AnswerForm kAbcd = AnswerForm::multiple_choice({"A", "B", "C", "D"});
const AnswerForm kBool = AnswerForm::boolean_form();

}  // namespace

TEST_CASE("answers_equal: numeric tolerance") {
  CHECK(answers_equal(CanonicalAnswer::of_number(42), CanonicalAnswer::of_number(42.0), kNumeric));
  CHECK(answers_equal(CanonicalAnswer::of_number(1000000.0), CanonicalAnswer::of_number(1000000.5), kNumeric));
  CHECK_FALSE(answers_equal(CanonicalAnswer::of_number(1.0), CanonicalAnswer::of_number(1.1), kNumeric));
  CHECK(answers_equal(CanonicalAnswer::of_number(0.0), CanonicalAnswer::of_number(1e-7), kNumeric));
}

TEST_CASE("answers_equal: labels case-fold") {
  CHECK(answers_equal(CanonicalAnswer::of_label("b"), CanonicalAnswer::of_label("B"), kAbcd));
  CHECK_FALSE(answers_equal(CanonicalAnswer::of_label("A"), CanonicalAnswer::of_label("B"), kAbcd));
}

TEST_CASE("answers_equal: booleans strict") {
  CHECK(answers_equal(CanonicalAnswer::of_bool(true), CanonicalAnswer::of_bool(true), kBool));
  CHECK_FALSE(answers_equal(CanonicalAnswer::of_bool(true), CanonicalAnswer::of_bool(false), kBool));
}

TEST_CASE("answers_equal: rejects values that do not fit the form") {
  CHECK_THROWS(answers_equal(CanonicalAnswer::of_label("E"), CanonicalAnswer::of_label("A"), kAbcd));
  CHECK_THROWS(answers_equal(CanonicalAnswer::of_bool(true), CanonicalAnswer::of_number(1), kNumeric));
}

TEST_CASE("answers_equal: equivalence properties on realistic values") {
  // Reflexive and symmetric always; transitive on well-separated values.
  SplitMix64 rng(2024);
  std::vector<CanonicalAnswer> values;
  for (int i = 0; i < 50; ++i) {
    values.push_back(CanonicalAnswer::of_number(static_cast<double>(rng.bounded(10000))));
  }
  for (const auto& a : values) {
    CHECK(answers_equal(a, a, kNumeric));
    for (const auto& b : values) {
      CHECK(answers_equal(a, b, kNumeric) == answers_equal(b, a, kNumeric));
      for (const auto& c : values) {
        if (answers_equal(a, b, kNumeric) && answers_equal(b, c, kNumeric)) {
          CHECK(answers_equal(a, c, kNumeric));
        }
      }
    }
  }
}

TEST_CASE("extract_answer: numeric marker") {
  auto r = extract_answer("...so the total is 42. Answer: 42", kNumeric);
  REQUIRE(r.parsed);
  CHECK(r.value.number() == doctest::Approx(42.0));

  SUBCASE("span covers the numeral") {
    std::string raw = "...so the total is 42. Answer: 42";
    CHECK(raw.substr(r.span_begin, r.span_end - r.span_begin) == "42");
    CHECK(r.span_begin > 25);  // the marker occurrence, not the prose one
  }
}

TEST_CASE("extract_answer: last marker wins") {
  auto r = extract_answer("Answer: 10\nWait, that is wrong.\nAnswer: 20", kNumeric);
  REQUIRE(r.parsed);
  CHECK(r.value.number() == doctest::Approx(20.0));
}

TEST_CASE("extract_answer: numeric decorations") {
  CHECK(extract_answer("Answer: $1,080", kNumeric).value.number() == doctest::Approx(1080.0));
  CHECK(extract_answer("Answer: -3.5", kNumeric).value.number() == doctest::Approx(-3.5));
  CHECK(extract_answer("The answer is 7", kNumeric).value.number() == doctest::Approx(7.0));
}

TEST_CASE("extract_answer: numeric fallback takes the last standalone number") {
  auto r = extract_answer("First we get 12 apples, then 18 remain.", kNumeric);
  REQUIRE(r.parsed);
  CHECK(r.value.number() == doctest::Approx(18.0));
}

TEST_CASE("extract_answer: numeric unparseable") {
  auto r = extract_answer("No idea at all.", kNumeric);
  CHECK_FALSE(r.parsed);
  CHECK_FALSE(r.reason.empty());
}

TEST_CASE("extract_answer: choice label in parentheses, case-folded") {
  auto r = extract_answer("Answer: (b)", kAbcd);
  REQUIRE(r.parsed);
  CHECK(r.value.label() == "B");
}

TEST_CASE("extract_answer: choice label variants") {
  CHECK(extract_answer("Answer: C.", kAbcd).value.label() == "C");
  CHECK(extract_answer("The answer is D", kAbcd).value.label() == "D");
  CHECK(extract_answer("final answer: a", kAbcd).value.label() == "A");
}

TEST_CASE("extract_answer: choice fallback avoids bare lowercase articles") {
  // "a" as an article must not read as option A...
  auto r = extract_answer("Bring a ladder. It must be (b)", kAbcd);
  REQUIRE(r.parsed);
  CHECK(r.value.label() == "B");
  // ...but an uppercase standalone letter counts.
  auto r2 = extract_answer("So it must be B", kAbcd);
  REQUIRE(r2.parsed);
  CHECK(r2.value.label() == "B");
  // No label at all -> unparseable.
  CHECK_FALSE(extract_answer("Bring a ladder.", kAbcd).parsed);
}

TEST_CASE("extract_answer: numeric option labels") {
  AnswerForm numbered = AnswerForm::multiple_choice({"1", "2", "3", "4"});
  auto r = extract_answer("Answer: 3", numbered);
  REQUIRE(r.parsed);
  CHECK(r.value.label() == "3");
}

TEST_CASE("extract_answer: boolean tokens") {
  CHECK(extract_answer("Answer: yes", kBool).value.truth());
  CHECK(extract_answer("Answer: No", kBool).value.truth() == false);
  CHECK(extract_answer("It is true that pigs cannot fly, so: false", kBool).value.truth() == false);
}

TEST_CASE("extract_answer: boolean unparseable") {
  auto r = extract_answer("I cannot decide.", kBool);
  CHECK_FALSE(r.parsed);
}

TEST_CASE("extract_answer: never returns a value invalid for the form") {
  SplitMix64 rng(77);
  const char* snippets[] = {"Answer: ", "the result is ", "", "maybe ", "Answer:\n"};
  const char* tails[] = {"42", "(b)", "yes", "E", "nothing", "9999999", "true", "-1", "B."};
  for (int i = 0; i < 500; ++i) {
    std::string text = std::string(snippets[rng.bounded(5)]) + tails[rng.bounded(9)] + " " +
                       tails[rng.bounded(9)];
    for (const AnswerForm* form : {&kNumeric, &kAbcd, &kBool}) {
      auto r = extract_answer(text, *form);
      if (r.parsed) CHECK(r.value.valid_for(*form));
    }
  }
}

TEST_CASE("grade: parsed vs gold") {
  auto parsed18 = extract_answer("Answer: 18", kNumeric);
  auto parsed17 = extract_answer("Answer: 17", kNumeric);
  auto gold = CanonicalAnswer::of_number(18);
  CHECK(grade(parsed18, gold, kNumeric) == Grade::correct);
  CHECK(grade(parsed17, gold, kNumeric) == Grade::wrong);
}

TEST_CASE("grade: unparseable is wrong") {
  auto r = extract_answer("shrug", kBool);
  CHECK(grade(r, CanonicalAnswer::of_bool(true), kBool) == Grade::wrong);
  CHECK(grade(r, CanonicalAnswer::of_bool(false), kBool) == Grade::wrong);
}

TEST_CASE("extraction result JSON round trip") {
  auto r = extract_answer("Answer: (b)", kAbcd);
  auto back = ExtractionResult::from_json(r.to_json(), kAbcd);
  CHECK(back.parsed == r.parsed);
  CHECK(back.value.label() == r.value.label());
  CHECK(back.span_begin == r.span_begin);

  auto bad = extract_answer("nope", kNumeric);
  auto bad_back = ExtractionResult::from_json(bad.to_json(), kNumeric);
  CHECK_FALSE(bad_back.parsed);
  CHECK(bad_back.reason == bad.reason);
}
