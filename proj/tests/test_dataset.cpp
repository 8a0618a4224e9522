#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cotgauge/dataset.hpp"

using namespace cotgauge;

namespace {

std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(COTGAUGE_FIXTURE_DIR) / name;
}

}  // namespace

TEST_CASE("gsm8k: gold parses the token after the final ####") {
  Dataset d = load_dataset(fixture("gsm8k_mini.jsonl"), DatasetFormat::gsm8k);
  REQUIRE(d.questions.size() == 4);
  CHECK(d.questions[0].form.kind == FormKind::numeric);
  CHECK(d.questions[0].gold.number() == doctest::Approx(72));
  CHECK(d.questions[1].gold.number() == doctest::Approx(10));
  // Thousands separator stripped.
  CHECK(d.questions[2].gold.number() == doctest::Approx(1080));
  // Decimal gold.
  CHECK(d.questions[3].gold.number() == doctest::Approx(5.5));
  CHECK_FALSE(d.source_digest.empty());
}

TEST_CASE("svamp: Body + Question concatenation, numeric gold") {
  Dataset d = load_dataset(fixture("svamp_mini.json"), DatasetFormat::svamp);
  REQUIRE(d.questions.size() == 3);
  CHECK(d.questions[0].id == "chal-1");
  CHECK(d.questions[0].text ==
        "There are 87 oranges and 290 bananas in Philip's collection. The bananas are organized into 2 "
        "groups and oranges are organized into 93 groups. How big is each group of bananas?");
  CHECK(d.questions[0].gold.number() == doctest::Approx(145.0));
  CHECK(d.questions[2].gold.number() == doctest::Approx(17.39));
}

TEST_CASE("arc: lettered and numbered answer keys") {
  Dataset d = load_dataset(fixture("arc_mini.jsonl"), DatasetFormat::arc_challenge);
  REQUIRE(d.questions.size() == 3);
  CHECK(d.questions[0].form.kind == FormKind::multiple_choice);
  CHECK(d.questions[0].form.option_labels == std::vector<std::string>({"A", "B", "C", "D"}));
  CHECK(d.questions[0].gold.label() == "C");
  CHECK(d.questions[0].options[2].text == "Planetary days will become shorter.");
  // Some records use numeric labels.
  CHECK(d.questions[2].form.option_labels == std::vector<std::string>({"1", "2", "3", "4"}));
  CHECK(d.questions[2].gold.label() == "2");
}

TEST_CASE("strategyqa: boolean golds") {
  Dataset d = load_dataset(fixture("strategyqa_mini.json"), DatasetFormat::strategyqa);
  REQUIRE(d.questions.size() == 2);
  CHECK(d.questions[0].form.kind == FormKind::boolean_form);
  CHECK(d.questions[0].gold.truth() == false);
  CHECK(d.questions[1].gold.truth() == true);
}

TEST_CASE("commonsenseqa: five choices") {
  Dataset d = load_dataset(fixture("csqa_mini.jsonl"), DatasetFormat::commonsenseqa);
  REQUIRE(d.questions.size() == 3);
  CHECK(d.questions[0].form.option_labels.size() == 5);
  CHECK(d.questions[1].gold.label() == "B");
}

TEST_CASE("empty input is a malformed-dataset error") {
  CHECK_THROWS_WITH_AS(parse_dataset("", DatasetFormat::gsm8k, "empty-input"),
                       doctest::Contains("empty"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_dataset("\n  \n", DatasetFormat::canonical_jsonl, "blank-input"),
                       doctest::Contains("empty"), std::runtime_error);
}

TEST_CASE("malformed records report the line number") {
  std::string bad = R"({"question": "ok", "answer": "x #### 5"})"
                    "\n"
                    R"({"question": "missing answer"})"
                    "\n";
  CHECK_THROWS_WITH_AS(parse_dataset(bad, DatasetFormat::gsm8k, "bad.jsonl"), doctest::Contains("bad.jsonl:2"),
                       std::runtime_error);

  std::string no_delim = R"({"question": "ok", "answer": "no delimiter here"})"
                         "\n";
  CHECK_THROWS_WITH_AS(parse_dataset(no_delim, DatasetFormat::gsm8k, "nodelim.jsonl"),
                       doctest::Contains("####"), std::runtime_error);

  std::string bad_key =
      R"({"id": "x", "question": {"stem": "?", "choices": [{"text": "t", "label": "A"}, {"text": "u", "label": "B"}]}, "answerKey": "Z"})"
      "\n";
  CHECK_THROWS_WITH_AS(parse_dataset(bad_key, DatasetFormat::arc_challenge, "badkey.jsonl"),
                       doctest::Contains("not among the option labels"), std::runtime_error);
}

TEST_CASE("sample_dataset: determinism, saturation, empty") {
  Dataset d = load_dataset(fixture("gsm8k_mini.jsonl"), DatasetFormat::gsm8k);

  Dataset none = sample_dataset(d, 0, 7);
  CHECK(none.questions.empty());

  Dataset all = sample_dataset(d, 99, 7);
  CHECK(all.questions.size() == d.questions.size());

  Dataset a = sample_dataset(d, 2, 7);
  Dataset b = sample_dataset(d, 2, 7);
  REQUIRE(a.questions.size() == 2);
  CHECK(to_canonical_jsonl(a) == to_canonical_jsonl(b));

  // Preserves original relative order and draws without replacement.
  Dataset c = sample_dataset(d, 3, 12345);
  std::size_t last_index = 0;
  bool first = true;
  for (const auto& q : c.questions) {
    std::size_t index = 0;
    for (; index < d.questions.size(); ++index) {
      if (d.questions[index].id == q.id) break;
    }
    REQUIRE(index < d.questions.size());
    if (!first) CHECK(index > last_index);
    last_index = index;
    first = false;
  }

  // Different seeds eventually pick different subsets.
  bool any_difference = false;
  for (std::uint64_t seed = 0; seed < 16 && !any_difference; ++seed) {
    any_difference = to_canonical_jsonl(sample_dataset(d, 2, seed)) != to_canonical_jsonl(a);
  }
  CHECK(any_difference);
}

TEST_CASE("validate_dataset: reports defects instead of throwing") {
  Dataset d = load_dataset(fixture("arc_mini.jsonl"), DatasetFormat::arc_challenge);
  CHECK(validate_dataset(d).ok());

  SUBCASE("duplicate id is named") {
    Dataset dup = d;
    dup.questions.push_back(dup.questions[0]);
    auto report = validate_dataset(dup);
    CHECK_FALSE(report.ok());
    REQUIRE(report.duplicate_ids.size() == 1);
    CHECK(report.duplicate_ids[0] == d.questions[0].id);
  }

  SUBCASE("single-option multiple choice is a defect") {
    Dataset bad = d;
    bad.questions[0].form = AnswerForm::multiple_choice({"A"});
    bad.questions[0].options = {{"A", "only"}};
    bad.questions[0].gold = CanonicalAnswer::of_label("A");
    auto report = validate_dataset(bad);
    CHECK_FALSE(report.ok());
  }

  SUBCASE("gold outside the form is a defect") {
    Dataset bad = d;
    bad.questions[0].gold = CanonicalAnswer::of_label("Z");
    CHECK_FALSE(validate_dataset(bad).ok());
  }

  SUBCASE("form counts are tallied") {
    auto report = validate_dataset(d);
    CHECK(report.form_counts.at("multiple_choice") == 3);
  }
}

TEST_CASE("canonical round trip preserves ids, forms, and golds") {
  for (auto [file, format] : std::initializer_list<std::pair<const char*, DatasetFormat>>{
           {"gsm8k_mini.jsonl", DatasetFormat::gsm8k},
           {"svamp_mini.json", DatasetFormat::svamp},
           {"arc_mini.jsonl", DatasetFormat::arc_challenge},
           {"strategyqa_mini.json", DatasetFormat::strategyqa},
           {"csqa_mini.jsonl", DatasetFormat::commonsenseqa}}) {
    Dataset d = load_dataset(fixture(file), format);
    CHECK(validate_dataset(d).ok());

    std::string exported = to_canonical_jsonl(d);
    Dataset back = parse_dataset(exported, DatasetFormat::canonical_jsonl, std::string(file) + "-roundtrip");
    REQUIRE(back.questions.size() == d.questions.size());
    for (std::size_t i = 0; i < d.questions.size(); ++i) {
      CHECK(back.questions[i].id == d.questions[i].id);
      CHECK(back.questions[i].text == d.questions[i].text);
      CHECK(back.questions[i].form == d.questions[i].form);
      CHECK(back.questions[i].options == d.questions[i].options);
      CHECK(back.questions[i].gold.to_json() == d.questions[i].gold.to_json());
    }
    // Exporting the re-load yields identical bytes.
    CHECK(to_canonical_jsonl(back) == exported);
  }
}
