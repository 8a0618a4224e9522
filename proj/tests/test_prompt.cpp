#include "doctest.h"

#include <cstdio>

#include "cotgauge/extract.hpp"
#include "cotgauge/prompt.hpp"

using namespace cotgauge;

namespace {

Question numeric_question() {
  Question q;
  q.id = "q-num";
  q.dataset_id = "demo";
  q.text = "What is 6 times 7?";
  q.form = AnswerForm::numeric();
  q.gold = CanonicalAnswer::of_number(42);
  return q;
}

Question choice_question() {
  Question q;
  q.id = "q-mc";
  q.dataset_id = "demo";
  q.text = "Which planet is known as the red planet?";
  q.form = AnswerForm::multiple_choice({"A", "B", "C"});
  q.options = {{"A", "Venus"}, {"B", "Mars"}, {"C", "Pluto"}};
  q.gold = CanonicalAnswer::of_label("B");
  return q;
}

Question boolean_question() {
  Question q;
  q.id = "q-bool";
  q.dataset_id = "demo";
  q.text = "Is water wet?";
  q.form = AnswerForm::boolean_form();
  q.gold = CanonicalAnswer::of_bool(true);
  return q;
}

const TemplateSet& templates() {
  static TemplateSet set = TemplateSet::defaults();
  return set;
}

std::string number_to_text(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%g", v);
  return buffer;
}

}  // namespace

TEST_CASE("baseline prompt: question verbatim, ends with the format instruction") {
  Question q = numeric_question();
  std::string prompt =
      render_prompt(q, Condition::baseline, std::nullopt, templates().for_condition(Condition::baseline));
  CHECK(prompt.find(q.text) != std::string::npos);
  std::string instruction = answer_format_instruction(q.form);
  CHECK(instruction.find("Answer: <number>") != std::string::npos);
  REQUIRE(prompt.size() >= instruction.size());
  CHECK(prompt.substr(prompt.size() - instruction.size()) == instruction);
  // The baseline stays free of step-by-step elicitation.
  CHECK(prompt.find("step by step") == std::string::npos);
}

TEST_CASE("with_cot prompt: reasoning lands after the question") {
  Question q = numeric_question();
  std::string cot = "Step 1: six sevens are 42.";
  std::string prompt =
      render_prompt(q, Condition::with_cot, cot, templates().for_condition(Condition::with_cot));
  auto q_pos = prompt.find(q.text);
  auto cot_pos = prompt.find(cot);
  REQUIRE(q_pos != std::string::npos);
  REQUIRE(cot_pos != std::string::npos);
  CHECK(cot_pos > q_pos);
  std::string instruction = answer_format_instruction(q.form);
  CHECK(prompt.substr(prompt.size() - instruction.size()) == instruction);
}

TEST_CASE("multiple choice prompts enumerate the options with labels") {
  Question q = choice_question();
  std::string prompt =
      render_prompt(q, Condition::baseline, std::nullopt, templates().for_condition(Condition::baseline));
  CHECK(prompt.find("A. Venus") != std::string::npos);
  CHECK(prompt.find("B. Mars") != std::string::npos);
  CHECK(prompt.find("C. Pluto") != std::string::npos);
  CHECK(prompt.find(q.text) != std::string::npos);
}

TEST_CASE("boolean instruction asks for yes/no") {
  std::string instruction = answer_format_instruction(AnswerForm::boolean_form());
  CHECK(instruction.find("yes") != std::string::npos);
  CHECK(instruction.find("no") != std::string::npos);
}

TEST_CASE("cot presence must match the condition") {
  Question q = numeric_question();
  CHECK_THROWS(render_prompt(q, Condition::with_cot, std::nullopt,
                             templates().for_condition(Condition::with_cot)));
  CHECK_THROWS(render_prompt(q, Condition::baseline, std::string("sneaky"),
                             templates().for_condition(Condition::baseline)));
}

TEST_CASE("template/condition mismatch is an error") {
  Question q = numeric_question();
  CHECK_THROWS(render_prompt(q, Condition::baseline, std::nullopt,
                             templates().for_condition(Condition::thinker_generate)));
}

TEST_CASE("template validation: placeholders appear exactly once per condition") {
  CHECK_THROWS(PromptTemplate::parse(Condition::baseline, "{question}{options}"));  // no instruction
  CHECK_THROWS(PromptTemplate::parse(Condition::baseline,
                                     "{question}{options}{cot}{answer_format_instruction}"));  // stray cot
  CHECK_THROWS(PromptTemplate::parse(
      Condition::with_cot, "{question}{options}{cot}{cot}{answer_format_instruction}"));  // repeated
  CHECK_NOTHROW(PromptTemplate::parse(Condition::with_cot,
                                      "{question}{options}\n{cot}\n{answer_format_instruction}"));
  // The corruptor emits reasoning, not an answer.
  CHECK_THROWS(PromptTemplate::parse(Condition::corruptor,
                                     "{question}{options}{cot}{answer_format_instruction}"));
  CHECK_NOTHROW(PromptTemplate::parse(Condition::corruptor, "{question}{options}\n{cot}"));
}

TEST_CASE("template digest pins the exact bytes") {
  auto a = PromptTemplate::parse(Condition::baseline, "{question}{options} {answer_format_instruction}");
  auto b = PromptTemplate::parse(Condition::baseline, "{question}{options}  {answer_format_instruction}");
  auto c = PromptTemplate::parse(Condition::baseline, "{question}{options} {answer_format_instruction}");
  CHECK(a.digest != b.digest);
  CHECK(a.digest == c.digest);
  CHECK(a.digest.size() == 64);
}

TEST_CASE("a reply that restates the gold answer grades correct for every form") {
  // Template -> model echo -> extraction round trip.
  for (const Question& q : {numeric_question(), choice_question(), boolean_question()}) {
    std::string reply;
    if (q.form.kind == FormKind::numeric) {
      reply = "Working it out.\nAnswer: " + number_to_text(q.gold.number());
    } else if (q.form.kind == FormKind::multiple_choice) {
      reply = "Weighing the options.\nAnswer: " + q.gold.label();
    } else {
      reply = std::string("Thinking.\nAnswer: ") + (q.gold.truth() ? "yes" : "no");
    }
    auto extracted = extract_answer(reply, q.form);
    CHECK(grade(extracted, q.gold, q.form) == Grade::correct);
  }
}

TEST_CASE("default template set covers every condition with distinct digests per text") {
  const TemplateSet& set = templates();
  auto digests = set.digests();
  CHECK(digests.size() == 6);
  // with_cot, with_corrupted_cot, and thinker_validation share one template text.
  CHECK(digests.at("with_cot") == digests.at("with_corrupted_cot"));
  CHECK(digests.at("with_cot") == digests.at("thinker_validation"));
  CHECK(digests.at("baseline") != digests.at("thinker_generate"));
}
