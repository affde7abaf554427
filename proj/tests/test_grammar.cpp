#include "gsl/grammar.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "gsl/rng.hpp"

using namespace gsl;

TEST_CASE("parse single step") {
  SkillPlan p = parse_task("press(button[color=red])");
  REQUIRE(p.steps.size() == 1);
  CHECK(p.steps[0].label == SkillLabel::press);
  CHECK(p.steps[0].query.category == "button");
  REQUIRE(p.steps[0].query.attributes.size() == 1);
  CHECK(p.steps[0].query.attributes[0].first == "color");
  CHECK(p.steps[0].query.attributes[0].second == "red");
  CHECK(p.steps[0].query.qualifier == Qualifier::none);
}

TEST_CASE("parse multi-step plan with qualifiers and whitespace") {
  SkillPlan p = parse_task(
      "pick(block[color=blue,size=small], leftmost) then lift(block[color=blue])");
  REQUIRE(p.steps.size() == 2);
  CHECK(p.steps[0].label == SkillLabel::pick);
  CHECK(p.steps[0].query.qualifier == Qualifier::leftmost);
  REQUIRE(p.steps[0].query.attributes.size() == 2);
  CHECK(p.steps[0].query.attributes[1].first == "size");
  CHECK(p.steps[0].query.attributes[1].second == "small");
  CHECK(p.steps[1].label == SkillLabel::lift);
  CHECK(p.steps[1].query.attributes.size() == 1);
}

TEST_CASE("parse bare category and qualifier-only step") {
  SkillPlan p = parse_task("open(box) then close(box,nearest)");
  CHECK(p.steps[0].query.attributes.empty());
  CHECK(p.steps[0].query.qualifier == Qualifier::none);
  CHECK(p.steps[1].query.qualifier == Qualifier::nearest);
}

TEST_CASE("all nine skills parse and carry fixed indices") {
  const char* names[] = {"press", "pick", "place", "screw", "lift",
                         "pull_out", "push_back", "open", "close"};
  for (int i = 0; i < kSkillCount; ++i) {
    SkillPlan p = parse_task(std::string(names[i]) + "(block)");
    CHECK(static_cast<int>(p.steps[0].label) == i);
  }
}

TEST_CASE("parse errors carry position and expected set") {
  try {
    parse_task("press(button color=red)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 13);  // at 'color'
    CHECK(e.expected == std::vector<std::string>{"'['", "','", "')'"});
  }

  try {
    parse_task("grab(block)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 0);
    CHECK(e.expected.size() == 9);  // the full skill vocabulary
  }

  try {
    parse_task("");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 0);
  }

  try {
    parse_task("press(button[shade=red])");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 13);
    CHECK(e.expected == std::vector<std::string>{"'color'", "'size'"});
  }

  try {
    parse_task("press(button,upmost)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 13);
    CHECK(e.expected.size() == 4);
  }

  try {
    parse_task("press(button) lift(block)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 14);
    CHECK(e.expected == std::vector<std::string>{"'then'", "end of input"});
  }

  CHECK_THROWS_AS(parse_task("press(button"), ParseError);
  CHECK_THROWS_AS(parse_task("press(button[color=])"), ParseError);
  CHECK_THROWS_AS(parse_task("press(Button)"), ParseError);
  CHECK_THROWS_AS(parse_task("press(button) then"), ParseError);
}

TEST_CASE("unparse produces canonical text") {
  SkillPlan p = parse_task("  pick( block [ color=blue ] , leftmost )  then lift(block)");
  CHECK(unparse_plan(p) == "pick(block[color=blue],leftmost) then lift(block)");
}

TEST_CASE("fuzz round-trip: parse(unparse(plan)) == plan") {
  Rng rng(12345);
  const char* categories[] = {"button", "block", "jar", "lid", "drawer", "box", "cup"};
  const char* colors[] = {"red", "green", "blue", "yellow", "pink", "gray"};
  const char* sizes[] = {"small", "large"};
  for (int trial = 0; trial < 500; ++trial) {
    SkillPlan plan;
    int nsteps = 1 + static_cast<int>(rng.uniform_index(4));
    for (int s = 0; s < nsteps; ++s) {
      PlanStep step;
      step.label = static_cast<SkillLabel>(rng.uniform_index(kSkillCount));
      step.query.category = categories[rng.uniform_index(7)];
      int nattr = static_cast<int>(rng.uniform_index(3));
      for (int a = 0; a < nattr; ++a) {
        if (rng.uniform_index(2) == 0)
          step.query.attributes.emplace_back("color", colors[rng.uniform_index(6)]);
        else
          step.query.attributes.emplace_back("size", sizes[rng.uniform_index(2)]);
      }
      if (rng.uniform_index(3) == 0)
        step.query.qualifier =
            static_cast<Qualifier>(1 + rng.uniform_index(4));
      plan.steps.push_back(step);
    }
    std::string text = unparse_plan(plan);
    SkillPlan back = parse_task(text);
    REQUIRE(back == plan);
    // Canonical text is a fixed point.
    CHECK(unparse_plan(back) == text);
  }
}
