#include <doctest.h>

#include <algorithm>

#include "apn/model.hpp"
#include "support.hpp"

using namespace apn;
using apn::test::make_transition;

namespace {

Net up_down() {
  Net net;
  net.places = {"Up", "Down"};
  net.transitions.push_back(make_transition("fail", "Up", "Down", Exponential{100}));
  net.transitions.push_back(make_transition("repair", "Down", "Up", Fixed{10}));
  net.tokens.push_back({"Up", 1, 0, 2});
  return net;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule.find(rule) != std::string::npos; });
}

}  // namespace

TEST_CASE("a small valid net has no violations") { CHECK(validate(up_down()).empty()); }

TEST_CASE("two input places are reported") {
  auto net = up_down();
  net.transitions[0].inputs.push_back("Down");
  const auto v = validate(net);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "multiple inputs");
  CHECK(v[0].element == "transition fail");
}

TEST_CASE("trigger multiplicity must be positive") {
  auto net = up_down();
  net.triggers.push_back({TriggerKind::inhibitor, "Down", "repair", 0, std::nullopt});
  CHECK(has_rule(validate(net), "multiplicity >= 1"));
}

TEST_CASE("duplicate and dangling references") {
  auto net = up_down();
  net.places.push_back("Up");
  net.transitions.push_back(make_transition("fail", "Up", "Nowhere", Fixed{1}));
  net.triggers.push_back({TriggerKind::enabler, "Gone", "missing", 1, std::nullopt});
  const auto v = validate(net);
  CHECK(has_rule(v, "duplicate place id"));
  CHECK(has_rule(v, "duplicate transition id"));
  CHECK(has_rule(v, "output place 'Nowhere' is not declared"));
  CHECK(has_rule(v, "input place 'Gone' is not declared"));
  CHECK(has_rule(v, "target transition 'missing' is not declared"));
}

TEST_CASE("policy parameter ranges") {
  auto net = up_down();
  net.transitions[0].wildcard = Exponential{0};
  net.transitions[1].wildcard = Uniform{3, 2};
  net.transitions.push_back(make_transition("w", "Up", "Down", Weibull{-1, 2}));
  net.transitions.push_back(make_transition("f", "Up", "Down", Fixed{-1}));
  const auto v = validate(net);
  CHECK(has_rule(v, "exponential mean must be > 0"));
  CHECK(has_rule(v, "uniform upper bound"));
  CHECK(has_rule(v, "weibull scale"));
  CHECK(has_rule(v, "fixed delay"));
}

TEST_CASE("colors, ages and counts") {
  auto net = up_down();
  net.tokens.push_back({"Up", -1, 0, 1});
  net.tokens.push_back({"Up", 2, -3, 1});
  net.tokens.push_back({"Up", 2, 0, 0});
  const auto v = validate(net);
  CHECK(has_rule(v, "negative color"));
  CHECK(has_rule(v, "age must be finite"));
  CHECK(has_rule(v, "count must be >= 1"));
}

TEST_CASE("color map keys need a policy") {
  auto net = up_down();
  auto& t = net.transitions[0];
  t.wildcard.reset();
  t.policies[1] = Exponential{10};
  t.color_map[2] = 3;
  CHECK(has_rule(validate(net), "color map key 2 has no applicable policy"));
  t.color_map.clear();
  t.color_map[1] = 3;
  CHECK(validate(net).empty());
}

TEST_CASE("age scale factor range") {
  auto net = up_down();
  net.transitions[0].age_action = AgeScale{1.5};
  CHECK(has_rule(validate(net), "age scale factor"));
  net.transitions[0].age_action = AgeScale{0.25};
  CHECK(validate(net).empty());
}

TEST_CASE("source needs a policy for its emit color") {
  auto net = up_down();
  Transition src;
  src.id = "arrive";
  src.outputs = {"Up"};
  src.emit_color = 4;
  src.policies[3] = Exponential{1};
  net.transitions.push_back(src);
  CHECK(has_rule(validate(net), "source has no policy for its emit color"));
  net.transitions.back().policies[4] = Exponential{1};
  CHECK(validate(net).empty());

  Transition nothing;
  nothing.id = "nothing";
  nothing.wildcard = Fixed{1};
  net.transitions.push_back(nothing);
  CHECK(has_rule(validate(net), "needs an input or an output place"));
}

TEST_CASE("sensors are checked") {
  auto net = up_down();
  SensorSpec a;
  a.name = "a";
  a.place = "Nowhere";
  SensorSpec b;
  b.name = "a";
  b.kind = SensorKind::firing_count;
  b.transitions = {"fail", "nope"};
  b.window = Window{5, 5};
  net.sensors = {a, b};
  const auto v = validate(net);
  CHECK(has_rule(v, "place 'Nowhere' is not declared"));
  CHECK(has_rule(v, "duplicate sensor name"));
  CHECK(has_rule(v, "transition 'nope' is not declared"));
  CHECK(has_rule(v, "window must satisfy"));
}

TEST_CASE("validate is idempotent and leaves the net alone") {
  auto net = up_down();
  net.transitions[0].inputs.push_back("Down");
  const Net before = net;
  const auto first = validate(net);
  CHECK(validate(net) == first);
  CHECK(net == before);
}

TEST_CASE("policy lookup and color map") {
  Transition t = make_transition("t", "A", "B", Fixed{1});
  t.policies[2] = Exponential{3};
  t.color_map[2] = 5;
  REQUIRE(t.policy_for(2));
  CHECK(std::holds_alternative<Exponential>(*t.policy_for(2)));
  CHECK(std::holds_alternative<Fixed>(*t.policy_for(7)));
  CHECK(t.map_color(2) == 5);
  CHECK(t.map_color(7) == 7);
  t.wildcard.reset();
  CHECK(t.policy_for(7) == nullptr);
}

TEST_CASE("canonical order and token merging") {
  Net net = up_down();
  net.places = {"b", "a", "Up", "Down"};
  std::reverse(net.transitions.begin(), net.transitions.end());
  net.tokens = {{"Up", 2, 0, 1}, {"Up", 1, 0, 1}, {"Down", 1, 0, 1}, {"Up", 1, 0, 2}};
  net.canonicalize();
  CHECK(net.places == std::vector<PlaceId>{"Down", "Up", "a", "b"});
  CHECK(net.transitions.front().id == "fail");
  REQUIRE(net.tokens.size() == 3);
  CHECK(net.tokens[0] == TokenGroup{"Down", 1, 0, 1});
  CHECK(net.tokens[1] == TokenGroup{"Up", 1, 0, 3});
  CHECK(net.tokens[2] == TokenGroup{"Up", 2, 0, 1});
  CHECK(net.token_count() == 5);
}

TEST_CASE("declared colors collects every literal") {
  Net net = up_down();
  net.transitions[0].policies[7] = Fixed{1};
  net.transitions[1].color_map[7] = 8;
  net.triggers.push_back({TriggerKind::enabler, "Up", "repair", 1, std::set<Color>{9}});
  CHECK(declared_colors(net) == std::set<Color>{1, 7, 8, 9});
}

TEST_CASE("require_valid throws with the violations") {
  auto net = up_down();
  net.transitions[0].outputs.push_back("Up");
  try {
    require_valid(net);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].rule == "multiple outputs");
  }
}

TEST_CASE("shipped models validate") {
  for (const char* name : apn::test::kShippedModels) {
    CAPTURE(name);
    CHECK(validate(apn::test::shipped(name).net).empty());
  }
}
