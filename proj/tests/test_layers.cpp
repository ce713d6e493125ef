#include <doctest.h>

#include <map>
#include <random>

#include "apn/engine.hpp"
#include "apn/layers.hpp"
#include "support.hpp"

using namespace apn;
using apn::test::make_transition;

namespace {

// Template of the service example: colors 0..2, shared Shop place.
LayerTemplate service_template(int copies) {
  LayerTemplate l;
  l.name = "subnet";
  l.copies = copies;
  l.color_span = 3;
  auto& f = l.fragment;
  f.places = {"Working", "Worn"};
  auto wear = make_transition("wear", "Working", "Worn", Exponential{8});
  wear.wildcard.reset();
  wear.policies[1] = Exponential{8};
  wear.color_map[1] = 2;
  auto send = make_transition("send", "Worn", "Shop", Exponential{2});
  send.wildcard.reset();
  send.policies[2] = Exponential{2};
  auto back = make_transition("back", "Shop", "Working", Uniform{1, 3});
  back.color_map[2] = 1;
  f.transitions = {wear, send, back};
  f.triggers.push_back({TriggerKind::inhibitor, "Shop", "send", 3, std::nullopt});
  f.tokens.push_back({"Working", 1, 0, 2});
  SensorSpec s;
  s.name = "working";
  s.place = "Working";
  f.sensors.push_back(s);
  return l;
}

Net shop_base() {
  Net base;
  base.places = {"Shop"};
  return base;
}

}  // namespace

TEST_CASE("color shift of zero is the identity") {
  const auto l = service_template(1);
  CHECK(color_shift(l.fragment, 0) == l.fragment);
}

TEST_CASE("color shift moves every literal") {
  auto f = service_template(1).fragment;
  f.triggers[0].colors = std::set<Color>{0, 2};
  f.sensors[0].colors = std::set<Color>{1};
  const Net g = color_shift(f, 3);
  CHECK(g.tokens[0].color == 4);
  CHECK(g.transitions[0].policies.count(4) == 1);
  CHECK(g.transitions[0].color_map == std::map<Color, Color>{{4, 5}});
  CHECK(g.transitions[1].policies.count(5) == 1);
  CHECK(g.transitions[2].color_map == std::map<Color, Color>{{5, 4}});
  CHECK(*g.triggers[0].colors == std::set<Color>{3, 5});
  CHECK(*g.sensors[0].colors == std::set<Color>{4});
  // Structure is unchanged.
  CHECK(g.places == f.places);
  CHECK(g.transitions[2].wildcard == f.transitions[2].wildcard);
}

TEST_CASE("shifting back by re-deriving from the original reproduces it") {
  const auto f = service_template(1).fragment;
  for (Color offset : {1, 3, 17}) {
    const Net shifted = color_shift(f, offset);
    // Recover the original by comparing with a fresh shift of the original:
    // every literal of `shifted` minus offset must match the original.
    Net back = shifted;
    for (auto& g : back.tokens) g.color -= offset;
    for (auto& t : back.transitions) {
      std::map<Color, DelayPolicy> p;
      for (const auto& [c, v] : t.policies) p.emplace(c - offset, v);
      t.policies = p;
      std::map<Color, Color> m;
      for (const auto& [a, b] : t.color_map) m.emplace(a - offset, b - offset);
      t.color_map = m;
    }
    CHECK(back == f);
  }
}

TEST_CASE("negative offsets are rejected") { CHECK_THROWS_AS(color_shift(Net{}, -1), Error); }

TEST_CASE("color ranges of copies") {
  const auto l = service_template(2);
  CHECK(layer_color_range(l, 1) == std::pair<Color, Color>{3, 6});
  CHECK(layer_color_range(l, 2) == std::pair<Color, Color>{6, 9});
  CHECK(layer_name("wear", 2) == "wear#2");
}

TEST_CASE("two service subnets use colors 3..5 and 6..8") {
  const Net net = expand_layers(shop_base(), service_template(2));
  CHECK(net.places == std::vector<PlaceId>{"Shop", "Working#1", "Working#2", "Worn#1", "Worn#2"});
  REQUIRE(net.find_transition("wear#1"));
  CHECK(net.find_transition("wear#1")->color_map == std::map<Color, Color>{{4, 5}});
  CHECK(net.find_transition("wear#2")->color_map == std::map<Color, Color>{{7, 8}});

  // The shop return is narrowed to the copy's own range.
  const auto* back1 = net.find_transition("back#1");
  const auto* back2 = net.find_transition("back#2");
  REQUIRE(back1);
  REQUIRE(back2);
  CHECK_FALSE(back1->wildcard);
  for (Color c = 0; c < 12; ++c) {
    CAPTURE(c);
    CHECK((back1->policy_for(c) != nullptr) == (c >= 3 && c < 6));
    CHECK((back2->policy_for(c) != nullptr) == (c >= 6 && c < 9));
  }
  CHECK(net.tokens == std::vector<TokenGroup>{{"Working#1", 4, 0, 2}, {"Working#2", 7, 0, 2}});
  CHECK(net.sensors.size() == 2);
  CHECK(net.sensors[0].name == "working#1");
  CHECK(net.sensors[1].place == "Working#2");
  CHECK(net.triggers.size() == 2);
  CHECK(net.triggers[0].target == "send#1");
  CHECK(net.triggers[0].place == "Shop");
  CHECK(net.triggers[0].multiplicity == 3);
}

TEST_CASE("a single copy is the template shifted by the span") {
  const auto l = service_template(1);
  const Net net = expand_layers(shop_base(), l);
  Net expected = color_shift(l.fragment, 3);
  // Rename as the expansion does.
  for (auto& p : expected.places) p = layer_name(p, 1);
  CHECK(net.places.size() == expected.places.size() + 1);
  for (const auto& t : expected.transitions) {
    const auto* e = net.find_transition(layer_name(t.id, 1));
    REQUIRE(e);
    CHECK(e->color_map == t.color_map);
    CHECK(e->age_action == t.age_action);
  }
}

TEST_CASE("copies are isomorphic to the template") {
  const auto l = service_template(3);
  const Net net = expand_layers(shop_base(), l);
  for (int k = 1; k <= 3; ++k) {
    const Color shift = 3 * k;
    for (const auto& t : l.fragment.transitions) {
      const auto* c = net.find_transition(layer_name(t.id, k));
      REQUIRE(c);
      auto rename = [&](const PlaceId& p) { return p == "Shop" ? p : layer_name(p, k); };
      CHECK(c->inputs.at(0) == rename(t.inputs.at(0)));
      CHECK(c->outputs.at(0) == rename(t.outputs.at(0)));
      for (const auto& [from, to] : t.color_map) CHECK(c->color_map.at(from + shift) == to + shift);
      for (const auto& [color, p] : t.policies) CHECK(*c->policy_for(color + shift) == p);
    }
  }
}

TEST_CASE("a template that leaves its span leaks") {
  auto l = service_template(2);
  l.fragment.transitions[0].color_map[1] = 3 + 2;  // 1 -> j + 2
  CHECK_THROWS_AS(expand_layers(shop_base(), l), ColorLeak);

  auto m = service_template(2);
  m.fragment.tokens[0].color = 3;
  CHECK_THROWS_AS(expand_layers(shop_base(), m), ColorLeak);

  try {
    expand_layers(shop_base(), l);
  } catch (const ColorLeak& e) {
    CHECK(std::string(e.what()).find("maps color 1 to 5") != std::string::npos);
  }
}

TEST_CASE("randomized color maps: leaks exactly when a color leaves the span") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    auto l = service_template(2);
    const Color from = pick(rng);
    const Color to = pick(rng);
    auto& wear = l.fragment.transitions[0];
    wear.policies.clear();
    wear.policies[from] = Exponential{8};
    wear.color_map = {{from, to}};
    l.fragment.tokens[0].color = from;
    // Scan oracle: any literal outside 0..2.
    bool oracle = false;
    for (Color c : declared_colors(l.fragment)) oracle |= (c < 0 || c >= 3);
    CAPTURE(from);
    CAPTURE(to);
    if (oracle) {
      CHECK_THROWS_AS(expand_layers(shop_base(), l), ColorLeak);
    } else {
      CHECK_NOTHROW(expand_layers(shop_base(), l));
    }
  }
}

TEST_CASE("zero span stacks identical layers") {
  const auto model = apn::test::shipped("layered_pairing");
  const auto* a = model.net.find_transition("car_in#1");
  const auto* b = model.net.find_transition("car_in#2");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->policies == b->policies);
  CHECK(a->outputs == std::vector<PlaceId>{"CarUsed#1"});
  CHECK(b->outputs == std::vector<PlaceId>{"CarUsed#2"});
  // Global triggers are not duplicated, local ones are renamed.
  int on_waiting = 0;
  for (const auto& t : model.net.triggers) on_waiting += (t.place == "Waiting");
  CHECK(on_waiting == 2);
}

TEST_CASE("invalid base nets are rejected before expansion") {
  Net base = shop_base();
  base.transitions.push_back(make_transition("x", "Nowhere", "Shop", Fixed{1}));
  CHECK_THROWS_AS(expand_layers(base, service_template(1)), ValidationError);
}

TEST_CASE("expanded service net keeps every token inside its home subnet") {
  const CompiledNet net(expand_layers(shop_base(), service_template(2)));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Simulator sim(net, seed, 100, {.debug_checks = false, .color_closure = true});
    sim.set_trace([&](const TraceRecord& r) {
      if (!r.to || *r.to == "Shop") return;
      const int home = r.to->back() - '0';
      CHECK(r.color_after >= 3 * home);
      CHECK(r.color_after < 3 * home + 3);
    });
    sim.run();
  }
}
