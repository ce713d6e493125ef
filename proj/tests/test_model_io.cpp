#include <doctest.h>

#include <random>
#include <sstream>

#include "apn/model_io.hpp"
#include "apn/trace_io.hpp"
#include "support.hpp"

using namespace apn;

namespace {

const char* kUpDown = R"(
places: [Up, Down]
transitions:
  - {id: fail, input: Up, output: Down, policies: [{color: "*", delay: exponential, mean: 100}]}
  - {id: repair, input: Down, output: Up, policies: [{color: "*", delay: fixed, value: 10}]}
tokens:
  - {place: Up, color: 1, count: 2}
sensors:
  - {name: both_up, kind: threshold, place: Up, relation: ">=", k: 2}
simulation: {horizon: 200, replications: 10000, seed: 1, window: [100, 200]}
)";

ParseError parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a ParseError");
  return ParseError("");
}

// Random valid nets for the round-trip property.
Net random_net(std::mt19937_64& rng) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&] { return std::uniform_real_distribution<double>(0.001, 50)(rng); };
  Net net;
  const int places = uniform(1, 5);
  for (int p = 0; p < places; ++p) net.places.push_back("P" + std::to_string(p));
  auto place = [&] { return net.places[static_cast<std::size_t>(uniform(0, places - 1))]; };
  const int transitions = uniform(1, 6);
  for (int i = 0; i < transitions; ++i) {
    Transition t;
    t.id = "t" + std::to_string(i);
    const int shape = uniform(0, 5);
    if (shape != 0) t.inputs.push_back(place());
    if (shape != 1 || t.inputs.empty()) t.outputs.push_back(place());
    auto policy = [&]() -> DelayPolicy {
      switch (uniform(0, 4)) {
        case 0: return Immediate{uniform(-3, 3)};
        case 1: return Fixed{real()};
        case 2: return Exponential{real()};
        case 3: return Weibull{real(), real() / 10 + 0.1};
        default: {
          const double a = real();
          return Uniform{a, a + real()};
        }
      }
    };
    if (uniform(0, 1)) t.wildcard = policy();
    for (int c = 0; c < 3; ++c)
      if (uniform(0, 2) == 0) t.policies[uniform(0, 6)] = policy();
    if (t.policies.empty() && !t.wildcard) t.wildcard = policy();
    if (t.wildcard && uniform(0, 1)) t.color_map[uniform(0, 6)] = uniform(0, 6);
    switch (uniform(0, 2)) {
      case 0: t.age_action = AgeReset{}; break;
      case 1: t.age_action = AgeKeep{}; break;
      default: t.age_action = AgeScale{uniform(0, 100) / 100.0}; break;
    }
    t.priority = uniform(-2, 2);
    if (t.is_source()) {
      t.emit_color = uniform(0, 6);
      t.policies[t.emit_color] = Exponential{real()};
    }
    net.transitions.push_back(t);
  }
  for (int i = uniform(0, 3); i > 0; --i) {
    Trigger trig;
    trig.kind = uniform(0, 1) ? TriggerKind::enabler : TriggerKind::inhibitor;
    trig.place = place();
    trig.target = net.transitions[static_cast<std::size_t>(uniform(0, transitions - 1))].id;
    trig.multiplicity = uniform(1, 4);
    if (uniform(0, 1)) trig.colors = std::set<Color>{uniform(0, 3), uniform(0, 3)};
    net.triggers.push_back(trig);
  }
  for (int i = uniform(0, 4); i > 0; --i)
    net.tokens.push_back({place(), uniform(0, 6), uniform(0, 1) ? 0.0 : real(), uniform(1, 3)});
  for (int i = uniform(0, 3); i > 0; --i) {
    SensorSpec s;
    s.name = "s" + std::to_string(i);
    s.kind = static_cast<SensorKind>(uniform(0, 3));
    if (s.kind == SensorKind::firing_count) {
      s.transitions = {net.transitions.front().id};
    } else {
      s.place = place();
      if (s.kind != SensorKind::time_average) s.threshold = uniform(1, 3);
      if (s.kind == SensorKind::threshold && uniform(0, 1)) s.relation = Relation::at_most;
      if (uniform(0, 1)) s.colors = std::set<Color>{uniform(0, 6)};
    }
    if (uniform(0, 1)) s.window = Window{real(), 60 + real()};
    net.sensors.push_back(s);
  }
  return net;
}

}  // namespace

TEST_CASE("the documented example parses") {
  const auto m = parse_model(kUpDown);
  CHECK(m.net.places == std::vector<PlaceId>{"Down", "Up"});
  REQUIRE(m.net.transitions.size() == 2);
  CHECK(*m.net.transitions[0].wildcard == DelayPolicy{Exponential{100}});
  CHECK(m.net.tokens == std::vector<TokenGroup>{{"Up", 1, 0, 2}});
  CHECK(m.net.sensors[0].kind == SensorKind::threshold);
  CHECK(m.net.sensors[0].threshold == 2);
  CHECK(m.simulation.horizon == 200.0);
  CHECK(m.simulation.replications == 10000u);
  CHECK(m.simulation.seed == 1u);
  CHECK(m.simulation.window == Window{100, 200});
}

TEST_CASE("every policy kind and option") {
  const auto net = parse(R"(
places: [A, B]
transitions:
  - id: t
    input: A
    output: B
    policies:
      - {color: 0, delay: immediate, priority: 4}
      - {color: 1, delay: fixed, value: 2.5}
      - {color: 2, delay: exponential, mean: 3}
      - {color: 3, delay: weibull, scale: 200, shape: 2}
      - {color: 4, delay: uniform, low: 1, high: 2}
    color_map: {1: 2}
    age: {scale: 0.5}
    priority: 7
  - {id: s, output: A, emit_color: 9, policies: [{color: 9, delay: exponential, mean: 1}]}
  - {id: k, input: B, age: keep, policies: [{color: "*", delay: fixed, value: 0}]}
triggers:
  - {kind: enabler, place: B, target: t, multiplicity: 2, colors: [1, 3]}
)");
  const auto* t = net.find_transition("t");
  REQUIRE(t);
  CHECK(t->policies.at(0) == DelayPolicy{Immediate{4}});
  CHECK(t->policies.at(1) == DelayPolicy{Fixed{2.5}});
  CHECK(t->policies.at(2) == DelayPolicy{Exponential{3}});
  CHECK(t->policies.at(3) == DelayPolicy{Weibull{200, 2}});
  CHECK(t->policies.at(4) == DelayPolicy{Uniform{1, 2}});
  CHECK(t->color_map.at(1) == 2);
  CHECK(t->age_action == AgeAction{AgeScale{0.5}});
  CHECK(t->priority == 7);
  CHECK(net.find_transition("s")->emit_color == 9);
  CHECK(net.find_transition("s")->is_source());
  CHECK(net.find_transition("k")->is_sink());
  CHECK(net.find_transition("k")->age_action == AgeAction{AgeKeep{}});
  CHECK(net.triggers[0].kind == TriggerKind::enabler);
  CHECK(net.triggers[0].multiplicity == 2);
  CHECK(*net.triggers[0].colors == std::set<Color>{1, 3});
}

TEST_CASE("unknown keys are reported at their position") {
  const auto e = parse_error("places: [A]\ntransitions:\n  - {id: t, input: A, delya: 3}\n");
  CHECK(e.line() == 3);
  CHECK(e.column() == 23);
  CHECK(e.detail().find("unknown key 'delya'") != std::string::npos);
}

TEST_CASE("empty documents and missing sections") {
  CHECK(parse_error("").detail() == "missing places section");
  CHECK(parse_error("transitions: []\n").detail() == "missing places section");
}

TEST_CASE("syntax errors carry a position") {
  const auto e = parse_error("places: [A\n");
  CHECK(e.line() >= 1);
}

TEST_CASE("bad scalars") {
  CHECK(parse_error("places: [A]\ntokens: [{place: A, count: two}]\n").detail().find("integer") != std::string::npos);
  CHECK(parse_error("places: [A]\ntransitions: [{id: t, input: A, policies: [{color: \"*\", delay: fixed, value: x}]}]\n")
            .detail()
            .find("number") != std::string::npos);
  CHECK(parse_error("places: [A]\ntransitions: [{id: t, input: A, policies: [{color: \"*\", delay: slow}]}]\n")
            .detail()
            .find("unknown delay kind") != std::string::npos);
  CHECK(parse_error("places: [A]\ntransitions: [{id: t, input: A, policies: [{color: \"*\", delay: fixed, mean: 1}]}]\n")
            .detail()
            .find("mean") != std::string::npos);
}

TEST_CASE("semantic problems surface as validation errors") {
  CHECK_THROWS_AS(parse("places: [A]\ntransitions: [{id: t, input: [A, A], policies: [{color: 1, delay: fixed, value: 1}]}]\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse("places: [A]\ntriggers: [{kind: inhibitor, place: A, target: nope}]\n"), ValidationError);
}

TEST_CASE("missing file is an I/O error") { CHECK_THROWS_AS(load_model("/nonexistent/model.apn"), IoError); }

TEST_CASE("serialize round trips the shipped models") {
  for (const char* name : apn::test::kShippedModels) {
    CAPTURE(name);
    const auto m = apn::test::shipped(name);
    const std::string text = serialize(m.net, m.simulation);
    const auto again = parse_model(text);
    CHECK(again.net == m.net);
    CHECK(again.simulation == m.simulation);
    // Canonical text is a fixed point.
    CHECK(serialize(again.net, again.simulation) == text);
  }
}

TEST_CASE("serialize round trips random nets") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    Net net = random_net(rng);
    net.canonicalize();
    CAPTURE(i);
    REQUIRE(validate(net).empty());
    const std::string text = serialize(net);
    CAPTURE(text);
    CHECK(parse(text) == net);
  }
}

TEST_CASE("serialize omits defaults") {
  const std::string text = serialize(parse(kUpDown));
  CHECK(text.find("age:") == std::string::npos);
  CHECK(text.find("priority") == std::string::npos);
  CHECK(text.find("simulation") == std::string::npos);
  CHECK(text.find("count: 2") != std::string::npos);
}

TEST_CASE("trace csv round trip") {
  std::vector<TraceRecord> records = {
      {0, EventKind::enable, "fail", 1, 1, 1, "Up", std::nullopt, 0, 0},
      {3.25, EventKind::fire, "fail", 1, 1, 2, "Up", "Down", 3.25, 0},
      {4, EventKind::emit, "arrive", 7, 0, 0, std::nullopt, "Up", 0, 0},
      {5.5, EventKind::absorb, "land", 7, 0, 0, "Up", std::nullopt, 1.5, 0},
      {0.1 + 0.2, EventKind::preempt, "repair", 2, 3, 3, "Down", std::nullopt, 1e-9, 1e-9},
  };
  std::stringstream buffer;
  write_trace(records, buffer);
  CHECK(buffer.str().rfind(std::string(kTraceHeader) + "\n", 0) == 0);
  CHECK(read_trace(buffer) == records);
}

TEST_CASE("malformed traces") {
  std::stringstream no_header("1,fire,t,1,0,0,A,B,0,0\n");
  CHECK_THROWS_AS(read_trace(no_header), ParseError);
  std::stringstream short_row(std::string(kTraceHeader) + "\n1,fire,t\n");
  CHECK_THROWS_AS(read_trace(short_row), ParseError);
  std::stringstream bad_event(std::string(kTraceHeader) + "\n1,jump,t,1,0,0,A,B,0,0\n");
  CHECK_THROWS_AS(read_trace(bad_event), ParseError);
}
