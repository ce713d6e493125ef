#include "apn/model.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_set>

namespace apn {

ParseError::ParseError(std::string message, int line, int column)
    : Error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                     : message),
      detail_(std::move(message)),
      line_(line),
      column_(column) {}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string text = "model is invalid";
  for (const auto& v : violations) text += "\n  " + v.message();
  return text;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string text;
  for (const auto& n : names) {
    if (!text.empty()) text += ", ";
    text += n;
  }
  return text;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

LivelockError::LivelockError(double time, std::vector<std::string> transitions)
    : Error("livelock at time " + std::to_string(time) + ": zero-delay firings do not terminate (" +
            join_names(transitions) + ")"),
      time_(time),
      transitions_(std::move(transitions)) {}

bool is_immediate(const DelayPolicy& policy) noexcept { return std::holds_alternative<Immediate>(policy); }
bool is_exponential(const DelayPolicy& policy) noexcept { return std::holds_alternative<Exponential>(policy); }

const DelayPolicy* Transition::policy_for(Color color) const noexcept {
  if (auto it = policies.find(color); it != policies.end()) return &it->second;
  return wildcard ? &*wildcard : nullptr;
}

Color Transition::map_color(Color color) const noexcept {
  auto it = color_map.find(color);
  return it == color_map.end() ? color : it->second;
}

const Transition* Net::find_transition(const TransitionId& id) const noexcept {
  auto it = std::find_if(transitions.begin(), transitions.end(), [&](const Transition& t) { return t.id == id; });
  return it == transitions.end() ? nullptr : &*it;
}

Transition* Net::find_transition(const TransitionId& id) noexcept {
  auto it = std::find_if(transitions.begin(), transitions.end(), [&](const Transition& t) { return t.id == id; });
  return it == transitions.end() ? nullptr : &*it;
}

bool Net::has_place(const PlaceId& id) const noexcept {
  return std::find(places.begin(), places.end(), id) != places.end();
}

std::size_t Net::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& g : tokens) n += static_cast<std::size_t>(std::max(g.count, 0));
  return n;
}

namespace {

auto trigger_key(const Trigger& t) {
  std::vector<Color> filter;
  if (t.colors) filter.assign(t.colors->begin(), t.colors->end());
  return std::make_tuple(t.target, t.kind, t.place, t.multiplicity, t.colors.has_value(), filter);
}

}  // namespace

void Net::canonicalize() {
  std::sort(places.begin(), places.end());
  std::sort(transitions.begin(), transitions.end(),
            [](const Transition& a, const Transition& b) { return a.id < b.id; });
  std::sort(triggers.begin(), triggers.end(),
            [](const Trigger& a, const Trigger& b) { return trigger_key(a) < trigger_key(b); });
  std::sort(tokens.begin(), tokens.end(), [](const TokenGroup& a, const TokenGroup& b) {
    return std::tie(a.color, a.place, a.age, a.count) < std::tie(b.color, b.place, b.age, b.count);
  });
  // Merge groups that only differ by count.
  std::vector<TokenGroup> merged;
  for (const auto& g : tokens) {
    if (!merged.empty() && merged.back().color == g.color && merged.back().place == g.place &&
        merged.back().age == g.age) {
      merged.back().count += g.count;
    } else {
      merged.push_back(g);
    }
  }
  tokens = std::move(merged);
  std::sort(sensors.begin(), sensors.end(), [](const SensorSpec& a, const SensorSpec& b) { return a.name < b.name; });
}

namespace {

class Validator {
 public:
  explicit Validator(const Net& net) : net_(net) {
    for (const auto& p : net.places) place_set_.insert(p);
    for (const auto& t : net.transitions) transition_set_.insert(t.id);
  }

  std::vector<Violation> run() {
    check_places();
    for (const auto& t : net_.transitions) check_transition(t);
    for (std::size_t i = 0; i < net_.triggers.size(); ++i) check_trigger(net_.triggers[i], i);
    for (const auto& g : net_.tokens) check_tokens(g);
    check_sensors();
    return std::move(out_);
  }

 private:
  void add(std::string element, std::string rule) { out_.push_back({std::move(element), std::move(rule)}); }

  void check_places() {
    std::unordered_set<std::string> seen;
    for (const auto& p : net_.places) {
      if (p.empty()) add("place", "empty identifier");
      if (!seen.insert(p).second) add("place " + p, "duplicate place id");
    }
    std::unordered_set<std::string> tseen;
    for (const auto& t : net_.transitions) {
      if (t.id.empty()) add("transition", "empty identifier");
      if (!tseen.insert(t.id).second) add("transition " + t.id, "duplicate transition id");
    }
  }

  void check_policy(const std::string& where, const DelayPolicy& policy) {
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, Fixed>) {
            if (!(p.delay >= 0) || !std::isfinite(p.delay)) add(where, "fixed delay must be finite and >= 0");
          } else if constexpr (std::is_same_v<P, Exponential>) {
            if (!(p.mean > 0) || !std::isfinite(p.mean)) add(where, "exponential mean must be > 0");
          } else if constexpr (std::is_same_v<P, Weibull>) {
            if (!(p.scale > 0) || !std::isfinite(p.scale)) add(where, "weibull scale must be > 0");
            if (!(p.shape > 0) || !std::isfinite(p.shape)) add(where, "weibull shape must be > 0");
          } else if constexpr (std::is_same_v<P, Uniform>) {
            if (!(p.low >= 0) || !std::isfinite(p.low)) add(where, "uniform lower bound must be >= 0");
            if (!(p.high >= p.low) || !std::isfinite(p.high)) add(where, "uniform upper bound must be >= lower bound");
          }
        },
        policy);
  }

  void check_transition(const Transition& t) {
    const std::string where = "transition " + t.id;
    if (t.inputs.size() > 1) add(where, "multiple inputs");
    if (t.outputs.size() > 1) add(where, "multiple outputs");
    if (t.inputs.empty() && t.outputs.empty()) add(where, "needs an input or an output place");
    for (const auto& p : t.inputs)
      if (!place_set_.contains(p)) add(where, "input place '" + p + "' is not declared");
    for (const auto& p : t.outputs)
      if (!place_set_.contains(p)) add(where, "output place '" + p + "' is not declared");
    if (t.policies.empty() && !t.wildcard) add(where, "no delay policy");
    for (const auto& [color, policy] : t.policies) {
      if (color < 0) add(where, "negative color " + std::to_string(color));
      check_policy(where, policy);
    }
    if (t.wildcard) check_policy(where, *t.wildcard);
    for (const auto& [from, to] : t.color_map) {
      if (from < 0 || to < 0) add(where, "negative color in color map");
      if (!t.policy_for(from)) add(where, "color map key " + std::to_string(from) + " has no applicable policy");
    }
    if (const auto* s = std::get_if<AgeScale>(&t.age_action)) {
      if (!(s->factor >= 0 && s->factor <= 1)) add(where, "age scale factor must lie in [0, 1]");
    }
    if (t.is_source()) {
      if (t.emit_color < 0) add(where, "negative emit color");
      if (!t.policy_for(t.emit_color)) add(where, "source has no policy for its emit color");
    }
  }

  void check_trigger(const Trigger& trig, std::size_t index) {
    const std::string where = "trigger #" + std::to_string(index) + " (" + to_string(trig.kind) + " " + trig.place +
                              " -> " + trig.target + ")";
    if (trig.multiplicity < 1) add(where, "multiplicity >= 1");
    if (!place_set_.contains(trig.place)) add(where, "input place '" + trig.place + "' is not declared");
    if (!transition_set_.contains(trig.target)) add(where, "target transition '" + trig.target + "' is not declared");
    if (trig.colors) {
      for (Color c : *trig.colors)
        if (c < 0) add(where, "negative color in filter");
    }
  }

  void check_tokens(const TokenGroup& g) {
    const std::string where = "tokens in " + g.place;
    if (!place_set_.contains(g.place)) add(where, "place '" + g.place + "' is not declared");
    if (g.color < 0) add(where, "negative color");
    if (!(g.age >= 0) || !std::isfinite(g.age)) add(where, "age must be finite and >= 0");
    if (g.count < 1) add(where, "count must be >= 1");
  }

  void check_sensors() {
    std::unordered_set<std::string> seen;
    for (const auto& s : net_.sensors) {
      const std::string where = "sensor " + s.name;
      if (s.name.empty()) add("sensor", "empty name");
      if (!seen.insert(s.name).second) add(where, "duplicate sensor name");
      if (s.kind == SensorKind::firing_count) {
        if (s.transitions.empty()) add(where, "firing count needs at least one transition");
        for (const auto& t : s.transitions)
          if (!transition_set_.contains(t)) add(where, "transition '" + t + "' is not declared");
      } else {
        if (!place_set_.contains(s.place)) add(where, "place '" + s.place + "' is not declared");
        if (s.kind == SensorKind::threshold && s.threshold < 0) add(where, "threshold must be >= 0");
        if (s.kind == SensorKind::upcrossings && s.threshold < 1) add(where, "crossing level must be >= 1");
      }
      if (s.colors) {
        for (Color c : *s.colors)
          if (c < 0) add(where, "negative color in filter");
      }
      if (s.window && !(s.window->begin >= 0 && s.window->begin < s.window->end))
        add(where, "window must satisfy 0 <= begin < end");
    }
  }

  const Net& net_;
  std::unordered_set<std::string> place_set_;
  std::unordered_set<std::string> transition_set_;
  std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> validate(const Net& net) { return Validator(net).run(); }

void require_valid(const Net& net) {
  auto violations = validate(net);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::set<Color> declared_colors(const Net& net) {
  std::set<Color> colors;
  for (const auto& g : net.tokens) colors.insert(g.color);
  for (const auto& t : net.transitions) {
    for (const auto& [c, p] : t.policies) colors.insert(c);
    for (const auto& [from, to] : t.color_map) {
      colors.insert(from);
      colors.insert(to);
    }
    if (t.is_source()) colors.insert(t.emit_color);
  }
  for (const auto& trig : net.triggers)
    if (trig.colors) colors.insert(trig.colors->begin(), trig.colors->end());
  for (const auto& s : net.sensors)
    if (s.colors) colors.insert(s.colors->begin(), s.colors->end());
  return colors;
}

const char* to_string(TriggerKind kind) noexcept { return kind == TriggerKind::inhibitor ? "inhibitor" : "enabler"; }

const char* to_string(SensorKind kind) noexcept {
  switch (kind) {
    case SensorKind::time_average: return "time_average";
    case SensorKind::threshold: return "threshold";
    case SensorKind::upcrossings: return "upcrossings";
    case SensorKind::firing_count: return "firing_count";
  }
  return "?";
}

}  // namespace apn
