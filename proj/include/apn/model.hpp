#pragma once

// Abridged Petri net model definition.
//
// Places are connected directly by transitions that have at most one input
// and one output place. Tokens carry a color (integer label) and an age
// (continuous label). Interaction between tokens happens only through
// triggers: an inhibitor disables its target while its place holds at least
// `multiplicity` matching tokens, an enabler disables it until it does.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "apn/error.hpp"

namespace apn {

using Time = double;
using Color = std::int64_t;
using PlaceId = std::string;
using TransitionId = std::string;
using TokenId = std::uint64_t;

// Delay policies. Immediate fires at the enabling instant; ties at the same
// instant are broken by priority (higher first).
struct Immediate {
  int priority = 0;
  friend bool operator==(const Immediate&, const Immediate&) = default;
};
struct Fixed {
  Time delay = 0;
  friend bool operator==(const Fixed&, const Fixed&) = default;
};
struct Exponential {
  Time mean = 1;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};
struct Weibull {
  Time scale = 1;
  double shape = 1;
  friend bool operator==(const Weibull&, const Weibull&) = default;
};
struct Uniform {
  Time low = 0;
  Time high = 0;
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

using DelayPolicy = std::variant<Immediate, Fixed, Exponential, Weibull, Uniform>;

bool is_immediate(const DelayPolicy& policy) noexcept;
bool is_exponential(const DelayPolicy& policy) noexcept;

// What happens to a token's age when it is fired through a transition.
struct AgeReset {
  friend bool operator==(const AgeReset&, const AgeReset&) = default;
};
struct AgeKeep {
  friend bool operator==(const AgeKeep&, const AgeKeep&) = default;
};
struct AgeScale {
  double factor = 1;
  friend bool operator==(const AgeScale&, const AgeScale&) = default;
};

using AgeAction = std::variant<AgeReset, AgeKeep, AgeScale>;

struct Transition {
  TransitionId id;
  // At most one entry each in a valid net; kept as lists so that malformed
  // input can be represented and reported by validate().
  std::vector<PlaceId> inputs;
  std::vector<PlaceId> outputs;
  std::map<Color, DelayPolicy> policies;
  // Applies to colors without an explicit entry.
  std::optional<DelayPolicy> wildcard;
  std::map<Color, Color> color_map;
  AgeAction age_action = AgeReset{};
  // Tie-break priority for non-immediate policies.
  int priority = 0;
  // Color of tokens created by a source transition.
  Color emit_color = 0;

  const PlaceId* input() const noexcept { return inputs.empty() ? nullptr : &inputs.front(); }
  const PlaceId* output() const noexcept { return outputs.empty() ? nullptr : &outputs.front(); }
  bool is_source() const noexcept { return inputs.empty(); }
  bool is_sink() const noexcept { return outputs.empty(); }

  // Null when the transition is blind to `color`.
  const DelayPolicy* policy_for(Color color) const noexcept;
  Color map_color(Color color) const noexcept;

  friend bool operator==(const Transition&, const Transition&) = default;
};

enum class TriggerKind { inhibitor, enabler };

struct Trigger {
  TriggerKind kind = TriggerKind::inhibitor;
  PlaceId place;
  TransitionId target;
  int multiplicity = 1;
  // Absent: every token in `place` counts.
  std::optional<std::set<Color>> colors;

  bool counts(Color color) const noexcept { return !colors || colors->contains(color); }

  friend bool operator==(const Trigger&, const Trigger&) = default;
};

struct TokenGroup {
  PlaceId place;
  Color color = 0;
  Time age = 0;
  int count = 1;

  friend bool operator==(const TokenGroup&, const TokenGroup&) = default;
};

struct Window {
  Time begin = 0;
  Time end = 0;

  Time length() const noexcept { return end - begin; }
  friend bool operator==(const Window&, const Window&) = default;
};

enum class SensorKind { time_average, threshold, upcrossings, firing_count };
enum class Relation { at_least, at_most };

struct SensorSpec {
  std::string name;
  SensorKind kind = SensorKind::time_average;
  // Place sensors.
  PlaceId place;
  std::optional<std::set<Color>> colors;
  int threshold = 1;
  Relation relation = Relation::at_least;
  // Firing-count sensors; the counts of all listed transitions are summed.
  std::vector<TransitionId> transitions;
  // Absent: the run's default window.
  std::optional<Window> window;

  bool counts(Color color) const noexcept { return !colors || colors->contains(color); }

  friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

struct Net {
  std::vector<PlaceId> places;
  std::vector<Transition> transitions;
  std::vector<Trigger> triggers;
  std::vector<TokenGroup> tokens;
  std::vector<SensorSpec> sensors;

  const Transition* find_transition(const TransitionId& id) const noexcept;
  Transition* find_transition(const TransitionId& id) noexcept;
  bool has_place(const PlaceId& id) const noexcept;

  // Sorts every element list into canonical order. Token groups are ordered
  // by (color, place, age); token ids are assigned in that order.
  void canonicalize();

  std::size_t token_count() const noexcept;

  friend bool operator==(const Net&, const Net&) = default;
};

struct Violation {
  std::string element;
  std::string rule;

  std::string message() const { return element + ": " + rule; }
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate(const Net& net);

// Throws ValidationError when validate() reports anything.
void require_valid(const Net& net);

// Every color literal appearing in the net: token colors, policy keys,
// color-map entries, emit colors, trigger and sensor filters.
std::set<Color> declared_colors(const Net& net);

const char* to_string(TriggerKind kind) noexcept;
const char* to_string(SensorKind kind) noexcept;

}  // namespace apn
