#pragma once

// Discrete-event execution of the token game for a single replication.
//
// Semantics:
//  * Infinite server: every (token, transition) pair that is enabled holds
//    its own pending firing with an independently sampled delay.
//  * Race with restart: a pair that becomes disabled is preempted; when it is
//    enabled again a fresh delay is drawn.
//  * Aging: a token's age grows at rate 1 while it has at least one pending
//    firing. The accrued time is committed when the last pending firing of
//    the token is preempted, and folded into the age action when it fires.
//  * Simultaneous events are ordered by (descending priority, descending
//    age, ascending color, ascending token id, ascending transition id).
//    The priority of a pair is the immediate policy's priority, or the
//    transition's priority for timed policies.
//  * Delays are drawn by inverse transform from a 53-bit uniform taken from
//    std::mt19937_64; fixed and immediate policies draw nothing.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "apn/model.hpp"

namespace apn {

enum class EventKind { fire, enable, preempt, emit, absorb };

const char* to_string(EventKind kind) noexcept;

struct TraceRecord {
  Time time = 0;
  EventKind event = EventKind::fire;
  TransitionId transition;
  TokenId token = 0;
  Color color_before = 0;
  Color color_after = 0;
  std::optional<PlaceId> from;
  std::optional<PlaceId> to;
  Time age_before = 0;
  Time age_after = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Index-based view of a validated net. Places and transitions are indexed
// in canonical (sorted id) order.
class CompiledNet {
 public:
  struct CompiledTransition {
    TransitionId id;
    int input = -1;
    int output = -1;
    const Transition* definition = nullptr;
    std::vector<int> triggers;
  };

  struct CompiledTrigger {
    TriggerKind kind;
    int place;
    int target;
    int multiplicity;
    const Trigger* definition;
  };

  struct InitialToken {
    int place;
    Color color;
    Time age;
  };

  explicit CompiledNet(Net net);

  CompiledNet(const CompiledNet&) = delete;
  CompiledNet& operator=(const CompiledNet&) = delete;

  const Net& net() const noexcept { return net_; }
  std::size_t place_count() const noexcept { return net_.places.size(); }
  std::size_t transition_count() const noexcept { return transitions_.size(); }

  const PlaceId& place_name(int place) const { return net_.places[static_cast<std::size_t>(place)]; }
  int place_index(const PlaceId& id) const;  // -1 when unknown
  int transition_index(const TransitionId& id) const;

  const CompiledTransition& transition(int index) const { return transitions_[static_cast<std::size_t>(index)]; }
  const CompiledTrigger& trigger(int index) const { return triggers_[static_cast<std::size_t>(index)]; }
  std::span<const int> outgoing(int place) const { return outgoing_[static_cast<std::size_t>(place)]; }
  // Transitions with a trigger whose input place is `place`.
  std::span<const int> watchers(int place) const { return watchers_[static_cast<std::size_t>(place)]; }
  std::span<const int> sources() const noexcept { return sources_; }
  std::span<const InitialToken> initial_tokens() const noexcept { return initial_; }
  const std::set<Color>& colors() const noexcept { return colors_; }

 private:
  Net net_;
  std::vector<CompiledTransition> transitions_;
  std::vector<CompiledTrigger> triggers_;
  std::vector<std::vector<int>> outgoing_;
  std::vector<std::vector<int>> watchers_;
  std::vector<int> sources_;
  std::vector<InitialToken> initial_;
  std::set<Color> colors_;
};

struct Token {
  TokenId id = 0;
  int place = -1;
  Color color = 0;
  // Committed age; see Simulator::age().
  Time age = 0;
};

struct PendingFiring {
  Time fire_time = 0;
  int priority = 0;
  Time age_at_fire = 0;
  Color color = 0;
  // 0 for source emissions.
  TokenId token = 0;
  int transition = 0;
  Time enabled_since = 0;
};

// Strict total order used for the pending set.
struct FiringOrder {
  bool operator()(const PendingFiring& a, const PendingFiring& b) const noexcept;
};

// Receives marking changes as they happen; used by the sensors.
class MarkingObserver {
 public:
  virtual ~MarkingObserver() = default;
  virtual void token_entered(int place, Color color, Time time) = 0;
  virtual void token_left(int place, Color color, Time time) = 0;
  virtual void transition_fired(int transition, Time time) = 0;
  // Called once the initial marking has been placed.
  virtual void begin(Time time) = 0;
  virtual void finish(Time time) = 0;
};

// Derives the stream seed for replication r:
//   splitmix64(seed + (r + 1) * 0x9E3779B97F4A7C15)
// where splitmix64 is the finalizer of Steele, Lea and Flood.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) noexcept;

class Simulator {
 public:
  struct Options {
    // Recompute the enabled set from scratch after every instant.
    bool debug_checks = false;
    // Throw ColorClosureError when a token takes a color the net never declares.
    bool color_closure = false;
    // Zero-time firings allowed at a single instant.
    std::uint64_t livelock_limit = 1'000'000;
  };

  using RecordSink = std::function<void(const TraceRecord&)>;

  Simulator(const CompiledNet& net, std::uint64_t stream_seed, Time horizon);
  Simulator(const CompiledNet& net, std::uint64_t stream_seed, Time horizon, Options options);

  void set_trace(RecordSink sink) { sink_ = std::move(sink); }
  void set_observer(MarkingObserver* observer) { observer_ = observer; }

  // Places the initial marking and schedules every enabled pair. Called by
  // the first step() if not called explicitly.
  void start();

  // Advances to the earliest pending firing time and resolves every firing
  // at that instant. Returns the new clock, or nullopt when nothing is left
  // to do before the horizon.
  std::optional<Time> step();

  // Steps until done and closes the observer at the horizon.
  void run();

  bool is_enabled(TokenId token, int transition) const;
  // Samples a delay and inserts the pair. The pair must be enabled and not
  // yet pending.
  PendingFiring schedule(TokenId token, int transition);
  // Removes a pending pair without firing it, committing accrued age if it
  // was the token's last pending firing.
  void preempt(TokenId token, int transition);
  // Fires a pending entry at the current clock; throws InternalError when
  // the entry is stale.
  std::vector<TraceRecord> fire(const PendingFiring& pending);

  // Throws InternalError if the pending set differs from the enabled set.
  void check_consistency() const;

  Time clock() const noexcept { return clock_; }
  Time horizon() const noexcept { return horizon_; }
  bool started() const noexcept { return started_; }
  std::uint64_t firings() const noexcept { return firings_; }

  const Token* token(TokenId id) const;
  // Committed age plus any accrual in progress.
  Time age(TokenId id) const;
  std::vector<TokenId> tokens_in(int place) const;
  std::size_t live_tokens() const noexcept { return live_tokens_; }
  std::vector<PendingFiring> pending() const;
  std::optional<PendingFiring> pending_for(TokenId token, int transition) const;

  const CompiledNet& net() const noexcept { return net_; }

 private:
  using PendingSet = std::set<PendingFiring, FiringOrder>;
  using PendingIt = PendingSet::iterator;

  struct TokenState {
    Token token;
    bool alive = false;
    Time accrual_since = 0;
    std::vector<std::pair<int, PendingIt>> pending;
  };

  bool triggers_satisfied(int transition) const;
  int count_matching(int place, const Trigger& trigger) const;
  const DelayPolicy* policy(int transition, Color color) const;
  int pair_priority(int transition, const DelayPolicy& policy) const;
  Time sample(const DelayPolicy& policy);

  TokenId create_token(int place, Color color, Time age);
  void insert_into_place(TokenId id, int place);
  void remove_from_place(TokenId id, int place);
  PendingFiring schedule_pair(TokenId token, int transition);
  void schedule_source(int transition);
  void remove_pending(TokenState& state, std::size_t index, bool commit);
  void refresh(std::vector<int>& transitions);
  void fire_entry(PendingIt it, std::vector<TraceRecord>* capture);
  void emit(TraceRecord record, std::vector<TraceRecord>* capture);
  bool tracing(const std::vector<TraceRecord>* capture) const noexcept { return capture || sink_; }
  void check_color(const Token& token) const;

  const CompiledNet& net_;
  Time horizon_;
  Options options_;
  std::mt19937_64 rng_;
  Time clock_ = 0;
  bool started_ = false;
  std::uint64_t firings_ = 0;

  std::vector<TokenState> tokens_;  // indexed by id; slot 0 unused
  std::size_t live_tokens_ = 0;
  std::vector<std::vector<TokenId>> places_;
  PendingSet pending_;
  std::vector<std::optional<PendingIt>> source_pending_;

  RecordSink sink_;
  MarkingObserver* observer_ = nullptr;
  std::vector<TraceRecord>* capture_ = nullptr;
};

}  // namespace apn
