#include "apn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace apn {

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::fire: return "fire";
    case EventKind::enable: return "enable";
    case EventKind::preempt: return "preempt";
    case EventKind::emit: return "emit";
    case EventKind::absorb: return "absorb";
  }
  return "?";
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) noexcept {
  std::uint64_t z = seed + (replication + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool FiringOrder::operator()(const PendingFiring& a, const PendingFiring& b) const noexcept {
  if (a.fire_time != b.fire_time) return a.fire_time < b.fire_time;
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.age_at_fire != b.age_at_fire) return a.age_at_fire > b.age_at_fire;
  if (a.color != b.color) return a.color < b.color;
  if (a.token != b.token) return a.token < b.token;
  return a.transition < b.transition;
}

// ---------------------------------------------------------------------------

CompiledNet::CompiledNet(Net net) : net_(std::move(net)) {
  net_.canonicalize();
  require_valid(net_);

  std::unordered_map<std::string, int> place_ids;
  for (std::size_t i = 0; i < net_.places.size(); ++i) place_ids.emplace(net_.places[i], static_cast<int>(i));
  std::unordered_map<std::string, int> transition_ids;
  for (std::size_t i = 0; i < net_.transitions.size(); ++i)
    transition_ids.emplace(net_.transitions[i].id, static_cast<int>(i));

  outgoing_.resize(net_.places.size());
  watchers_.resize(net_.places.size());
  for (std::size_t i = 0; i < net_.transitions.size(); ++i) {
    const auto& t = net_.transitions[i];
    CompiledTransition ct;
    ct.id = t.id;
    ct.definition = &t;
    if (const auto* in = t.input()) {
      ct.input = place_ids.at(*in);
      outgoing_[static_cast<std::size_t>(ct.input)].push_back(static_cast<int>(i));
    } else {
      sources_.push_back(static_cast<int>(i));
    }
    if (const auto* out = t.output()) ct.output = place_ids.at(*out);
    transitions_.push_back(std::move(ct));
  }
  for (const auto& trig : net_.triggers) {
    CompiledTrigger ct{trig.kind, place_ids.at(trig.place), transition_ids.at(trig.target), trig.multiplicity, &trig};
    transitions_[static_cast<std::size_t>(ct.target)].triggers.push_back(static_cast<int>(triggers_.size()));
    auto& w = watchers_[static_cast<std::size_t>(ct.place)];
    if (std::find(w.begin(), w.end(), ct.target) == w.end()) w.push_back(ct.target);
    triggers_.push_back(ct);
  }
  for (auto& w : watchers_) std::sort(w.begin(), w.end());
  for (const auto& g : net_.tokens)
    for (int n = 0; n < g.count; ++n) initial_.push_back({place_ids.at(g.place), g.color, g.age});
  colors_ = declared_colors(net_);
}

int CompiledNet::place_index(const PlaceId& id) const {
  auto it = std::lower_bound(net_.places.begin(), net_.places.end(), id);
  return it != net_.places.end() && *it == id ? static_cast<int>(it - net_.places.begin()) : -1;
}

int CompiledNet::transition_index(const TransitionId& id) const {
  auto it = std::lower_bound(transitions_.begin(), transitions_.end(), id,
                             [](const CompiledTransition& t, const TransitionId& key) { return t.id < key; });
  return it != transitions_.end() && it->id == id ? static_cast<int>(it - transitions_.begin()) : -1;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const CompiledNet& net, std::uint64_t stream_seed, Time horizon)
    : Simulator(net, stream_seed, horizon, Options{}) {}

Simulator::Simulator(const CompiledNet& net, std::uint64_t stream_seed, Time horizon, Options options)
    : net_(net), horizon_(horizon), options_(options), rng_(stream_seed) {
  if (!(horizon > 0)) throw Error("horizon must be > 0");
  tokens_.resize(1);
  places_.resize(net.place_count());
  source_pending_.resize(net.transition_count());
}

void Simulator::start() {
  if (started_) return;
  started_ = true;
  for (const auto& init : net_.initial_tokens()) {
    const TokenId id = create_token(init.place, init.color, init.age);
    if (observer_) observer_->token_entered(init.place, init.color, clock_);
    check_color(tokens_[id].token);
  }
  if (observer_) observer_->begin(clock_);
  std::vector<int> all(net_.transition_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  refresh(all);
  if (options_.debug_checks) check_consistency();
}

std::optional<Time> Simulator::step() {
  if (!started_) start();
  if (pending_.empty() || pending_.begin()->fire_time > horizon_) return std::nullopt;
  clock_ = pending_.begin()->fire_time;

  std::uint64_t at_instant = 0;
  std::set<std::string> looping;
  const std::uint64_t window_start = options_.livelock_limit > 1000 ? options_.livelock_limit - 1000 : 0;
  while (!pending_.empty() && pending_.begin()->fire_time == clock_) {
    ++at_instant;
    if (at_instant > window_start) looping.insert(net_.transition(pending_.begin()->transition).id);
    if (at_instant > options_.livelock_limit)
      throw LivelockError(clock_, std::vector<std::string>(looping.begin(), looping.end()));
    fire_entry(pending_.begin(), nullptr);
  }
  if (options_.debug_checks) check_consistency();
  return clock_;
}

void Simulator::run() {
  while (step()) {
  }
  if (clock_ < horizon_) clock_ = horizon_;
  if (observer_) observer_->finish(horizon_);
}

// ---------------------------------------------------------------------------

int Simulator::count_matching(int place, const Trigger& trigger) const {
  const auto& ids = places_[static_cast<std::size_t>(place)];
  if (!trigger.colors) return static_cast<int>(ids.size());
  int n = 0;
  for (TokenId id : ids) n += trigger.counts(tokens_[id].token.color) ? 1 : 0;
  return n;
}

bool Simulator::triggers_satisfied(int transition) const {
  for (int index : net_.transition(transition).triggers) {
    const auto& trig = net_.trigger(index);
    const int n = count_matching(trig.place, *trig.definition);
    if (trig.kind == TriggerKind::inhibitor ? n >= trig.multiplicity : n < trig.multiplicity) return false;
  }
  return true;
}

const DelayPolicy* Simulator::policy(int transition, Color color) const {
  return net_.transition(transition).definition->policy_for(color);
}

int Simulator::pair_priority(int transition, const DelayPolicy& policy) const {
  if (const auto* imm = std::get_if<Immediate>(&policy)) return imm->priority;
  return net_.transition(transition).definition->priority;
}

Time Simulator::sample(const DelayPolicy& policy) {
  auto uniform01 = [this] { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; };
  return std::visit(
      [&](const auto& p) -> Time {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Immediate>) {
          return 0;
        } else if constexpr (std::is_same_v<P, Fixed>) {
          return p.delay;
        } else if constexpr (std::is_same_v<P, Exponential>) {
          return -p.mean * std::log1p(-uniform01());
        } else if constexpr (std::is_same_v<P, Weibull>) {
          return p.scale * std::pow(-std::log1p(-uniform01()), 1.0 / p.shape);
        } else {
          return p.low + (p.high - p.low) * uniform01();
        }
      },
      policy);
}

bool Simulator::is_enabled(TokenId id, int transition) const {
  if (id == 0 || id >= tokens_.size() || !tokens_[id].alive) return false;
  const auto& tok = tokens_[id].token;
  if (tok.place != net_.transition(transition).input) return false;
  return policy(transition, tok.color) && triggers_satisfied(transition);
}

TokenId Simulator::create_token(int place, Color color, Time age) {
  const TokenId id = tokens_.size();
  TokenState st;
  st.token = Token{id, place, color, age};
  st.alive = true;
  tokens_.push_back(std::move(st));
  ++live_tokens_;
  insert_into_place(id, place);
  return id;
}

void Simulator::insert_into_place(TokenId id, int place) {
  auto& ids = places_[static_cast<std::size_t>(place)];
  ids.insert(std::lower_bound(ids.begin(), ids.end(), id), id);
  tokens_[id].token.place = place;
}

void Simulator::remove_from_place(TokenId id, int place) {
  auto& ids = places_[static_cast<std::size_t>(place)];
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) throw InternalError("token " + std::to_string(id) + " missing from its place");
  ids.erase(it);
}

PendingFiring Simulator::schedule(TokenId id, int transition) {
  if (!started_) start();
  if (!is_enabled(id, transition))
    throw InternalError("schedule: token " + std::to_string(id) + " is not enabled for " +
                        net_.transition(transition).id);
  for (const auto& [t, it] : tokens_[id].pending)
    if (t == transition) throw InternalError("schedule: pair already pending");
  return schedule_pair(id, transition);
}

PendingFiring Simulator::schedule_pair(TokenId id, int transition) {
  TokenState& st = tokens_[id];
  const DelayPolicy& pol = *policy(transition, st.token.color);
  const Time fire_time = clock_ + sample(pol);
  if (st.pending.empty()) st.accrual_since = clock_;
  PendingFiring p;
  p.fire_time = fire_time;
  p.priority = pair_priority(transition, pol);
  p.age_at_fire = st.token.age + (fire_time - st.accrual_since);
  p.color = st.token.color;
  p.token = id;
  p.transition = transition;
  p.enabled_since = clock_;
  auto [it, inserted] = pending_.insert(p);
  if (!inserted) throw InternalError("duplicate pending entry");
  st.pending.emplace_back(transition, it);
  if (tracing(capture_)) {
    const Time a = st.token.age + (clock_ - st.accrual_since);
    emit({clock_, EventKind::enable, net_.transition(transition).id, id, st.token.color, st.token.color,
          net_.place_name(st.token.place), std::nullopt, a, a},
         capture_);
  }
  return p;
}

void Simulator::schedule_source(int transition) {
  const auto& def = *net_.transition(transition).definition;
  const DelayPolicy& pol = *def.policy_for(def.emit_color);
  PendingFiring p;
  p.fire_time = clock_ + sample(pol);
  p.priority = pair_priority(transition, pol);
  p.color = def.emit_color;
  p.token = 0;
  p.transition = transition;
  p.enabled_since = clock_;
  source_pending_[static_cast<std::size_t>(transition)] = pending_.insert(p).first;
  if (tracing(capture_))
    emit({clock_, EventKind::enable, def.id, 0, def.emit_color, def.emit_color, std::nullopt, std::nullopt, 0, 0},
         capture_);
}

void Simulator::remove_pending(TokenState& st, std::size_t index, bool commit) {
  pending_.erase(st.pending[index].second);
  st.pending[index] = st.pending.back();
  st.pending.pop_back();
  if (commit && st.pending.empty()) st.token.age += clock_ - st.accrual_since;
}

void Simulator::preempt(TokenId id, int transition) {
  if (id == 0) {
    auto& slot = source_pending_[static_cast<std::size_t>(transition)];
    if (!slot) throw InternalError("preempt: source not pending");
    pending_.erase(*slot);
    slot.reset();
    if (tracing(capture_)) {
      const auto& def = *net_.transition(transition).definition;
      emit({clock_, EventKind::preempt, def.id, 0, def.emit_color, def.emit_color, std::nullopt, std::nullopt, 0, 0},
           capture_);
    }
    return;
  }
  if (id >= tokens_.size() || !tokens_[id].alive) throw InternalError("preempt: unknown token");
  TokenState& st = tokens_[id];
  for (std::size_t i = 0; i < st.pending.size(); ++i) {
    if (st.pending[i].first != transition) continue;
    const Time before = st.token.age + (clock_ - st.accrual_since);
    remove_pending(st, i, true);
    if (tracing(capture_))
      emit({clock_, EventKind::preempt, net_.transition(transition).id, id, st.token.color, st.token.color,
            net_.place_name(st.token.place), std::nullopt, before, age(id)},
           capture_);
    return;
  }
  throw InternalError("preempt: pair not pending");
}

void Simulator::refresh(std::vector<int>& transitions) {
  std::sort(transitions.begin(), transitions.end());
  transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
  for (int t : transitions) {
    const auto& ct = net_.transition(t);
    const bool ok = triggers_satisfied(t);
    if (ct.input < 0) {
      const bool has = source_pending_[static_cast<std::size_t>(t)].has_value();
      if (ok && !has) {
        schedule_source(t);
      } else if (!ok && has) {
        preempt(0, t);
      }
      continue;
    }
    for (TokenId id : places_[static_cast<std::size_t>(ct.input)]) {
      TokenState& st = tokens_[id];
      const bool enabled = ok && ct.definition->policy_for(st.token.color) != nullptr;
      const bool has = std::any_of(st.pending.begin(), st.pending.end(), [t](const auto& e) { return e.first == t; });
      if (enabled && !has) {
        schedule_pair(id, t);
      } else if (!enabled && has) {
        preempt(id, t);
      }
    }
  }
}

std::vector<TraceRecord> Simulator::fire(const PendingFiring& pending) {
  if (!started_) start();
  std::optional<PendingIt> found;
  if (pending.token == 0) {
    if (pending.transition >= 0 && static_cast<std::size_t>(pending.transition) < source_pending_.size())
      found = source_pending_[static_cast<std::size_t>(pending.transition)];
  } else if (pending.token < tokens_.size() && tokens_[pending.token].alive) {
    for (const auto& [t, it] : tokens_[pending.token].pending)
      if (t == pending.transition) found = it;
  }
  if (!found || (*found)->fire_time != pending.fire_time)
    throw InternalError("fire: stale pending entry for " + net_.transition(pending.transition).id);
  if (pending.fire_time < clock_) throw InternalError("fire: entry lies in the past");
  if (pending.fire_time > clock_) {
    if (*found != pending_.begin()) throw InternalError("fire: entry is not the next event");
    clock_ = pending.fire_time;
  }
  std::vector<TraceRecord> records;
  capture_ = &records;
  try {
    fire_entry(*found, &records);
  } catch (...) {
    capture_ = nullptr;
    throw;
  }
  capture_ = nullptr;
  return records;
}

void Simulator::fire_entry(PendingIt it, std::vector<TraceRecord>* capture) {
  const PendingFiring p = *it;
  const auto& ct = net_.transition(p.transition);
  const Transition& def = *ct.definition;
  ++firings_;
  std::vector<int> affected;

  if (p.token == 0) {
    source_pending_[static_cast<std::size_t>(p.transition)].reset();
    pending_.erase(it);
    const TokenId id = create_token(ct.output, def.emit_color, 0);
    if (observer_) {
      observer_->token_entered(ct.output, def.emit_color, clock_);
      observer_->transition_fired(p.transition, clock_);
    }
    check_color(tokens_[id].token);
    if (tracing(capture))
      emit({clock_, EventKind::emit, def.id, id, def.emit_color, def.emit_color, std::nullopt,
            net_.place_name(ct.output), 0, 0},
           capture);
    affected.push_back(p.transition);
    for (int t : net_.outgoing(ct.output)) affected.push_back(t);
    for (int t : net_.watchers(ct.output)) affected.push_back(t);
    refresh(affected);
    return;
  }

  TokenState& st = tokens_[p.token];
  const Time age_before = st.token.age + (clock_ - st.accrual_since);
  Time age_after = 0;
  if (std::holds_alternative<AgeKeep>(def.age_action)) {
    age_after = age_before;
  } else if (const auto* s = std::get_if<AgeScale>(&def.age_action)) {
    age_after = s->factor * age_before;
  }
  const Color color_before = st.token.color;
  const Color color_after = def.map_color(color_before);
  const int from = st.token.place;

  // Collect the token's other pending firings; they are preempted by the move.
  std::vector<int> dropped;
  for (const auto& [t, pit] : st.pending) {
    if (pit != it) dropped.push_back(t);
    pending_.erase(pit);
  }
  st.pending.clear();

  remove_from_place(p.token, from);
  if (observer_) {
    observer_->token_left(from, color_before, clock_);
    observer_->transition_fired(p.transition, clock_);
  }
  if (ct.output < 0) {
    st.alive = false;
    --live_tokens_;
    if (tracing(capture))
      emit({clock_, EventKind::absorb, def.id, p.token, color_before, color_before, net_.place_name(from), std::nullopt,
            age_before, age_before},
           capture);
  } else {
    st.token.color = color_after;
    st.token.age = age_after;
    insert_into_place(p.token, ct.output);
    if (observer_) observer_->token_entered(ct.output, color_after, clock_);
    check_color(st.token);
    if (tracing(capture))
      emit({clock_, EventKind::fire, def.id, p.token, color_before, color_after, net_.place_name(from),
            net_.place_name(ct.output), age_before, age_after},
           capture);
  }
  if (tracing(capture)) {
    std::sort(dropped.begin(), dropped.end());
    for (int t : dropped)
      emit({clock_, EventKind::preempt, net_.transition(t).id, p.token, color_before, color_before,
            net_.place_name(from), std::nullopt, age_before, age_before},
           capture);
  }

  for (int t : net_.watchers(from)) affected.push_back(t);
  if (ct.output >= 0) {
    for (int t : net_.outgoing(ct.output)) affected.push_back(t);
    for (int t : net_.watchers(ct.output)) affected.push_back(t);
  }
  refresh(affected);
}

void Simulator::emit(TraceRecord record, std::vector<TraceRecord>* capture) {
  if (capture) capture->push_back(record);
  if (sink_) sink_(record);
}

void Simulator::check_color(const Token& token) const {
  if (options_.color_closure && !net_.colors().contains(token.color))
    throw ColorClosureError("token " + std::to_string(token.id) + " took undeclared color " +
                            std::to_string(token.color) + " at time " + std::to_string(clock_));
}

void Simulator::check_consistency() const {
  std::size_t expected = 0;
  for (std::size_t t = 0; t < net_.transition_count(); ++t) {
    const int ti = static_cast<int>(t);
    const auto& ct = net_.transition(ti);
    const bool ok = triggers_satisfied(ti);
    if (ct.input < 0) {
      if (ok != source_pending_[t].has_value())
        throw InternalError("pending set out of sync for source " + ct.id + " at " + std::to_string(clock_));
      expected += ok ? 1 : 0;
      continue;
    }
    for (TokenId id : places_[static_cast<std::size_t>(ct.input)]) {
      const auto& st = tokens_[id];
      const bool enabled = ok && ct.definition->policy_for(st.token.color) != nullptr;
      const bool has = std::any_of(st.pending.begin(), st.pending.end(), [ti](const auto& e) { return e.first == ti; });
      if (enabled != has)
        throw InternalError("pending set out of sync for token " + std::to_string(id) + " and " + ct.id + " at " +
                            std::to_string(clock_));
      expected += enabled ? 1 : 0;
    }
  }
  if (expected != pending_.size()) throw InternalError("pending set holds entries for tokens that left their place");
  for (std::size_t id = 1; id < tokens_.size(); ++id) {
    const auto& st = tokens_[id];
    if (!st.alive) continue;
    if (st.token.age < 0) throw InternalError("negative age");
    for (const auto& [t, it] : st.pending)
      if (it->token != id || it->transition != t) throw InternalError("token pending index corrupt");
  }
}

const Token* Simulator::token(TokenId id) const {
  if (id == 0 || id >= tokens_.size() || !tokens_[id].alive) return nullptr;
  return &tokens_[id].token;
}

Time Simulator::age(TokenId id) const {
  const auto& st = tokens_.at(id);
  return st.token.age + (st.pending.empty() ? 0.0 : clock_ - st.accrual_since);
}

std::vector<TokenId> Simulator::tokens_in(int place) const { return places_.at(static_cast<std::size_t>(place)); }

std::vector<PendingFiring> Simulator::pending() const { return {pending_.begin(), pending_.end()}; }

std::optional<PendingFiring> Simulator::pending_for(TokenId token, int transition) const {
  if (token == 0) {
    const auto& slot = source_pending_.at(static_cast<std::size_t>(transition));
    if (slot) return **slot;
    return std::nullopt;
  }
  if (token >= tokens_.size()) return std::nullopt;
  for (const auto& [t, it] : tokens_[token].pending)
    if (t == transition) return *it;
  return std::nullopt;
}

}  // namespace apn
