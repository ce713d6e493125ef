#include "apn/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <set>

namespace apn {

namespace {

__extension__ typedef unsigned __int128 u128;

u128 binomial(unsigned n, unsigned r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  u128 c = 1;
  for (unsigned i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

constexpr u128 kMax64 = static_cast<u128>(~std::uint64_t{0});

}  // namespace

std::uint64_t count_states(unsigned customers, unsigned cars) {
  if (customers > 120 || cars > 120) throw Error("count_states: arguments too large");
  const unsigned n = customers;
  const unsigned k = cars;
  u128 total = 0;
  for (unsigned m = 0; m <= n; ++m) {
    u128 inner = 0;
    for (unsigned l = 0; l < m && l <= k; ++l) inner += binomial(m, l) * binomial(k, l);
    for (unsigned l = m; l <= k; ++l) inner += binomial(k, l);
    const u128 term = binomial(n, m) * inner;
    if (inner != 0 && term / inner != binomial(n, m)) throw Error("count_states: overflow");
    total += term;
    if (total > kMax64) throw Error("count_states: result exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(total);
}

int DiscreteMarking::count(int place) const noexcept {
  int n = 0;
  for (const auto& e : entries)
    if (e.place == place) n += e.count;
  return n;
}

int DiscreteMarking::count(int place, const std::optional<std::set<Color>>& colors) const noexcept {
  int n = 0;
  for (const auto& e : entries)
    if (e.place == place && (!colors || colors->contains(e.color))) n += e.count;
  return n;
}

namespace {

class Explorer {
 public:
  Explorer(const Net& input, std::size_t max_states) : net_(input), max_states_(max_states) {
    net_.canonicalize();
    require_valid(net_);
    for (const auto& t : net_.transitions) check_supported(t);
    for (std::size_t i = 0; i < net_.places.size(); ++i) place_index_.emplace(net_.places[i], static_cast<int>(i));
    for (const auto& t : net_.transitions) {
      inputs_.push_back(t.input() ? place_index_.at(*t.input()) : -1);
      outputs_.push_back(t.output() ? place_index_.at(*t.output()) : -1);
      std::vector<const Trigger*> trig;
      for (const auto& tr : net_.triggers)
        if (tr.target == t.id) trig.push_back(&tr);
      triggers_.push_back(std::move(trig));
    }
  }

  ReachabilityGraph run() {
    ReachabilityGraph graph;
    graph.places = net_.places;

    std::map<std::pair<int, Color>, int> init;
    for (const auto& g : net_.tokens) init[{place_index_.at(g.place), g.color}] += g.count;
    DiscreteMarking start;
    for (const auto& [key, n] : init) start.entries.push_back({key.first, key.second, n});

    std::map<DiscreteMarking, std::size_t> index;
    std::deque<std::size_t> queue;
    auto intern = [&](DiscreteMarking m) {
      auto [it, inserted] = index.emplace(m, graph.states.size());
      if (inserted) {
        if (graph.states.size() >= max_states_)
          throw UnsupportedModel("state space exceeds " + std::to_string(max_states_) + " tangible markings");
        graph.states.push_back(std::move(m));
        queue.push_back(it->second);
      }
      return it->second;
    };
    graph.initial = intern(resolve(std::move(start)));

    while (!queue.empty()) {
      const std::size_t from = queue.front();
      queue.pop_front();
      const DiscreteMarking current = graph.states[from];
      std::map<std::size_t, double> out;
      for (std::size_t t = 0; t < net_.transitions.size(); ++t) {
        if (!triggers_ok(current, t)) continue;
        const auto& def = net_.transitions[t];
        if (inputs_[t] < 0) {
          const auto* p = def.policy_for(def.emit_color);
          const double rate = 1.0 / std::get<Exponential>(*p).mean;
          out[intern(resolve(fire(current, t, def.emit_color, false)))] += rate;
          continue;
        }
        for (const auto& e : current.entries) {
          if (e.place != inputs_[t]) continue;
          const auto* p = def.policy_for(e.color);
          if (!p) continue;
          const double rate = e.count / std::get<Exponential>(*p).mean;
          out[intern(resolve(fire(current, t, e.color, true)))] += rate;
        }
      }
      for (const auto& [to, rate] : out)
        if (to != from) graph.edges.push_back({from, to, rate});
    }
    return graph;
  }

 private:
  void check_supported(const Transition& t) {
    auto check = [&](const DelayPolicy& p) {
      if (is_immediate(p) || is_exponential(p)) return;
      static const char* names[] = {"immediate", "fixed", "exponential", "weibull", "uniform"};
      throw UnsupportedModel("transition " + t.id + " uses a " + names[p.index()] +
                             " policy; only exponential and immediate policies have a Markov chain");
    };
    for (const auto& [c, p] : t.policies) check(p);
    if (t.wildcard) check(*t.wildcard);
    if (!std::holds_alternative<AgeReset>(t.age_action))
      throw UnsupportedModel("transition " + t.id + " keeps or scales ages; ages are not part of a Markov state");
  }

  bool triggers_ok(const DiscreteMarking& m, std::size_t t) const {
    for (const auto* trig : triggers_[t]) {
      const int n = m.count(place_index_.at(trig->place), trig->colors);
      if (trig->kind == TriggerKind::inhibitor ? n >= trig->multiplicity : n < trig->multiplicity) return false;
    }
    return true;
  }

  static void adjust(DiscreteMarking& m, int place, Color color, int delta) {
    auto it = std::lower_bound(m.entries.begin(), m.entries.end(), std::pair{place, color},
                               [](const DiscreteMarking::Entry& e, const std::pair<int, Color>& key) {
                                 return std::pair{e.place, e.color} < key;
                               });
    if (it != m.entries.end() && it->place == place && it->color == color) {
      it->count += delta;
      if (it->count == 0) m.entries.erase(it);
    } else {
      m.entries.insert(it, {place, color, delta});
    }
  }

  DiscreteMarking fire(DiscreteMarking m, std::size_t t, Color color, bool consume) const {
    if (consume) adjust(m, inputs_[t], color, -1);
    if (outputs_[t] >= 0) adjust(m, outputs_[t], net_.transitions[t].map_color(color), +1);
    return m;
  }

  // Fires enabled immediates until the marking is tangible.
  DiscreteMarking resolve(DiscreteMarking m) const {
    std::set<DiscreteMarking> seen;
    for (;;) {
      bool found = false;
      int best_priority = 0;
      Color best_color = 0;
      std::size_t best_t = 0;
      bool best_source = false;
      for (std::size_t t = 0; t < net_.transitions.size(); ++t) {
        const auto& def = net_.transitions[t];
        auto consider = [&](Color c, bool source) {
          const auto* p = def.policy_for(c);
          if (!p || !is_immediate(*p)) return;
          const int prio = std::get<Immediate>(*p).priority;
          if (!found || prio > best_priority || (prio == best_priority && c < best_color)) {
            found = true;
            best_priority = prio;
            best_color = c;
            best_t = t;
            best_source = source;
          }
        };
        bool checked = false;
        bool ok = false;
        auto enabled = [&] {
          if (!checked) {
            ok = triggers_ok(m, t);
            checked = true;
          }
          return ok;
        };
        if (inputs_[t] < 0) {
          const auto* p = def.policy_for(def.emit_color);
          if (p && is_immediate(*p) && enabled())
            throw UnsupportedModel("immediate source " + def.id + " creates tokens without bound");
          continue;
        }
        for (const auto& e : m.entries) {
          if (e.place != inputs_[t]) continue;
          const auto* p = def.policy_for(e.color);
          if (p && is_immediate(*p) && enabled()) consider(e.color, false);
        }
      }
      if (!found) return m;
      if (!seen.insert(m).second)
        throw VanishingCycle("immediate transitions cycle through a marking (last fired " +
                             net_.transitions[best_t].id + ")");
      if (seen.size() > 100000) throw VanishingCycle("immediate firing chain does not terminate");
      m = fire(std::move(m), best_t, best_color, !best_source);
    }
  }

  Net net_;
  std::size_t max_states_;
  std::map<PlaceId, int> place_index_;
  std::vector<int> inputs_;
  std::vector<int> outputs_;
  std::vector<std::vector<const Trigger*>> triggers_;
};

}  // namespace

ReachabilityGraph explore(const Net& net, std::size_t max_states) { return Explorer(net, max_states).run(); }

std::string describe(const ReachabilityGraph& graph, const DiscreteMarking& marking) {
  std::string text = "{";
  bool first = true;
  for (const auto& e : marking.entries) {
    text += (first ? "" : ", ") + graph.places[static_cast<std::size_t>(e.place)] + ":" + std::to_string(e.color);
    if (e.count != 1) text += "x" + std::to_string(e.count);
    first = false;
  }
  return text + "}";
}

Ctmc build_ctmc(const ReachabilityGraph& graph) {
  Ctmc chain;
  chain.places = graph.places;
  chain.states = graph.states;
  chain.initial = graph.initial;
  const auto n = static_cast<Eigen::Index>(graph.states.size());
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd exit = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges) {
    triplets.emplace_back(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to), e.rate);
    exit(static_cast<Eigen::Index>(e.from)) += e.rate;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (exit(i) != 0) triplets.emplace_back(i, i, -exit(i));
  chain.generator.resize(n, n);
  chain.generator.setFromTriplets(triplets.begin(), triplets.end());
  return chain;
}

std::vector<Eigen::VectorXd> transient(const Ctmc& chain, std::span<const double> times, double tolerance) {
  const auto n = static_cast<Eigen::Index>(chain.states.size());
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  pi(static_cast<Eigen::Index>(chain.initial)) = 1.0;

  double q = 0;
  for (Eigen::Index i = 0; i < n; ++i) q = std::max(q, -chain.generator.coeff(i, i));

  // Substeps keep q * dt <= kMaxRate so that exp(-q dt) does not underflow.
  constexpr double kMaxRate = 30.0;
  std::size_t substeps = 0;
  double previous = 0;
  for (double t : times) {
    if (!(t >= previous)) throw Error("transient: time grid must be non-negative and non-decreasing");
    substeps += static_cast<std::size_t>(std::ceil(q * (t - previous) / kMaxRate));
    previous = t;
  }
  const double step_tolerance = tolerance / static_cast<double>(std::max<std::size_t>(substeps, 1));

  // Column form of the uniformized matrix: v <- P^T v.
  Eigen::SparseMatrix<double> transition;
  if (q > 0) {
    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    transition = (identity + Eigen::SparseMatrix<double>(chain.generator) / q).transpose();
  }

  std::vector<Eigen::VectorXd> out;
  out.reserve(times.size());
  double now = 0;
  for (double t : times) {
    const double span = t - now;
    if (q > 0 && span > 0) {
      const auto pieces = static_cast<std::size_t>(std::ceil(q * span / kMaxRate));
      const double dt = span / static_cast<double>(pieces);
      for (std::size_t s = 0; s < pieces; ++s) {
        const double lambda = q * dt;
        double weight = std::exp(-lambda);
        double mass = weight;
        Eigen::VectorXd term = pi;
        Eigen::VectorXd next = weight * term;
        for (int k = 1; 1.0 - mass > step_tolerance; ++k) {
          term = transition * term;
          weight *= lambda / k;
          mass += weight;
          next += weight * term;
          if (k > 100000) break;
        }
        pi = std::move(next);
      }
    }
    now = t;
    out.push_back(pi);
  }
  return out;
}

Eigen::VectorXd window_average(const Ctmc& chain, const Window& window, std::size_t intervals) {
  if (!(window.end > window.begin) || intervals < 1) throw Error("window_average: empty window");
  std::vector<double> grid(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i)
    grid[i] = window.begin + window.length() * static_cast<double>(i) / static_cast<double>(intervals);
  const auto pis = transient(chain, grid);
  Eigen::VectorXd sum = 0.5 * (pis.front() + pis.back());
  for (std::size_t i = 1; i < intervals; ++i) sum += pis[i];
  return sum / static_cast<double>(intervals);
}

double expected_sensor(const Ctmc& chain, const SensorSpec& sensor, const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
  auto it = std::find(chain.places.begin(), chain.places.end(), sensor.place);
  if (it == chain.places.end()) throw Error("sensor " + sensor.name + ": unknown place");
  const int place = static_cast<int>(it - chain.places.begin());
  double value = 0;
  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const int n = chain.states[s].count(place, sensor.colors);
    double reading = 0;
    switch (sensor.kind) {
      case SensorKind::time_average: reading = n; break;
      case SensorKind::threshold:
        reading = (sensor.relation == Relation::at_least ? n >= sensor.threshold : n <= sensor.threshold) ? 1 : 0;
        break;
      default: throw Error("sensor " + sensor.name + ": only time_average and threshold sensors have a state reading");
    }
    value += probabilities(static_cast<Eigen::Index>(s)) * reading;
  }
  return value;
}

void write_generator(const Ctmc& chain, std::ostream& out) {
  out << "row,col,rate\n";
  for (Eigen::Index r = 0; r < chain.generator.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.generator, r); it; ++it)
      out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
  if (!out) throw IoError("failed to write generator");
}

}  // namespace apn
