#include "apn/stats.hpp"

#include <algorithm>

namespace apn {

SensorSampler::SensorSampler(const CompiledNet& net, Window default_window)
    : by_place_(net.place_count()), by_transition_(net.transition_count()) {
  const auto& specs = net.net().sensors;
  sensors_.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    State s;
    s.spec = &spec;
    s.window = spec.window.value_or(default_window);
    if (!(s.window.end > s.window.begin)) throw Error("sensor " + spec.name + ": empty window");
    sensors_.push_back(s);
    if (spec.kind == SensorKind::firing_count) {
      for (const auto& t : spec.transitions) by_transition_[static_cast<std::size_t>(net.transition_index(t))].push_back(i);
    } else {
      by_place_[static_cast<std::size_t>(net.place_index(spec.place))].push_back(i);
    }
  }
}

double SensorSampler::integrand(const State& s) const noexcept {
  switch (s.spec->kind) {
    case SensorKind::time_average: return s.count;
    case SensorKind::threshold:
      return (s.spec->relation == Relation::at_least ? s.count >= s.spec->threshold : s.count <= s.spec->threshold)
                 ? 1.0
                 : 0.0;
    default: return 0;
  }
}

void SensorSampler::advance(State& s, Time time) noexcept {
  const Time lo = std::max(s.last, s.window.begin);
  const Time hi = std::min(time, s.window.end);
  if (hi > lo) s.integral += integrand(s) * (hi - lo);
  s.last = time;
}

void SensorSampler::change(int place, Color color, Time time, int delta) {
  for (std::size_t i : by_place_[static_cast<std::size_t>(place)]) {
    State& s = sensors_[i];
    if (!s.spec->counts(color)) continue;
    advance(s, time);
    const int before = s.count;
    s.count += delta;
    if (started_ && s.spec->kind == SensorKind::upcrossings && before < s.spec->threshold &&
        s.count >= s.spec->threshold && time >= s.window.begin && time <= s.window.end)
      s.events += 1;
  }
}

void SensorSampler::token_entered(int place, Color color, Time time) { change(place, color, time, +1); }

void SensorSampler::token_left(int place, Color color, Time time) { change(place, color, time, -1); }

void SensorSampler::transition_fired(int transition, Time time) {
  for (std::size_t i : by_transition_[static_cast<std::size_t>(transition)]) {
    State& s = sensors_[i];
    if (time >= s.window.begin && time <= s.window.end) s.events += 1;
  }
}

void SensorSampler::begin(Time time) {
  started_ = true;
  for (auto& s : sensors_) s.last = time;
}

void SensorSampler::finish(Time time) {
  for (auto& s : sensors_) advance(s, time);
  finished_ = true;
}

std::vector<double> SensorSampler::values() const {
  if (!finished_) throw Error("sensor values requested before the replication finished");
  std::vector<double> out;
  out.reserve(sensors_.size());
  for (const auto& s : sensors_) {
    switch (s.spec->kind) {
      case SensorKind::time_average:
      case SensorKind::threshold: out.push_back(s.integral / s.window.length()); break;
      case SensorKind::upcrossings:
      case SensorKind::firing_count: out.push_back(s.events); break;
    }
  }
  return out;
}

std::size_t SensorReport::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < sensors.size(); ++i)
    if (sensors[i].name == name) return i;
  throw Error("no sensor named '" + name + "' in report");
}

double combination_variance(const SensorReport& report, const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const auto n = static_cast<Eigen::Index>(report.sensors.size());
  if (weights.size() != n) throw Error("combination_variance: one weight per sensor required");
  Eigen::VectorXd sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i) = std::sqrt(report.sensors[static_cast<std::size_t>(i)].variance);
  const Eigen::MatrixXd covariance = sigma.asDiagonal() * report.correlation * sigma.asDiagonal();
  return weights.dot(covariance * weights);
}

}  // namespace apn
