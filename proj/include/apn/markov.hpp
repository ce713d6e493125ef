#pragma once

// Markov-chain cross-check for small nets whose timed policies are all
// exponential.
//
// explore() builds the tangible reachability graph: markings are multisets of
// (place, color) with ages dropped, immediates are resolved deterministically
// (highest priority, then lowest color, then lowest transition id) and each
// exponential pair contributes rate count / mean. The resulting chain is solved
// by uniformization.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "apn/model.hpp"

namespace apn {

// State count of the household model with `customers` customers and `cars`
// distinguishable cars (each customer idle, driving or waiting; each car
// working or broken; waiting only when every working car is driven):
//
//   sum_{m=0}^{n} C(n,m) [ sum_{l=0}^{m-1} C(m,l) C(k,l) + sum_{l=m}^{k} C(k,l) ]
//
// Throws Error when the count does not fit in 64 bits.
std::uint64_t count_states(unsigned customers, unsigned cars);

struct DiscreteMarking {
  struct Entry {
    int place;
    Color color;
    int count;
    auto operator<=>(const Entry&) const = default;
  };
  // Sorted by (place, color); no zero counts.
  std::vector<Entry> entries;

  int count(int place) const noexcept;
  int count(int place, const std::optional<std::set<Color>>& colors) const noexcept;
  auto operator<=>(const DiscreteMarking&) const = default;
};

struct ReachabilityGraph {
  struct Edge {
    std::size_t from;
    std::size_t to;
    double rate;
  };

  std::vector<PlaceId> places;
  std::vector<DiscreteMarking> states;
  std::vector<Edge> edges;
  std::size_t initial = 0;
};

// Throws UnsupportedModel for nets with non-exponential timed policies, age
// actions other than reset, or a state space above `max_states`; throws
// VanishingCycle when immediates loop.
ReachabilityGraph explore(const Net& net, std::size_t max_states = 1'000'000);

std::string describe(const ReachabilityGraph& graph, const DiscreteMarking& marking);

struct Ctmc {
  std::vector<PlaceId> places;
  std::vector<DiscreteMarking> states;
  Eigen::SparseMatrix<double, Eigen::RowMajor> generator;
  std::size_t initial = 0;
};

Ctmc build_ctmc(const ReachabilityGraph& graph);

// State distributions at each time of the non-decreasing grid. The Poisson
// series is truncated so that the dropped mass is at most `tolerance`.
std::vector<Eigen::VectorXd> transient(const Ctmc& chain, std::span<const double> times, double tolerance = 1e-10);

// Trapezoidal average of pi(t) over the window on `intervals` equal steps.
Eigen::VectorXd window_average(const Ctmc& chain, const Window& window, std::size_t intervals = 1000);

// Expected reading of a time_average or threshold sensor under the
// distribution `probabilities`.
double expected_sensor(const Ctmc& chain, const SensorSpec& sensor, const Eigen::Ref<const Eigen::VectorXd>& probabilities);

// Lists the generator as "row,col,rate" lines, off-diagonal and diagonal.
void write_generator(const Ctmc& chain, std::ostream& out);

}  // namespace apn
