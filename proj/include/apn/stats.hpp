#pragma once

// Sensors and cross-replication statistics.
//
// Place sensors integrate the piecewise-constant token count over their
// window while the replication runs:
//   time_average  (1 / |W|) * integral of count(place, colors) dt
//   threshold     fraction of W during which count >= k (or <= k)
//   upcrossings   number of changes from count < k to count >= k inside W
// firing_count counts firings of the listed transitions inside W.
//
// Aggregation treats replication r as row r of a samples matrix and sensor s
// as column s. The variance of a linear combination sum_i w_i X_i follows from
// the correlation matrix:
//   Var = sum_ij w_i w_j rho_ij sigma_i sigma_j

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "apn/engine.hpp"

namespace apn {

class SensorSampler final : public MarkingObserver {
 public:
  // Sensors without their own window use `default_window`.
  SensorSampler(const CompiledNet& net, Window default_window);

  std::size_t size() const noexcept { return sensors_.size(); }
  const std::string& name(std::size_t i) const { return sensors_[i].spec->name; }
  const Window& window(std::size_t i) const { return sensors_[i].window; }

  // Valid after finish().
  std::vector<double> values() const;

  void token_entered(int place, Color color, Time time) override;
  void token_left(int place, Color color, Time time) override;
  void transition_fired(int transition, Time time) override;
  void begin(Time time) override;
  void finish(Time time) override;

 private:
  struct State {
    const SensorSpec* spec;
    Window window;
    int count = 0;
    Time last = 0;
    double integral = 0;
    double events = 0;
  };

  double integrand(const State& s) const noexcept;
  void advance(State& s, Time time) noexcept;
  void change(int place, Color color, Time time, int delta);

  std::vector<State> sensors_;
  std::vector<std::vector<std::size_t>> by_place_;
  std::vector<std::vector<std::size_t>> by_transition_;
  bool started_ = false;
  bool finished_ = false;
};

struct SensorSummary {
  std::string name;
  double mean = 0;
  // Unbiased sample variance; NaN with fewer than two replications.
  double variance = 0;
  double std_error = 0;
  std::size_t replications = 0;
  // Constant across replications; its correlations are reported as 0.
  bool degenerate = false;
};

struct SensorReport {
  std::vector<SensorSummary> sensors;
  Eigen::MatrixXd correlation;
  std::size_t replications = 0;

  bool variance_defined() const noexcept { return replications >= 2; }
  std::size_t index_of(const std::string& name) const;
  const SensorSummary& operator[](const std::string& name) const { return sensors[index_of(name)]; }
};

template <typename Derived>
SensorReport aggregate(const Eigen::MatrixBase<Derived>& samples, const std::vector<std::string>& names) {
  using Scalar = typename Derived::Scalar;
  const auto reps = static_cast<std::size_t>(samples.rows());
  const Eigen::Index cols = samples.cols();
  if (static_cast<std::size_t>(cols) != names.size()) throw Error("aggregate: one name per sensor column required");

  SensorReport report;
  report.replications = reps;
  report.correlation = Eigen::MatrixXd::Identity(cols, cols);
  report.sensors.resize(static_cast<std::size_t>(cols));
  if (reps == 0) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      auto& s = report.sensors[static_cast<std::size_t>(j)];
      s.name = names[static_cast<std::size_t>(j)];
      s.mean = s.variance = s.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
  }

  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = samples.colwise().mean();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov;
  if (reps >= 2) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centered = samples.rowwise() - mean;
    cov = (centered.adjoint() * centered) / static_cast<Scalar>(reps - 1);
  }
  for (Eigen::Index j = 0; j < cols; ++j) {
    auto& s = report.sensors[static_cast<std::size_t>(j)];
    s.name = names[static_cast<std::size_t>(j)];
    s.mean = static_cast<double>(mean(j));
    s.replications = reps;
    s.degenerate = samples.col(j).maxCoeff() == samples.col(j).minCoeff();
    if (reps >= 2) {
      s.variance = s.degenerate ? 0.0 : static_cast<double>(cov(j, j));
      s.std_error = std::sqrt(s.variance / static_cast<double>(reps));
    } else {
      s.variance = s.std_error = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (reps < 2) return report;
  for (Eigen::Index i = 0; i < cols; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& a = report.sensors[static_cast<std::size_t>(i)];
      const auto& b = report.sensors[static_cast<std::size_t>(j)];
      double rho = 0;
      if (!a.degenerate && !b.degenerate)
        rho = std::clamp(static_cast<double>(cov(i, j)) / std::sqrt(a.variance * b.variance), -1.0, 1.0);
      report.correlation(i, j) = report.correlation(j, i) = rho;
    }
  }
  return report;
}

// Variance of sum_i w_i X_i for one replication. Divide by the replication
// count for the variance of the mean.
double combination_variance(const SensorReport& report, const Eigen::Ref<const Eigen::VectorXd>& weights);

}  // namespace apn
