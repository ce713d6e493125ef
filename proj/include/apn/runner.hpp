#pragma once

// Replication fan-out. Replication r always runs on the stream
// replication_seed(seed, r) and writes row r of the samples matrix, so the
// result does not depend on how many threads execute the replications.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apn/engine.hpp"
#include "apn/stats.hpp"

namespace apn {

// [horizon / 2, horizon]
Window default_window(Time horizon) noexcept;

// Throws Error when a sensor window (or the default) leaves [0, horizon].
void check_windows(const Net& net, Time horizon, const Window& fallback);

struct ReplicationOutput {
  std::vector<double> sensors;
  std::uint64_t firings = 0;
  std::size_t final_tokens = 0;
};

ReplicationOutput run_replication(const CompiledNet& net, std::uint64_t stream_seed, Time horizon,
                                  const Window& window, const Simulator::RecordSink& trace = {},
                                  Simulator::Options options = {});

// Collects the whole trace of one replication in memory.
std::vector<TraceRecord> trace_replication(const CompiledNet& net, std::uint64_t stream_seed, Time horizon,
                                           Simulator::Options options = {});

struct RunSettings {
  std::uint64_t replications = 1;
  std::uint64_t seed = 0;
  Time horizon = 0;
  std::optional<Window> window;
  // 0 selects the hardware concurrency.
  unsigned jobs = 0;
  Simulator::Options options;
};

struct RunResult {
  std::vector<std::string> names;
  Eigen::MatrixXd samples;
  SensorReport report;
};

RunResult run_replications(const CompiledNet& net, const RunSettings& settings);

}  // namespace apn
