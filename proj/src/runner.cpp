#include "apn/runner.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace apn {

Window default_window(Time horizon) noexcept { return {horizon / 2, horizon}; }

void check_windows(const Net& net, Time horizon, const Window& fallback) {
  auto check = [horizon](const Window& w, const std::string& who) {
    if (!(w.begin >= 0 && w.begin < w.end && w.end <= horizon))
      throw Error(who + ": window [" + std::to_string(w.begin) + ", " + std::to_string(w.end) +
                  "] must satisfy 0 <= begin < end <= horizon (" + std::to_string(horizon) + ")");
  };
  for (const auto& s : net.sensors) check(s.window.value_or(fallback), "sensor " + s.name);
  if (net.sensors.empty()) check(fallback, "measurement window");
}

ReplicationOutput run_replication(const CompiledNet& net, std::uint64_t stream_seed, Time horizon,
                                  const Window& window, const Simulator::RecordSink& trace,
                                  Simulator::Options options) {
  SensorSampler sampler(net, window);
  Simulator sim(net, stream_seed, horizon, options);
  sim.set_observer(&sampler);
  if (trace) sim.set_trace(trace);
  sim.run();
  return {sampler.values(), sim.firings(), sim.live_tokens()};
}

std::vector<TraceRecord> trace_replication(const CompiledNet& net, std::uint64_t stream_seed, Time horizon,
                                           Simulator::Options options) {
  std::vector<TraceRecord> records;
  Simulator sim(net, stream_seed, horizon, options);
  sim.set_trace([&records](const TraceRecord& r) { records.push_back(r); });
  sim.run();
  return records;
}

RunResult run_replications(const CompiledNet& net, const RunSettings& settings) {
  if (settings.replications < 1) throw Error("at least one replication is required");
  if (!(settings.horizon > 0)) throw Error("horizon must be > 0");
  const Window window = settings.window.value_or(default_window(settings.horizon));
  check_windows(net.net(), settings.horizon, window);

  RunResult result;
  for (const auto& s : net.net().sensors) result.names.push_back(s.name);
  const auto reps = static_cast<Eigen::Index>(settings.replications);
  const auto cols = static_cast<Eigen::Index>(result.names.size());
  result.samples.resize(reps, cols);

  unsigned jobs = settings.jobs ? settings.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, settings.replications));

  std::atomic<std::uint64_t> next{0};
  std::mutex failure_mutex;
  std::uint64_t failed_at = settings.replications;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= settings.replications) return;
      {
        std::lock_guard lock(failure_mutex);
        if (r > failed_at) return;
      }
      try {
        const auto out =
            run_replication(net, replication_seed(settings.seed, r), settings.horizon, window, {}, settings.options);
        for (Eigen::Index j = 0; j < cols; ++j)
          result.samples(static_cast<Eigen::Index>(r), j) = out.sensors[static_cast<std::size_t>(j)];
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        // Report the failure of the lowest replication index.
        if (r < failed_at) {
          failed_at = r;
          failure = std::current_exception();
        }
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  result.report = aggregate(result.samples, result.names);
  return result;
}

}  // namespace apn
