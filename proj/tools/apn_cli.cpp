// apn: validate, simulate and cross-check Abridged Petri Net models.
//
// Exit codes: 0 success, 1 usage or other error, 2 parse/validation error,
// 3 I/O error, 4 livelock, 5 unsupported model.

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "apn/engine.hpp"
#include "apn/markov.hpp"
#include "apn/model.hpp"
#include "apn/model_io.hpp"
#include "apn/runner.hpp"
#include "apn/trace_io.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kIo = 3, kLivelock = 4, kUnsupported = 5 };

apn::Window parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--window", "expected t1:t2");
  auto number = [&](std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw CLI::ValidationError("--window", "bad number '" + std::string(s) + "'");
    return v;
  };
  const std::string_view view(text);
  return {number(view.substr(0, colon)), number(view.substr(colon + 1))};
}

// Opens `path` for writing, or returns std::cout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw apn::IoError("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct Common {
  std::string model;
  std::optional<std::uint64_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::string window;
  std::string out;
  std::string trace;
  unsigned jobs = 0;
};

apn::Time horizon_of(const Common& c, const apn::Model& m) {
  if (c.horizon) return *c.horizon;
  if (m.simulation.horizon) return *m.simulation.horizon;
  throw CLI::ValidationError("--horizon", "no horizon on the command line or in the model");
}

std::optional<apn::Window> window_of(const Common& c, const apn::Model& m) {
  if (!c.window.empty()) return parse_window(c.window);
  return m.simulation.window;
}

int cmd_validate(const Common& c) {
  const auto file = apn::load_model(c.model);
  (void)file;
  std::cout << "OK\n";
  return kOk;
}

int cmd_run(const Common& c) {
  const auto model = apn::load_model(c.model);
  const apn::CompiledNet net(model.net);
  apn::RunSettings settings;
  settings.replications = c.reps.value_or(model.simulation.replications.value_or(1000));
  settings.seed = c.seed.value_or(model.simulation.seed.value_or(0));
  settings.horizon = horizon_of(c, model);
  settings.window = window_of(c, model);
  settings.jobs = c.jobs;
  const auto window = settings.window.value_or(apn::default_window(settings.horizon));

  if (!c.trace.empty()) {
    // Trace of replication 0, on the same stream as the statistics.
    apn::check_windows(net.net(), settings.horizon, window);
    std::ofstream out(c.trace, std::ios::binary);
    if (!out) throw apn::IoError("cannot open " + c.trace + " for writing");
    apn::CsvTraceWriter writer(out);
    apn::run_replication(net, apn::replication_seed(settings.seed, 0), settings.horizon, window,
                         [&writer](const apn::TraceRecord& r) { writer(r); });
  }

  const auto result = apn::run_replications(net, settings);
  Output out(c.out);
  apn::write_results(result.report, out.stream(), {settings.seed, settings.horizon, window});
  return kOk;
}

int cmd_trace(const Common& c, std::uint64_t replication) {
  const auto model = apn::load_model(c.model);
  const apn::CompiledNet net(model.net);
  const auto seed = c.seed.value_or(model.simulation.seed.value_or(0));
  const auto horizon = horizon_of(c, model);
  Output out(c.out.empty() ? c.trace : c.out);
  apn::CsvTraceWriter writer(out.stream());
  apn::Simulator sim(net, apn::replication_seed(seed, replication), horizon);
  sim.set_trace([&writer](const apn::TraceRecord& r) { writer(r); });
  sim.run();
  out.stream().flush();
  return kOk;
}

int cmd_markov(const Common& c, std::size_t intervals, const std::string& generator) {
  const auto model = apn::load_model(c.model);
  const auto graph = apn::explore(model.net);
  const auto chain = apn::build_ctmc(graph);
  std::cout << chain.states.size() << " states\n";
  if (!generator.empty()) {
    Output g(generator);
    apn::write_generator(chain, g.stream());
  }
  std::optional<apn::Window> window = window_of(c, model);
  if (!window && (c.horizon || model.simulation.horizon)) window = apn::default_window(horizon_of(c, model));
  if (!window) return kOk;

  const auto pi = apn::window_average(chain, *window, intervals);
  Output out(c.out);
  auto& os = out.stream();
  os << "window " << window->begin << ':' << window->end << '\n';
  for (std::size_t s = 0; s < chain.states.size(); ++s)
    os << apn::describe(graph, chain.states[s]) << ' ' << pi(static_cast<Eigen::Index>(s)) << '\n';
  for (const auto& sensor : model.net.sensors) {
    if (sensor.kind != apn::SensorKind::time_average && sensor.kind != apn::SensorKind::threshold) continue;
    if (sensor.window) {
      const auto own = apn::window_average(chain, *sensor.window, intervals);
      os << "sensor " << sensor.name << ' ' << apn::expected_sensor(chain, sensor, own) << '\n';
    } else {
      os << "sensor " << sensor.name << ' ' << apn::expected_sensor(chain, sensor, pi) << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abridged Petri Net simulator"};
  app.require_subcommand(1);

  Common c;
  std::uint64_t replication = 0;
  std::size_t intervals = 1000;
  std::string generator;
  unsigned customers = 0;
  unsigned cars = 0;

  auto* validate = app.add_subcommand("validate", "Check a model file");
  validate->add_option("model", c.model, "Model file")->required();

  auto* run = app.add_subcommand("run", "Run replications and write sensor statistics as JSON");
  run->add_option("model", c.model, "Model file")->required();
  run->add_option("--reps", c.reps, "Replications")->check(CLI::Range(std::uint64_t{1}, ~std::uint64_t{0}));
  run->add_option("--seed", c.seed, "Master seed");
  run->add_option("--horizon", c.horizon, "Simulated time per replication")->check(CLI::PositiveNumber);
  run->add_option("--window", c.window, "Default measurement window t1:t2");
  run->add_option("--out", c.out, "Results file (default stdout)");
  run->add_option("--trace", c.trace, "Also write the trace of replication 0 to this file");
  run->add_option("--jobs", c.jobs, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);

  auto* trace = app.add_subcommand("trace", "Write the full event trace of one replication as CSV");
  trace->add_option("model", c.model, "Model file")->required();
  trace->add_option("--seed", c.seed, "Master seed");
  trace->add_option("--replication", replication, "Replication index");
  trace->add_option("--horizon", c.horizon, "Simulated time")->check(CLI::PositiveNumber);
  trace->add_option("--out,--trace", c.out, "Trace file (default stdout)");

  auto* count = app.add_subcommand("count-states", "State count of the customers/cars household model");
  count->add_option("customers", customers)->required();
  count->add_option("cars", cars)->required();

  auto* markov = app.add_subcommand("markov", "Build the CTMC of an exponential model and solve it");
  markov->add_option("model", c.model, "Model file")->required();
  markov->add_option("--horizon", c.horizon, "Horizon for the default window")->check(CLI::PositiveNumber);
  markov->add_option("--window", c.window, "Averaging window t1:t2");
  markov->add_option("--intervals", intervals, "Trapezoid intervals over the window")->check(CLI::PositiveNumber);
  markov->add_option("--generator", generator, "Write the generator as row,col,rate");
  markov->add_option("--out", c.out, "Probabilities file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(c);
    if (*run) return cmd_run(c);
    if (*trace) return cmd_trace(c, replication);
    if (*count) {
      std::cout << apn::count_states(customers, cars) << '\n';
      return kOk;
    }
    if (*markov) return cmd_markov(c, intervals, generator);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const apn::ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << c.model << ": " << v.message() << '\n';
    return kInvalid;
  } catch (const apn::ParseError& e) {
    std::cerr << c.model << ':' << e.line() << ':' << e.column() << ": " << e.detail() << '\n';
    return kInvalid;
  } catch (const apn::ColorLeak& e) {
    std::cerr << c.model << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const apn::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const apn::LivelockError& e) {
    std::cerr << "livelock: " << e.what() << '\n';
    return kLivelock;
  } catch (const apn::UnsupportedModel& e) {
    std::cerr << "unsupported model: " << e.what() << '\n';
    return kUnsupported;
  } catch (const apn::VanishingCycle& e) {
    std::cerr << "unsupported model: " << e.what() << '\n';
    return kUnsupported;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
