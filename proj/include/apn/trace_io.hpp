#pragma once

// Trace and results files.
//
// Traces are comma-separated with the header
//   time,event,transition,token,color_before,color_after,from,to,age_before,age_after
// and one record per row; absent places are empty fields. Results are a JSON
// document with per-sensor mean, standard error and replication count plus the
// correlation matrix; undefined numbers are written as null.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "apn/engine.hpp"
#include "apn/stats.hpp"

namespace apn {

inline constexpr const char* kTraceHeader =
    "time,event,transition,token,color_before,color_after,from,to,age_before,age_after";

// Streams records as they are produced. Throws IoError when the stream fails.
class CsvTraceWriter {
 public:
  explicit CsvTraceWriter(std::ostream& out);
  void operator()(const TraceRecord& record);

 private:
  std::ostream* out_;
};

void write_trace(std::span<const TraceRecord> records, std::ostream& out);
std::vector<TraceRecord> read_trace(std::istream& in);

struct RunInfo {
  std::optional<std::uint64_t> seed;
  std::optional<Time> horizon;
  std::optional<Window> window;
};

void write_results(const SensorReport& report, std::ostream& out, const RunInfo& info = {});

}  // namespace apn
