#include "apn/trace_io.hpp"

#include <json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace apn {

namespace {

std::string number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void check(std::ostream& out) {
  if (!out) throw IoError("failed to write output");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("bad trace field '" + text + "'", static_cast<int>(line), 0);
  return value;
}

EventKind parse_event(const std::string& text, std::size_t line) {
  for (auto kind : {EventKind::fire, EventKind::enable, EventKind::preempt, EventKind::emit, EventKind::absorb})
    if (text == to_string(kind)) return kind;
  throw ParseError("unknown trace event '" + text + "'", static_cast<int>(line), 0);
}

}  // namespace

CsvTraceWriter::CsvTraceWriter(std::ostream& out) : out_(&out) {
  *out_ << kTraceHeader << '\n';
  check(*out_);
}

void CsvTraceWriter::operator()(const TraceRecord& r) {
  std::string row;
  row.reserve(96);
  row += number(r.time);
  row += ',';
  row += to_string(r.event);
  row += ',';
  row += r.transition;
  row += ',';
  row += std::to_string(r.token);
  row += ',';
  row += std::to_string(r.color_before);
  row += ',';
  row += std::to_string(r.color_after);
  row += ',';
  if (r.from) row += *r.from;
  row += ',';
  if (r.to) row += *r.to;
  row += ',';
  row += number(r.age_before);
  row += ',';
  row += number(r.age_after);
  row += '\n';
  *out_ << row;
  check(*out_);
}

void write_trace(std::span<const TraceRecord> records, std::ostream& out) {
  CsvTraceWriter writer(out);
  for (const auto& r : records) writer(r);
  out.flush();
  check(out);
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("missing trace header", 1, 1);
  std::vector<TraceRecord> records;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 10) throw ParseError("trace row needs 10 fields", static_cast<int>(n), 1);
    TraceRecord r;
    r.time = parse_field<double>(f[0], n);
    r.event = parse_event(f[1], n);
    r.transition = f[2];
    r.token = parse_field<TokenId>(f[3], n);
    r.color_before = parse_field<Color>(f[4], n);
    r.color_after = parse_field<Color>(f[5], n);
    if (!f[6].empty()) r.from = f[6];
    if (!f[7].empty()) r.to = f[7];
    r.age_before = parse_field<double>(f[8], n);
    r.age_after = parse_field<double>(f[9], n);
    records.push_back(std::move(r));
  }
  return records;
}

void write_results(const SensorReport& report, std::ostream& out, const RunInfo& info) {
  using nlohmann::ordered_json;
  ordered_json doc;
  ordered_json run = ordered_json::object();
  if (info.seed) run["seed"] = *info.seed;
  if (info.horizon) run["horizon"] = *info.horizon;
  if (info.window) run["window"] = {info.window->begin, info.window->end};
  doc["run"] = run;
  doc["replications"] = report.replications;
  doc["variance_defined"] = report.variance_defined();
  ordered_json sensors = ordered_json::array();
  for (const auto& s : report.sensors) {
    ordered_json entry;
    entry["name"] = s.name;
    entry["mean"] = s.mean;
    entry["std_error"] = s.std_error;
    entry["variance"] = s.variance;
    entry["replications"] = s.replications;
    entry["degenerate"] = s.degenerate;
    sensors.push_back(std::move(entry));
  }
  doc["sensors"] = std::move(sensors);
  ordered_json matrix = ordered_json::array();
  for (Eigen::Index i = 0; i < report.correlation.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < report.correlation.cols(); ++j) row.push_back(report.correlation(i, j));
    matrix.push_back(std::move(row));
  }
  doc["correlation"] = std::move(matrix);
  out << doc.dump(2) << '\n';
  out.flush();
  check(out);
}

}  // namespace apn
