#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string_view>

#include "acmptc/error.hpp"
#include "acmptc/net_model.hpp"
#include "acmptc/sim_engine.hpp"

namespace acmptc {

namespace {

constexpr std::string_view kTraceHeader = "t,path_id,bandwidth_mbps,latency_ms,loss_rate";
constexpr std::string_view kStreamTraceHeader = "t,stream_id,bitrate_mbps";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(line, std::string("cannot parse ") + name + " from '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, std::string(name) + " is not finite");
  }
  return value;
}

}  // namespace

std::vector<TraceRecord> load_trace(std::istream& source) {
  std::vector<TraceRecord> records;
  std::vector<std::size_t> lines;
  std::string raw;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(source, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kTraceHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    TraceRecord r;
    r.t = parse_number<std::int64_t>(fields[0], line_no, "t");
    r.path_id = parse_number<int>(fields[1], line_no, "path_id");
    r.bandwidth_mbps = parse_number<double>(fields[2], line_no, "bandwidth_mbps");
    r.latency_ms = parse_number<double>(fields[3], line_no, "latency_ms");
    r.loss_rate = parse_number<double>(fields[4], line_no, "loss_rate");
    if (r.t < 0) throw ParseError(line_no, "t must be >= 0");
    if (r.path_id < 0) throw ParseError(line_no, "path_id must be >= 0");
    if (r.bandwidth_mbps < 0.0) throw ParseError(line_no, "bandwidth_mbps must be >= 0");
    if (r.latency_ms < 0.0) throw ParseError(line_no, "latency_ms must be >= 0");
    if (r.loss_rate < 0.0 || r.loss_rate > 1.0) throw ParseError(line_no, "loss_rate must be in [0,1]");
    records.push_back(r);
    lines.push_back(line_no);
  }
  if (!saw_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].t != records[b].t) return records[a].t < records[b].t;
    return records[a].path_id < records[b].path_id;
  });
  std::vector<TraceRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const TraceRecord& r = records[order[k]];
    if (!sorted.empty() && sorted.back().t == r.t && sorted.back().path_id == r.path_id) {
      throw ParseError(lines[order[k]], "duplicate (t, path_id) = (" + std::to_string(r.t) + ", " +
                                            std::to_string(r.path_id) + ")");
    }
    sorted.push_back(r);
  }
  return sorted;
}

std::vector<TraceRecord> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  return load_trace(in);
}

NetworkState trace_overwrite(const NetworkState& state, std::span<const TraceRecord> records) {
  NetworkState next = state;
  for (const TraceRecord& r : records) {
    if (r.path_id < 0 || static_cast<std::size_t>(r.path_id) >= next.paths.size()) {
      throw InputError("trace record for unknown path_id " + std::to_string(r.path_id) + " in a " +
                       std::to_string(next.paths.size()) + "-path network");
    }
    PathState& p = next.paths[static_cast<std::size_t>(r.path_id)];
    const double overflow = std::max(0.0, p.loss_rate - p.base_loss_rate);
    p.bandwidth_mbps = r.bandwidth_mbps;
    p.capacity_mbps = std::max(p.capacity_mbps, r.bandwidth_mbps);
    p.latency_ms = r.latency_ms;
    p.base_loss_rate = r.loss_rate;
    p.loss_rate = std::clamp(r.loss_rate + overflow, 0.0, 1.0);
    p.rtt_ms = modeled_rtt_ms(p.latency_ms, p.congestion);
  }
  return next;
}

NetworkState trace_step(const NetworkState& state, std::span<const TraceRecord> records_at_t) {
  for (const TraceRecord& r : records_at_t) {
    if (r.t != state.t + 1) {
      throw InputError("trace record at t=" + std::to_string(r.t) + " applied at step " +
                       std::to_string(state.t + 1));
    }
  }
  NetworkState next = trace_overwrite(state, records_at_t);
  next.t = state.t + 1;
  return next;
}

std::span<const TraceRecord> trace_records_at(std::span<const TraceRecord> sorted, std::int64_t t) {
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), t,
                             [](const TraceRecord& r, std::int64_t v) { return r.t < v; });
  auto hi = std::upper_bound(lo, sorted.end(), t,
                             [](std::int64_t v, const TraceRecord& r) { return v < r.t; });
  return {lo, hi};
}

std::vector<StreamTraceRecord> load_stream_trace(std::istream& source) {
  std::vector<StreamTraceRecord> records;
  std::vector<std::size_t> lines;
  std::string raw;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(source, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kStreamTraceHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kStreamTraceHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    StreamTraceRecord r;
    r.t = parse_number<std::int64_t>(fields[0], line_no, "t");
    r.stream_id = parse_number<int>(fields[1], line_no, "stream_id");
    r.bitrate_mbps = parse_number<double>(fields[2], line_no, "bitrate_mbps");
    if (r.t < 0) throw ParseError(line_no, "t must be >= 0");
    if (r.stream_id < 0) throw ParseError(line_no, "stream_id must be >= 0");
    if (r.bitrate_mbps < 0.0) throw ParseError(line_no, "bitrate_mbps must be >= 0");
    records.push_back(r);
    lines.push_back(line_no);
  }
  if (!saw_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].t != records[b].t) return records[a].t < records[b].t;
    return records[a].stream_id < records[b].stream_id;
  });
  std::vector<StreamTraceRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const StreamTraceRecord& r = records[order[k]];
    if (!sorted.empty() && sorted.back().t == r.t && sorted.back().stream_id == r.stream_id) {
      throw ParseError(lines[order[k]], "duplicate (t, stream_id) = (" + std::to_string(r.t) + ", " +
                                            std::to_string(r.stream_id) + ")");
    }
    sorted.push_back(r);
  }
  return sorted;
}

std::vector<StreamTraceRecord> load_stream_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open stream trace file '" + path + "'");
  return load_stream_trace(in);
}

}  // namespace acmptc
