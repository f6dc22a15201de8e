#include "acmptc/export.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "acmptc/error.hpp"

namespace acmptc {

namespace {

using ordered = nlohmann::ordered_json;

// JSON number carrying exactly the 6-digit value shown in CSVs.
ordered rounded(double v) {
  const std::string text = format_number(v);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

ordered stream_json(const StreamSummary& s) {
  ordered j = ordered::object();
  if (s.stream_id >= 0) j["stream_id"] = s.stream_id;
  j["samples"] = s.samples;
  j["mean_throughput_mbps"] = rounded(s.mean_throughput_mbps);
  j["min_throughput_mbps"] = rounded(s.min_throughput_mbps);
  j["max_throughput_mbps"] = rounded(s.max_throughput_mbps);
  j["cumulative_throughput"] = rounded(s.cumulative_throughput);
  j["mean_latency_ms"] = rounded(s.mean_latency_ms);
  j["p95_latency_ms"] = rounded(s.p95_latency_ms);
  j["mean_loss"] = rounded(s.mean_loss);
  j["mean_qos"] = rounded(s.mean_qos);
  j["mean_utility"] = rounded(s.mean_utility);
  return j;
}

ordered rounded_array(std::span<const double> values) {
  ordered a = ordered::array();
  for (double v : values) a.push_back(rounded(v));
  return a;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

template <typename T>
T field(std::string_view text, std::size_t line, const char* name) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, std::string("cannot parse ") + name + " from '" + std::string(text) + "'");
  }
  return v;
}

void check_stream(std::ostream& out, const char* what) {
  if (!out) throw IoError(std::string("failed writing ") + what);
}

}  // namespace

std::string_view version() { return ACMPTC_VERSION_STRING; }

std::string format_number(double value) {
  if (!std::isfinite(value)) throw InputError("refusing to export a non-finite number");
  if (value == 0.0) return "0";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 6);
  if (ec != std::errc()) throw InputError("number formatting failed");
  return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  std::vector<const MetricsRecord*> order;
  order.reserve(records.size());
  for (const MetricsRecord& r : records) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const MetricsRecord* a, const MetricsRecord* b) {
    return a->t != b->t ? a->t < b->t : a->stream_id < b->stream_id;
  });
  out << "# acmptc " << version() << '\n' << kMetricsHeader << '\n';
  std::string paths;
  for (const MetricsRecord* r : order) {
    paths.clear();
    for (std::size_t k = 0; k < r->assigned_paths.size(); ++k) {
      if (k) paths += '|';
      paths += std::to_string(r->assigned_paths[k]);
    }
    out << r->t << ',' << r->stream_id << ',' << format_number(r->delivered_mbps) << ','
        << format_number(r->latency_ms) << ',' << format_number(r->loss_rate) << ',' << format_number(r->qos)
        << ',' << format_number(r->utility) << ',' << paths << '\n';
  }
  check_stream(out, "metrics CSV");
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  std::vector<MetricsRecord> out;
  std::string raw;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!saw_header) {
      if (line != kMetricsHeader) throw ParseError(line_no, "expected header '" + std::string(kMetricsHeader) + "'");
      saw_header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) throw ParseError(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    MetricsRecord r;
    r.t = field<std::int64_t>(f[0], line_no, "t");
    r.stream_id = field<int>(f[1], line_no, "stream_id");
    r.delivered_mbps = field<double>(f[2], line_no, "delivered_mbps");
    r.latency_ms = field<double>(f[3], line_no, "latency_ms");
    r.loss_rate = field<double>(f[4], line_no, "loss_rate");
    r.qos = field<double>(f[5], line_no, "qos");
    r.utility = field<double>(f[6], line_no, "utility");
    if (!f[7].empty()) {
      for (std::string_view id : split(f[7], '|')) r.assigned_paths.push_back(field<int>(id, line_no, "path id"));
    }
    out.push_back(std::move(r));
  }
  if (!saw_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");
  return out;
}

std::string summary_json(const EpisodeResult& result) {
  const StreamSummary& a = result.summary.aggregate;
  ordered j = ordered::object();
  j["version"] = std::string(version());
  j["scheduler"] = std::string(to_string(result.scheduler));
  j["seed"] = result.seed;
  j["mean_throughput_mbps"] = rounded(a.mean_throughput_mbps);
  j["p95_latency_ms"] = rounded(a.p95_latency_ms);
  j["mean_loss"] = rounded(a.mean_loss);
  j["mean_qos"] = rounded(a.mean_qos);
  j["mean_utility"] = rounded(a.mean_utility);
  j["cumulative_throughput"] = rounded(a.cumulative_throughput);
  j["violations"] = result.violations;
  j["bandwidth_cap_violations"] = result.bandwidth_cap_violations;
  j["reallocations"] = result.reallocations;
  j["max_path_utilization"] = rounded(result.max_path_utilization);
  j["min_cwnd_mbit"] = rounded(result.min_cwnd_mbit);
  ordered streams = ordered::array();
  for (const StreamSummary& s : result.summary.streams) streams.push_back(stream_json(s));
  j["streams"] = std::move(streams);
  return j.dump(2) + "\n";
}

std::string comparison_json(const ComparisonReport& report) {
  ordered j = ordered::object();
  j["version"] = std::string(version());
  j["seeds"] = report.seeds;
  ordered columns = ordered::array();
  for (const SchedulerColumn& c : report.columns) {
    ordered col = stream_json(c.mean);
    col["scheduler"] = std::string(to_string(c.scheduler));
    std::size_t violations = 0;
    for (const EpisodeResult& r : c.runs) violations += r.violations;
    col["violations"] = violations;
    columns.push_back(std::move(col));
  }
  j["schedulers"] = std::move(columns);
  ordered diffs = ordered::array();
  for (const PairedDifference& d : report.differences) {
    ordered x = ordered::object();
    x["scheduler"] = std::string(to_string(d.scheduler));
    x["baseline"] = std::string(to_string(d.baseline));
    x["mean_throughput_difference"] = rounded(d.mean_throughput);
    x["mean_utility_difference"] = rounded(d.mean_utility);
    x["throughput_wins"] = d.throughput_wins;
    x["utility_wins"] = d.utility_wins;
    x["throughput_sign_test_p"] = rounded(d.throughput_p_value);
    x["utility_sign_test_p"] = rounded(d.utility_p_value);
    x["throughput"] = rounded_array(d.throughput);
    x["utility"] = rounded_array(d.utility);
    diffs.push_back(std::move(x));
  }
  j["differences"] = std::move(diffs);
  return j.dump(2) + "\n";
}

void write_series_csv(std::ostream& out, std::span<const SeriesPoint> points) {
  out << "# acmptc " << version() << '\n' << kSeriesHeader << '\n';
  for (const SeriesPoint& p : points) out << p.series << ',' << p.t << ',' << format_number(p.value) << '\n';
  check_stream(out, "series CSV");
}

std::vector<SeriesPoint> comparison_series(const ComparisonReport& report) {
  std::vector<SeriesPoint> out;
  for (const SchedulerColumn& c : report.columns) {
    const std::string name(to_string(c.scheduler));
    for (std::size_t t = 0; t < c.throughput_series.size(); ++t) {
      out.push_back({name, static_cast<std::int64_t>(t), c.throughput_series[t]});
    }
  }
  return out;
}

std::vector<SeriesPoint> training_series(const TrainingResult& training) {
  std::vector<SeriesPoint> out;
  auto add = [&](const std::string& name, const std::vector<double>& values) {
    for (std::size_t e = 0; e < values.size(); ++e) out.push_back({name, static_cast<std::int64_t>(e), values[e]});
  };
  add("reward", training.episode_rewards);
  add("td_error", training.episode_td_error);
  add("epsilon", training.episode_epsilon);
  for (std::size_t k = 0; k < training.agent_rewards.size(); ++k) {
    add("agent" + std::to_string(k) + "_reward", training.agent_rewards[k]);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> export_plots(const std::filesystem::path& in_dir,
                                                const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(in_dir)) throw IoError("input directory '" + in_dir.string() + "' does not exist");
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    const fs::path& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".csv" && p.stem().string().starts_with("metrics")) {
      inputs.push_back(p);
    }
  }
  if (inputs.empty()) throw IoError("no metrics*.csv files in '" + in_dir.string() + "'");
  std::sort(inputs.begin(), inputs.end());

  std::vector<SeriesPoint> throughput, latency_dist, loss, scatter;
  for (const fs::path& p : inputs) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    const std::vector<MetricsRecord> records = read_metrics_csv(in);
    if (records.empty()) continue;
    std::string name = p.stem().string().substr(std::string_view("metrics").size());
    if (!name.empty() && name.front() == '_') name.erase(0, 1);
    if (name.empty()) name = "run";

    // Per-step totals and means over streams.
    std::map<std::int64_t, std::array<double, 4>> per_t;  // delivered, loss sum, latency sum, count
    std::vector<double> latencies;
    for (const MetricsRecord& r : records) {
      auto& acc = per_t[r.t];
      acc[0] += r.delivered_mbps;
      acc[1] += r.loss_rate;
      acc[2] += r.latency_ms;
      acc[3] += 1.0;
      latencies.push_back(r.latency_ms);
    }
    for (const auto& [t, acc] : per_t) {
      throughput.push_back({name, t, acc[0]});
      loss.push_back({name, t, acc[1] / acc[3]});
      scatter.push_back({name + "/throughput", t, acc[0]});
      scatter.push_back({name + "/latency", t, acc[2] / acc[3]});
    }
    for (int q = 1; q <= 100; ++q) latency_dist.push_back({name, q, nearest_rank_percentile(latencies, q / 100.0)});
  }

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const char* file, const std::vector<SeriesPoint>& points) {
    std::ostringstream os;
    write_series_csv(os, points);
    const fs::path target = out_dir / file;
    write_text_file(target, os.str());
    written.push_back(target);
  };
  emit("throughput_over_time.csv", throughput);
  emit("latency_distribution.csv", latency_dist);
  emit("loss_over_time.csv", loss);
  emit("throughput_vs_latency.csv", scatter);
  return written;
}

}  // namespace acmptc
