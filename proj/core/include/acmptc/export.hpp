#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "acmptc/drl.hpp"
#include "acmptc/sim_engine.hpp"

namespace acmptc {

/// Library version, also written at the top of every exported file.
std::string_view version();

/// Six significant digits, locale independent. Throws InputError for NaN or infinity.
std::string format_number(double value);

inline constexpr std::string_view kMetricsHeader =
    "t,stream_id,delivered_mbps,latency_ms,loss_rate,qos,utility,assigned_paths";
inline constexpr std::string_view kSeriesHeader = "series,t,value";

/// "# acmptc <version>" line, the header, then one row per record sorted by (t, stream_id).
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);

/// Reads what write_metrics_csv wrote. Comment lines start with '#'.
/// Only the exported columns are recovered; allocation and demand stay zero.
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

/// Summary document: mean_throughput_mbps, p95_latency_ms, mean_loss, mean_qos,
/// mean_utility, cumulative_throughput, violations, plus per-stream blocks.
std::string summary_json(const EpisodeResult& result);

/// Means per scheduler and paired differences against the first column.
std::string comparison_json(const ComparisonReport& report);

/// Long-format point of a plot series.
struct SeriesPoint {
  std::string series;
  std::int64_t t = 0;
  double value = 0.0;
};

void write_series_csv(std::ostream& out, std::span<const SeriesPoint> points);

/// Mean throughput over time, one series per scheduler.
std::vector<SeriesPoint> comparison_series(const ComparisonReport& report);

/// Per-episode reward, TD error and epsilon, plus one reward series per agent.
std::vector<SeriesPoint> training_series(const TrainingResult& training);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Reads every metrics*.csv in `in_dir` and writes throughput_over_time.csv,
/// latency_distribution.csv, loss_over_time.csv and throughput_vs_latency.csv to
/// `out_dir`. Series are named after the file stem ("metrics_tcp" -> "tcp").
/// Returns the files written.
std::vector<std::filesystem::path> export_plots(const std::filesystem::path& in_dir,
                                                const std::filesystem::path& out_dir);

}  // namespace acmptc
