#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntnpred/harness.hpp"
#include "ntnpred/predictor.hpp"

namespace ntnpred {

// CSV dialect: comma separated, header row, '.' decimal point, LF endings.
// Wall time is deliberately absent so reruns are byte-identical.

std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);
std::string training_log_csv(const std::vector<EpochLog>& history);

/// One curve of a line chart.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

/// Two-column text ("x y" per line). Several series are separated by a blank
/// line and introduced by a "# label" line.
std::string plot_data_text(const PlotSpec& plot);

/// Self-contained SVG line chart. The plotted numbers are repeated in a
/// leading comment block. Non-positive values are skipped on a log axis and
/// non-finite values on any axis.
std::string svg_line_chart(const PlotSpec& plot);

/// Metric name, axis title and log flag for every per-metric plot.
struct MetricPlotInfo {
    std::string name;
    std::string y_label;
    bool log_y;
};
const std::vector<MetricPlotInfo>& metric_plots();

/// Charts of one metric against Eb/N0, one series per record label in order
/// of first appearance.
PlotSpec metric_plot(const std::vector<MetricsRecord>& records, const MetricPlotInfo& metric);

/// Writes <dir>/<metric>.dat and <dir>/<metric>.svg for every metric plot;
/// returns the written paths.
std::vector<std::filesystem::path> write_metric_plots(const std::filesystem::path& dir,
                                                      const std::vector<MetricsRecord>& records);

struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json seeds = nlohmann::json::object();
    std::vector<std::filesystem::path> artifacts;
    std::string started_utc;
    std::string finished_utc;
    double wall_time_s = 0.0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    /// Writes atomically; the manifest itself is appended to `artifacts`.
    void write(const std::filesystem::path& path);
};

std::string tool_version();
std::string git_revision();
/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

}  // namespace ntnpred
