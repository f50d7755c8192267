#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhythm/metrics.h"

namespace rhythm {

/// One experimental cell: its labels (e.g. tempo, sigma_err) and the metrics measured there.
struct ReportRow {
    std::vector<std::pair<std::string, std::string>> labels;
    std::vector<std::pair<std::string, Stat>> metrics;

    const Stat* metric(std::string_view name) const;
    std::string label(std::string_view key) const;

    bool operator==(const ReportRow&) const = default;
};

struct MetricsReport {
    std::string experiment;
    std::vector<ReportRow> rows;

    /// Rows whose label set contains every (key, value) in `filter`.
    std::vector<const ReportRow*> select(
        const std::vector<std::pair<std::string, std::string>>& filter) const;

    bool operator==(const MetricsReport&) const = default;
};

/// One JSON object per (row, metric):
/// {"experiment":..,"labels":{..},"metric":..,"mean":..,"sd":..,"n":..}
std::string to_jsonl(const MetricsReport& report);

/// Inverse of to_jsonl. Consecutive lines with identical labels form one row.
/// Throws std::runtime_error naming the offending line on malformed input.
MetricsReport from_jsonl(std::string_view text);

/// Tab-separated table with columns: experiment, labels, metric, mean, sd, n.
std::string to_table(const MetricsReport& report);

/// Formats a label value so it round-trips (shortest representation, no trailing zeros).
std::string format_number(double value);

}  // namespace rhythm
