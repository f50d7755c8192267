#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rhythm/simulator.h"
#include "rhythm/tracker.h"

namespace rhythm {

class UndefinedMetric : public std::runtime_error {
public:
    explicit UndefinedMetric(const std::string& what) : std::runtime_error(what) {}
};

/// Tolerance for tempo matches (both exact and octave-error bands).
inline constexpr Millis kTempoTolerance = 10.0;
/// Tolerance for a predicted measure onset to count as a hit.
inline constexpr Millis kOnsetTolerance = 50.0;

/// 100 for a beat within 10 ms of the truth, 75 within 10 ms of half or double, else 0.
int tempo_score(Millis estimated_beat, Millis true_beat);

struct TraceEntry {
    RhythmEstimate estimate;
    Millis true_beat = 0.0;
    int true_meter = 4;
    Millis time = 0.0;
};

using EstimateTrace = std::vector<TraceEntry>;

/// Mean tempo_score over the trace. Throws UndefinedMetric on an empty trace.
double tempo_accuracy(const EstimateTrace& trace);

/// Percentage of entries whose meter matches the truth. Throws UndefinedMetric on an empty trace.
double meter_accuracy(const EstimateTrace& trace);

struct PrecisionRecall {
    std::optional<double> precision;
    std::optional<double> recall;
};

/// Precision: share of predictions within 50 ms of some true onset.
/// Recall: share of true onsets after the first with some prediction within 50 ms.
/// Each side is empty when its denominator is zero. Inputs need not be sorted.
PrecisionRecall onset_precision_recall(std::span<const Millis> predicted, std::span<const Millis> truth);

/// Metrics of one simulated performance.
struct TrialMetrics {
    std::optional<double> t_ac;
    std::optional<double> m_ac;
    std::optional<double> precision;
    std::optional<double> recall;
};

TrialMetrics score_trace(const EstimateTrace& trace, std::span<const Millis> true_measure_onsets);

/// Runs the tracker once per generated note (estimate time = that note's onset) and records
/// the truth the simulator was using for it. Warm-up estimates are left out.
EstimateTrace trace_script(const PerformanceScript& script, const TrackerConfig& cfg);

/// Mean and sample standard deviation.
struct Stat {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;

    bool operator==(const Stat&) const = default;
};

Stat summarize(std::span<const double> values);

}  // namespace rhythm
