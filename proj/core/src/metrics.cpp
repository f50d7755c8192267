#include "rhythm/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rhythm {
namespace {

// True when some element of sorted `values` lies within `tol` of `x`.
bool has_neighbour(const std::vector<Millis>& values, Millis x, Millis tol) {
    auto it = std::lower_bound(values.begin(), values.end(), x - tol);
    return it != values.end() && *it <= x + tol;
}

}  // namespace

int tempo_score(Millis estimated_beat, Millis true_beat) {
    if (!(estimated_beat > 0.0) || !(true_beat > 0.0)) {
        throw std::invalid_argument("tempo_score needs positive beats");
    }
    if (std::abs(estimated_beat - true_beat) <= kTempoTolerance) {
        return 100;
    }
    if (std::abs(estimated_beat - true_beat / 2.0) <= kTempoTolerance ||
        std::abs(estimated_beat - 2.0 * true_beat) <= kTempoTolerance) {
        return 75;
    }
    return 0;
}

double tempo_accuracy(const EstimateTrace& trace) {
    if (trace.empty()) {
        throw UndefinedMetric("tempo accuracy of an empty trace");
    }
    double total = 0.0;
    for (const auto& e : trace) {
        total += tempo_score(e.estimate.beat_estimate.beat, e.true_beat);
    }
    return total / static_cast<double>(trace.size());
}

double meter_accuracy(const EstimateTrace& trace) {
    if (trace.empty()) {
        throw UndefinedMetric("meter accuracy of an empty trace");
    }
    const auto hits = std::count_if(trace.begin(), trace.end(), [](const TraceEntry& e) {
        return e.estimate.meter_estimate.meter == e.true_meter;
    });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(trace.size());
}

PrecisionRecall onset_precision_recall(std::span<const Millis> predicted, std::span<const Millis> truth) {
    std::vector<Millis> pred(predicted.begin(), predicted.end());
    std::vector<Millis> actual(truth.begin(), truth.end());
    std::sort(pred.begin(), pred.end());
    std::sort(actual.begin(), actual.end());

    PrecisionRecall out;
    if (!pred.empty()) {
        const auto hits = std::count_if(pred.begin(), pred.end(),
                                        [&](Millis p) { return has_neighbour(actual, p, kOnsetTolerance); });
        out.precision = 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
    }
    if (actual.size() >= 2) {
        // The first measure cannot be forecast.
        const auto hits = std::count_if(actual.begin() + 1, actual.end(),
                                        [&](Millis t) { return has_neighbour(pred, t, kOnsetTolerance); });
        out.recall = 100.0 * static_cast<double>(hits) / static_cast<double>(actual.size() - 1);
    }
    return out;
}

TrialMetrics score_trace(const EstimateTrace& trace, std::span<const Millis> true_measure_onsets) {
    TrialMetrics m;
    if (!trace.empty()) {
        m.t_ac = tempo_accuracy(trace);
        m.m_ac = meter_accuracy(trace);
    }
    std::vector<Millis> predicted;
    predicted.reserve(trace.size());
    for (const auto& e : trace) {
        predicted.push_back(e.estimate.next_measure_onset);
    }
    const PrecisionRecall pr = onset_precision_recall(predicted, true_measure_onsets);
    m.precision = pr.precision;
    // Recall of an empty trace is 0 rather than undefined: no onset was forecast.
    m.recall = pr.recall;
    return m;
}

EstimateTrace trace_script(const PerformanceScript& script, const TrackerConfig& cfg) {
    const std::vector<TruthRecord> truth = script.event_truth();
    const auto onsets = script.events.onsets();
    const auto velocities = script.events.velocities();

    EstimateTrace trace;
    trace.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const Millis now = onsets[k];
        // Notes sharing this onset have also been played already.
        const auto end = static_cast<std::size_t>(
            std::upper_bound(onsets.begin(), onsets.end(), now) - onsets.begin());
        const NoteEventSet played(std::vector<Millis>(onsets.begin(), onsets.begin() + static_cast<std::ptrdiff_t>(end)),
                                  std::vector<double>(velocities.begin(),
                                                      velocities.begin() + static_cast<std::ptrdiff_t>(end)));
        try {
            trace.push_back({analyze(played, now, cfg), truth[k].beat, truth[k].meter, now});
        } catch (const InsufficientData&) {
            // warm-up
        }
    }
    return trace;
}

Stat summarize(std::span<const double> values) {
    Stat s;
    s.n = values.size();
    if (values.empty()) {
        return s;
    }
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

}  // namespace rhythm
