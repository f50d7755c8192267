#pragma once

// Simulation-driven evaluation harness: real-time latency, steady-tempo accuracy,
// adaptation to sudden changes, and gradual tempo ramps.
//
// Every (cell, repetition) owns a random source seeded from the run seed and its
// own indices, so results are independent of the worker count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rhythm/metrics.h"
#include "rhythm/report.h"
#include "rhythm/simulator.h"
#include "rhythm/tracker.h"

namespace rhythm {

/// Deterministic seed for one repetition of one cell.
std::uint64_t cell_seed(std::uint64_t base, std::uint64_t experiment, std::uint64_t cell, std::uint64_t rep);

/// Runs job(0..count-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

// ---------------------------------------------------------------------------
// Latency

struct LatencyOptions {
    std::vector<std::size_t> note_counts{30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80};
    std::size_t reps = 50;
    /// max_notes is ignored (forced to unlimited) so the requested count is analysed.
    TrackerConfig tracker;
};

struct LatencyRow {
    std::size_t notes = 0;
    std::vector<double> samples_ms;
    Stat stat;
};

/// Evenly spaced unit-velocity notes filling one window, queried at the window end.
NoteEventSet regular_rhythm(std::size_t notes, Millis window);

std::vector<LatencyRow> run_latency_experiment(const LatencyOptions& opts);
MetricsReport latency_report(const std::vector<LatencyRow>& rows);

// ---------------------------------------------------------------------------
// Steady tempo

struct SteadyTempoOptions {
    std::vector<Millis> beats{1000, 750, 600, 500, 428, 375, 333, 300};
    std::vector<Millis> sigmas{0, 2.5, 5, 7.5, 10, 15, 20, 25};
    std::size_t reps = 50;
    std::size_t steps = 160;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    TrackerConfig tracker;
};

struct SteadyTempoCell {
    Millis beat = 0.0;
    Millis sigma = 0.0;
    std::vector<TrialMetrics> trials;
};

struct SteadyTempoResult {
    std::vector<SteadyTempoCell> cells;

    /// One row per sigma_err, pooled over tempos.
    MetricsReport by_sigma() const;
    /// One row per tempo, pooled over sigma_err.
    MetricsReport by_tempo() const;
    /// One row per (tempo, sigma_err) cell.
    MetricsReport by_cell() const;
};

SteadyTempoResult run_steady_tempo_experiment(const SteadyTempoOptions& opts);

// ---------------------------------------------------------------------------
// Sudden changes

inline constexpr std::size_t kAdaptationHits = 10;

struct AdaptationCase {
    ChangeKind kind = ChangeKind::sudden_meter;
    Millis beat = 500.0;
    int from_meter = 4;
    int to_meter = 3;
    /// sudden_tempo: added to the beat at the change.
    Millis delta_beat = 0.0;
};

struct SuddenChangeOptions {
    std::vector<AdaptationCase> cases;
    std::size_t reps = 50;
    Millis sigma_err = 10.0;
    int measures_before = 5;
    int measures_after = 12;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    TrackerConfig tracker;
};

std::vector<AdaptationCase> meter_change_cases();
std::vector<AdaptationCase> tempo_change_cases();

struct AdaptationRow {
    AdaptationCase change;
    std::vector<double> times_ms;
    std::vector<double> measures;
    std::size_t not_adapted = 0;
};

/// Time from `change_time` until `correct` has held for kAdaptationHits estimates (not
/// necessarily consecutive) taken at or after it. Empty if that never happens.
std::optional<Millis> adaptation_time(const EstimateTrace& trace, Millis change_time,
                                      const std::function<bool(const TraceEntry&)>& correct,
                                      std::size_t hits = kAdaptationHits);

std::vector<AdaptationRow> run_sudden_change_experiment(const SuddenChangeOptions& opts);
MetricsReport adaptation_report(const std::vector<AdaptationRow>& rows);

// ---------------------------------------------------------------------------
// Gradual tempo change

struct TempoRampOptions {
    std::vector<int> increments{0, 1, 2, 3, 4, 5};
    /// Per direction; the unchanged baseline runs 2 * reps trials.
    std::size_t reps = 50;
    Millis beat = 500.0;
    Millis sigma_err = 10.0;
    std::size_t steps = 160;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    TrackerConfig tracker;
};

struct TempoRampRow {
    int increment = 0;
    std::vector<TrialMetrics> trials;  // up and down pooled
};

std::vector<TempoRampRow> run_tempo_ramp_experiment(const TempoRampOptions& opts);
MetricsReport tempo_ramp_report(const std::vector<TempoRampRow>& rows);

/// Pools trial metrics into one report row (skipping undefined values per metric).
ReportRow pool_trials(std::vector<std::pair<std::string, std::string>> labels,
                      const std::vector<TrialMetrics>& trials);

}  // namespace rhythm
