#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rhythm/events.h"

namespace rhythm {

/// Per-16th-note importance table for one measure: 16 entries for 4/4, 12 for 3/4.
/// Each weight is both the probability of playing that position and the velocity used.
struct AccentTable {
    std::vector<double> weights;

    /// Beats per measure implied by the table length.
    int meter() const;
    /// Throws std::invalid_argument on a bad length or weights outside [0, 1].
    void validate() const;
    /// Downbeat is the maximum and every beat position outweighs every off-beat position.
    bool has_metric_hierarchy() const;
};

AccentTable default_accent_table(int meter);

enum class ChangeKind { none, sudden_tempo, sudden_meter, tempo_ramp };

struct ChangeSchedule {
    ChangeKind kind = ChangeKind::none;
    int change_after_measures = 5;
    /// sudden_tempo: new quarter-note beat in ms.
    Millis new_beat = 0.0;
    /// sudden_meter: meter after the change.
    int new_meter = 4;
    /// tempo_ramp: beat change per 16th note (may be negative), applied over one measure.
    Millis ramp_increment = 0.0;
    /// Table used after a meter change; defaults to default_accent_table(new_meter).
    std::optional<AccentTable> accent_after;
};

struct SimulationConfig {
    /// Quarter-note beat in ms; the grid advances by beat / 4 per step.
    Millis beat = 500.0;
    int meter = 4;
    Millis sigma_err = 0.0;
    std::size_t steps = 160;
    std::optional<AccentTable> accent_table;  // default_accent_table(meter) when empty
    ChangeSchedule schedule;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Effective state of one 16th-note step.
struct StepState {
    Millis grid_time = 0.0;
    Millis beat = 0.0;
    int meter = 4;
    int position = 0;  // 16th index inside the measure
    bool measure_onset = false;
};

/// Expands the schedule into one state per step (sudden changes land on the first 16th
/// of measure change_after_measures + 1; ramps run over that measure, then hold).
std::vector<StepState> apply_schedule(const SimulationConfig& cfg);

struct TruthRecord {
    Millis time = 0.0;
    Millis beat = 0.0;
    int meter = 4;
    bool measure_onset = false;

    bool operator==(const TruthRecord&) const = default;
};

struct PerformanceScript {
    NoteEventSet events;
    /// Sorted by time. Records with measure_onset == false correspond one-to-one, in order,
    /// with `events`; the others mark un-jittered measure starts.
    std::vector<TruthRecord> truth;

    std::vector<TruthRecord> event_truth() const;
    std::vector<Millis> measure_onsets() const;
};

PerformanceScript generate(const SimulationConfig& cfg);

}  // namespace rhythm
