#pragma once

#include <cstddef>

#include "rhythm/events.h"
#include "rhythm/kernels.h"

namespace rhythm {

struct TrackerConfig {
    KernelConfig kernel;
    Millis window = 6000.0;
    Millis min_lag = 100.0;
    Millis max_lag = 2000.0;
    Millis lag_step = 1.0;
    Millis phase_step = 1.0;
    /// Keep only the most recent notes of the window; 0 disables the limit.
    std::size_t max_notes = 60;

    void validate() const;
};

struct BeatEstimate {
    Millis beat = 0.0;
    double bpm = 0.0;
    /// Normalized autocorrelation at the chosen lag, before salience weighting.
    double clarity = 0.0;

    bool operator==(const BeatEstimate&) const = default;
};

struct MeterEstimate {
    int meter = 4;
    /// Offset inside the window where a measure starts.
    Millis phase = 0.0;

    bool operator==(const MeterEstimate&) const = default;
};

struct RhythmEstimate {
    BeatEstimate beat_estimate;
    MeterEstimate meter_estimate;
    Millis measure = 0.0;
    Millis next_measure_onset = 0.0;
    std::size_t note_count = 0;
    Millis analyzed_at = 0.0;

    bool operator==(const RhythmEstimate&) const = default;
};

/// Drops notes older than `current_time - window` and rebases the survivors
/// so that the window starts at 0.
NoteEventSet trim_window(const NoteEventSet& events, Millis current_time, Millis window);

/// Keeps the `max_notes` most recent notes (0 = keep all).
NoteEventSet keep_most_recent(const NoteEventSet& events, std::size_t max_notes);

/// Beat duration and clarity from a windowed, rebased rhythm.
/// Throws InsufficientData for fewer than two notes.
BeatEstimate estimate_beat(const NoteEventSet& events, const TrackerConfig& cfg);

/// Nine-point accent prototype: onsets i * beat, velocity 1 on downbeats and 0.1 elsewhere.
NoteEventSet generate_prototype(int meter, Millis beat);

/// Chooses 3/4 or 4/4 by sliding both prototypes over the window; ties go to 4/4.
MeterEstimate estimate_meter(const NoteEventSet& events, Millis beat, const TrackerConfig& cfg);

/// Start of the first measure beyond the window; always in (current_time, current_time + measure].
Millis predict_next_measure_onset(Millis current_time, Millis window, Millis phase, Millis beat,
                                  int meter);

/// Full snapshot analysis. `current_time` is taken as frozen for the whole call.
RhythmEstimate analyze(const NoteEventSet& events, Millis current_time, const TrackerConfig& cfg);

}  // namespace rhythm
