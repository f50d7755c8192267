#include "rhythm/tracker.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rhythm {
namespace {

constexpr int kPrototypePoints = 9;
constexpr double kWeakVelocity = 0.1;

// First index of the maximum; earlier entries win ties.
std::size_t first_argmax(const std::vector<double>& values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

void TrackerConfig::validate() const {
    kernel.validate();
    if (!(min_lag > 0.0) || !(min_lag < max_lag) || !(max_lag <= window)) {
        throw std::invalid_argument("lag bounds must satisfy 0 < min_lag < max_lag <= window");
    }
    if (!(lag_step >= 1.0) || !(phase_step >= 1.0)) {
        throw std::invalid_argument("lag_step and phase_step must be at least 1 ms");
    }
}

NoteEventSet trim_window(const NoteEventSet& events, Millis current_time, Millis window) {
    const Millis start = current_time - window;
    const auto onsets = events.onsets();
    const auto first = static_cast<std::size_t>(
        std::lower_bound(onsets.begin(), onsets.end(), start) - onsets.begin());

    std::vector<Millis> t;
    std::vector<double> v;
    t.reserve(events.size() - first);
    v.reserve(events.size() - first);
    for (std::size_t i = first; i < events.size(); ++i) {
        t.push_back(onsets[i] - start);
        v.push_back(events.velocity(i));
    }
    return NoteEventSet(std::move(t), std::move(v));
}

NoteEventSet keep_most_recent(const NoteEventSet& events, std::size_t max_notes) {
    if (max_notes == 0 || events.size() <= max_notes) {
        return events;
    }
    const std::size_t drop = events.size() - max_notes;
    const auto onsets = events.onsets();
    const auto velocities = events.velocities();
    return NoteEventSet(std::vector<Millis>(onsets.begin() + static_cast<std::ptrdiff_t>(drop), onsets.end()),
                        std::vector<double>(velocities.begin() + static_cast<std::ptrdiff_t>(drop),
                                            velocities.end()));
}

BeatEstimate estimate_beat(const NoteEventSet& events, const TrackerConfig& cfg) {
    cfg.validate();
    if (events.size() < 2) {
        throw InsufficientData("beat estimation needs at least two notes, got " +
                               std::to_string(events.size()));
    }

    const double norm = autocorrelation(events, 0.0, cfg.kernel);
    const LagGrid lags{cfg.min_lag, cfg.max_lag, cfg.lag_step};
    std::vector<double> scores = autocorrelation_curve(events, lags, cfg.kernel);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k] = scores[k] / norm * parncutt_salience(lags.at(k), cfg.kernel);
    }

    const std::size_t best = first_argmax(scores);
    BeatEstimate out;
    out.beat = lags.at(best);
    out.bpm = 60000.0 / out.beat;
    out.clarity = scores[best] / parncutt_salience(out.beat, cfg.kernel);
    return out;
}

NoteEventSet generate_prototype(int meter, Millis beat) {
    if (meter != 3 && meter != 4) {
        throw UnsupportedMeter(meter);
    }
    if (!(beat > 0.0)) {
        throw std::invalid_argument("prototype beat must be positive");
    }
    std::vector<Millis> t;
    std::vector<double> v;
    for (int i = 0; i < kPrototypePoints; ++i) {
        t.push_back(i * beat);
        v.push_back(i % meter == 0 ? 1.0 : kWeakVelocity);
    }
    return NoteEventSet(std::move(t), std::move(v));
}

MeterEstimate estimate_meter(const NoteEventSet& events, Millis beat, const TrackerConfig& cfg) {
    cfg.validate();
    if (events.empty()) {
        throw InsufficientData("meter estimation needs at least one note");
    }

    const LagGrid shifts{0.0, cfg.window, cfg.phase_step};
    const auto corr3 = correlation_curve(events, generate_prototype(3, beat), shifts, cfg.kernel);
    const auto corr4 = correlation_curve(events, generate_prototype(4, beat), shifts, cfg.kernel);
    const std::size_t best3 = first_argmax(corr3);
    const std::size_t best4 = first_argmax(corr4);

    MeterEstimate out;
    if (corr3[best3] > corr4[best4]) {
        out.meter = 3;
        out.phase = shifts.at(best3);
    } else {
        out.meter = 4;
        out.phase = shifts.at(best4);
    }
    return out;
}

Millis predict_next_measure_onset(Millis current_time, Millis window, Millis phase, Millis beat,
                                  int meter) {
    if (meter != 3 && meter != 4) {
        throw UnsupportedMeter(meter);
    }
    if (!(beat > 0.0)) {
        throw std::invalid_argument("beat must be positive");
    }
    const Millis measure = beat * meter;
    Millis remainder = std::fmod(window - phase, measure);
    if (remainder < 0.0) {
        remainder += measure;
    }
    return current_time + (measure - remainder);
}

RhythmEstimate analyze(const NoteEventSet& events, const Millis current_time, const TrackerConfig& cfg) {
    cfg.validate();
    if (!events.empty() && events.onsets().back() > current_time) {
        throw std::invalid_argument("analysis time precedes the latest note");
    }

    const NoteEventSet window = keep_most_recent(trim_window(events, current_time, cfg.window), cfg.max_notes);

    RhythmEstimate out;
    out.note_count = window.size();
    out.analyzed_at = current_time;
    out.beat_estimate = estimate_beat(window, cfg);
    out.meter_estimate = estimate_meter(window, out.beat_estimate.beat, cfg);
    out.measure = out.beat_estimate.beat * out.meter_estimate.meter;
    out.next_measure_onset = predict_next_measure_onset(current_time, cfg.window, out.meter_estimate.phase,
                                                        out.beat_estimate.beat, out.meter_estimate.meter);
    return out;
}

}  // namespace rhythm
