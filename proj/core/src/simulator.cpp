#include "rhythm/simulator.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rhythm {

int AccentTable::meter() const {
    switch (weights.size()) {
        case 16: return 4;
        case 12: return 3;
        default: throw std::invalid_argument("accent table must have 12 (3/4) or 16 (4/4) entries");
    }
}

void AccentTable::validate() const {
    (void)meter();
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw std::invalid_argument("accent weights must lie in [0, 1]");
        }
    }
}

bool AccentTable::has_metric_hierarchy() const {
    if (weights.empty()) {
        return false;
    }
    const double downbeat = weights.front();
    double weakest_beat = downbeat;
    double strongest_offbeat = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > downbeat) {
            return false;
        }
        if (i % 4 == 0) {
            weakest_beat = std::min(weakest_beat, weights[i]);
        } else {
            strongest_offbeat = std::max(strongest_offbeat, weights[i]);
        }
    }
    return weakest_beat > strongest_offbeat;
}

AccentTable default_accent_table(int meter) {
    switch (meter) {
        case 4:
            return {{1.0, 0.1, 0.2, 0.1, 0.5, 0.1, 0.2, 0.1, 0.7, 0.1, 0.2, 0.1, 0.5, 0.1, 0.2, 0.1}};
        case 3:
            return {{1.0, 0.1, 0.2, 0.1, 0.5, 0.1, 0.2, 0.1, 0.5, 0.1, 0.2, 0.1}};
        default:
            throw UnsupportedMeter(meter);
    }
}

void SimulationConfig::validate() const {
    if (!(beat > 0.0)) {
        throw std::invalid_argument("simulation beat must be positive");
    }
    if (meter != 3 && meter != 4) {
        throw UnsupportedMeter(meter);
    }
    if (!(sigma_err >= 0.0)) {
        throw std::invalid_argument("sigma_err must be non-negative");
    }
    if (accent_table) {
        accent_table->validate();
        if (accent_table->meter() != meter) {
            throw std::invalid_argument("accent table length does not match the meter");
        }
    }
    switch (schedule.kind) {
        case ChangeKind::none:
            break;
        case ChangeKind::sudden_tempo:
            if (!(schedule.new_beat > 0.0)) {
                throw std::invalid_argument("sudden tempo change needs a positive new beat");
            }
            break;
        case ChangeKind::sudden_meter:
            if (schedule.new_meter != 3 && schedule.new_meter != 4) {
                throw UnsupportedMeter(schedule.new_meter);
            }
            if (schedule.accent_after) {
                schedule.accent_after->validate();
                if (schedule.accent_after->meter() != schedule.new_meter) {
                    throw std::invalid_argument("post-change accent table does not match the new meter");
                }
            }
            break;
        case ChangeKind::tempo_ramp: {
            const double step = std::abs(schedule.ramp_increment);
            if (step < 1.0 || step > 5.0) {
                throw std::invalid_argument("tempo ramp increment must be within 1..5 ms per 16th");
            }
            if (!(beat + 4.0 * meter * schedule.ramp_increment > 0.0)) {
                throw std::invalid_argument("tempo ramp would reach a non-positive beat");
            }
            break;
        }
    }
    if (schedule.change_after_measures < 0) {
        throw std::invalid_argument("change_after_measures must be non-negative");
    }
}

std::vector<StepState> apply_schedule(const SimulationConfig& cfg) {
    cfg.validate();
    const ChangeSchedule& sched = cfg.schedule;

    std::vector<StepState> states;
    states.reserve(cfg.steps);
    Millis beat = cfg.beat;
    int meter = cfg.meter;
    int position = 0;
    int measure_index = 0;
    Millis time = 0.0;

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const bool changing = measure_index == sched.change_after_measures;
        if (changing && position == 0) {
            if (sched.kind == ChangeKind::sudden_tempo) {
                beat = sched.new_beat;
            } else if (sched.kind == ChangeKind::sudden_meter) {
                meter = sched.new_meter;
            }
        }
        if (changing && sched.kind == ChangeKind::tempo_ramp) {
            beat += sched.ramp_increment;
        }

        states.push_back({time, beat, meter, position, position == 0});
        time += beat / 4.0;
        if (++position == 4 * meter) {
            position = 0;
            ++measure_index;
        }
    }
    return states;
}

std::vector<TruthRecord> PerformanceScript::event_truth() const {
    std::vector<TruthRecord> out;
    out.reserve(events.size());
    for (const auto& r : truth) {
        if (!r.measure_onset) {
            out.push_back(r);
        }
    }
    return out;
}

std::vector<Millis> PerformanceScript::measure_onsets() const {
    std::vector<Millis> out;
    for (const auto& r : truth) {
        if (r.measure_onset) {
            out.push_back(r.time);
        }
    }
    return out;
}

PerformanceScript generate(const SimulationConfig& cfg) {
    const std::vector<StepState> states = apply_schedule(cfg);
    const AccentTable initial = cfg.accent_table.value_or(default_accent_table(cfg.meter));
    const AccentTable after = cfg.schedule.accent_after.value_or(
        cfg.schedule.kind == ChangeKind::sudden_meter ? default_accent_table(cfg.schedule.new_meter) : initial);

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, cfg.sigma_err > 0.0 ? cfg.sigma_err : 1.0);

    // Velocity rides along with each record so it survives the re-sort after jitter.
    struct Emission {
        TruthRecord record;
        double velocity = 0.0;
    };
    std::vector<Emission> emissions;
    emissions.reserve(states.size() + states.size() / 4 + 1);
    for (const StepState& s : states) {
        const AccentTable& table = s.meter == cfg.meter ? initial : after;
        if (s.measure_onset) {
            emissions.push_back({{s.grid_time, s.beat, s.meter, true}, 0.0});
        }
        const double importance = table.weights[static_cast<std::size_t>(s.position)];
        if (coin(rng) < importance) {
            Millis t = s.grid_time;
            if (cfg.sigma_err > 0.0) {
                t += jitter(rng);
            }
            emissions.push_back({{std::max(0.0, t), s.beat, s.meter, false}, importance});
        }
    }
    if (!states.empty()) {
        const StepState& last = states.back();
        if (last.position + 1 == 4 * last.meter) {
            emissions.push_back({{last.grid_time + last.beat / 4.0, last.beat, last.meter, true}, 0.0});
        }
    }

    std::stable_sort(emissions.begin(), emissions.end(),
                     [](const Emission& a, const Emission& b) { return a.record.time < b.record.time; });

    PerformanceScript script;
    std::vector<Millis> onsets;
    std::vector<double> velocities;
    script.truth.reserve(emissions.size());
    for (const Emission& e : emissions) {
        script.truth.push_back(e.record);
        if (!e.record.measure_onset) {
            onsets.push_back(e.record.time);
            velocities.push_back(e.velocity);
        }
    }
    script.events = NoteEventSet(std::move(onsets), std::move(velocities));
    return script;
}

}  // namespace rhythm
