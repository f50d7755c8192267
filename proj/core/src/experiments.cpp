#include "rhythm/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace rhythm {
namespace {

constexpr std::uint64_t kSteadyTempoId = 2;
constexpr std::uint64_t kSuddenChangeId = 3;
constexpr std::uint64_t kTempoRampId = 4;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

TrialMetrics run_trial(const SimulationConfig& sim, const TrackerConfig& tracker) {
    const PerformanceScript script = generate(sim);
    const EstimateTrace trace = trace_script(script, tracker);
    const std::vector<Millis> onsets = script.measure_onsets();
    return score_trace(trace, onsets);
}

Stat stat_of(const std::vector<TrialMetrics>& trials, std::optional<double> TrialMetrics::*field) {
    std::vector<double> values;
    values.reserve(trials.size());
    for (const auto& t : trials) {
        if (const auto& v = t.*field) {
            values.push_back(*v);
        }
    }
    return summarize(values);
}

const char* kind_name(ChangeKind kind) {
    switch (kind) {
        case ChangeKind::none: return "none";
        case ChangeKind::sudden_tempo: return "tempo";
        case ChangeKind::sudden_meter: return "meter";
        case ChangeKind::tempo_ramp: return "ramp";
    }
    return "?";
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t base, std::uint64_t experiment, std::uint64_t cell, std::uint64_t rep) {
    return splitmix64(splitmix64(splitmix64(splitmix64(base) ^ experiment) ^ cell) ^ rep);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            job(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ReportRow pool_trials(std::vector<std::pair<std::string, std::string>> labels,
                      const std::vector<TrialMetrics>& trials) {
    ReportRow row;
    row.labels = std::move(labels);
    row.metrics = {
        {"t_ac", stat_of(trials, &TrialMetrics::t_ac)},
        {"m_ac", stat_of(trials, &TrialMetrics::m_ac)},
        {"precision", stat_of(trials, &TrialMetrics::precision)},
        {"recall", stat_of(trials, &TrialMetrics::recall)},
    };
    return row;
}

// ---------------------------------------------------------------------------
// Latency

NoteEventSet regular_rhythm(std::size_t notes, Millis window) {
    std::vector<Millis> t;
    std::vector<double> v;
    const Millis spacing = window / static_cast<double>(notes);
    for (std::size_t i = 0; i < notes; ++i) {
        t.push_back(static_cast<double>(i) * spacing);
        v.push_back(1.0);
    }
    return NoteEventSet(std::move(t), std::move(v));
}

std::vector<LatencyRow> run_latency_experiment(const LatencyOptions& opts) {
    TrackerConfig cfg = opts.tracker;
    cfg.max_notes = 0;

    std::vector<LatencyRow> rows;
    for (std::size_t notes : opts.note_counts) {
        const NoteEventSet events = regular_rhythm(notes, cfg.window);
        LatencyRow row;
        row.notes = notes;
        row.samples_ms.reserve(opts.reps);
        for (std::size_t r = 0; r < opts.reps; ++r) {
            const auto start = std::chrono::steady_clock::now();
            const RhythmEstimate est = analyze(events, cfg.window, cfg);
            const auto stop = std::chrono::steady_clock::now();
            // Keep the result observable so the call cannot be elided.
            if (est.note_count != notes) {
                throw std::logic_error("latency probe analysed an unexpected note count");
            }
            row.samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        }
        row.stat = summarize(row.samples_ms);
        rows.push_back(std::move(row));
    }
    return rows;
}

MetricsReport latency_report(const std::vector<LatencyRow>& rows) {
    MetricsReport report{"latency", {}};
    for (const auto& row : rows) {
        const double pct = row.stat.mean > 0.0 ? 100.0 * row.stat.sd / row.stat.mean : 0.0;
        report.rows.push_back({{{"notes", std::to_string(row.notes)}},
                               {{"latency_ms", row.stat}, {"pct_sd", Stat{pct, 0.0, row.stat.n}}}});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Steady tempo

SteadyTempoResult run_steady_tempo_experiment(const SteadyTempoOptions& opts) {
    SteadyTempoResult result;
    for (Millis beat : opts.beats) {
        for (Millis sigma : opts.sigmas) {
            result.cells.push_back({beat, sigma, std::vector<TrialMetrics>(opts.reps)});
        }
    }

    const std::size_t jobs = result.cells.size() * opts.reps;
    parallel_for(jobs, opts.threads, [&](std::size_t job) {
        const std::size_t c = job / opts.reps;
        const std::size_t rep = job % opts.reps;
        SteadyTempoCell& cell = result.cells[c];
        SimulationConfig sim;
        sim.beat = cell.beat;
        sim.meter = 4;
        sim.sigma_err = cell.sigma;
        sim.steps = opts.steps;
        sim.rng_seed = cell_seed(opts.seed, kSteadyTempoId, c, rep);
        cell.trials[rep] = run_trial(sim, opts.tracker);
    });
    return result;
}

MetricsReport SteadyTempoResult::by_sigma() const {
    MetricsReport report{"steady_tempo_by_sigma", {}};
    std::vector<Millis> sigmas;
    for (const auto& c : cells) {
        if (std::find(sigmas.begin(), sigmas.end(), c.sigma) == sigmas.end()) {
            sigmas.push_back(c.sigma);
        }
    }
    for (Millis s : sigmas) {
        std::vector<TrialMetrics> pooled;
        for (const auto& c : cells) {
            if (c.sigma == s) {
                pooled.insert(pooled.end(), c.trials.begin(), c.trials.end());
            }
        }
        report.rows.push_back(pool_trials({{"sigma_err", format_number(s)}}, pooled));
    }
    return report;
}

MetricsReport SteadyTempoResult::by_tempo() const {
    MetricsReport report{"steady_tempo_by_tempo", {}};
    std::vector<Millis> beats;
    for (const auto& c : cells) {
        if (std::find(beats.begin(), beats.end(), c.beat) == beats.end()) {
            beats.push_back(c.beat);
        }
    }
    for (Millis b : beats) {
        std::vector<TrialMetrics> pooled;
        for (const auto& c : cells) {
            if (c.beat == b) {
                pooled.insert(pooled.end(), c.trials.begin(), c.trials.end());
            }
        }
        report.rows.push_back(
            pool_trials({{"beat_ms", format_number(b)}, {"bpm", format_number(std::round(60000.0 / b))}}, pooled));
    }
    return report;
}

MetricsReport SteadyTempoResult::by_cell() const {
    MetricsReport report{"steady_tempo", {}};
    for (const auto& c : cells) {
        report.rows.push_back(
            pool_trials({{"beat_ms", format_number(c.beat)}, {"sigma_err", format_number(c.sigma)}}, c.trials));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sudden changes

std::vector<AdaptationCase> meter_change_cases() {
    std::vector<AdaptationCase> out;
    for (auto [from, to] : {std::pair{4, 3}, std::pair{3, 4}}) {
        for (Millis beat : {375.0, 500.0, 750.0}) {
            out.push_back({ChangeKind::sudden_meter, beat, from, to, 0.0});
        }
    }
    return out;
}

std::vector<AdaptationCase> tempo_change_cases() {
    std::vector<AdaptationCase> out;
    for (Millis delta : {-50.0, 50.0, -100.0, 100.0, -150.0, 150.0, -200.0, 200.0}) {
        out.push_back({ChangeKind::sudden_tempo, 500.0, 4, 4, delta});
    }
    return out;
}

std::optional<Millis> adaptation_time(const EstimateTrace& trace, Millis change_time,
                                      const std::function<bool(const TraceEntry&)>& correct, std::size_t hits) {
    std::size_t seen = 0;
    for (const auto& e : trace) {
        if (e.time < change_time || !correct(e)) {
            continue;
        }
        if (++seen == hits) {
            return e.time - change_time;
        }
    }
    return std::nullopt;
}

std::vector<AdaptationRow> run_sudden_change_experiment(const SuddenChangeOptions& opts) {
    std::vector<AdaptationRow> rows;
    for (const auto& c : opts.cases) {
        rows.push_back({c, std::vector<double>(opts.reps), std::vector<double>(opts.reps), 0});
    }
    std::vector<char> adapted(opts.cases.size() * opts.reps, 0);

    parallel_for(adapted.size(), opts.threads, [&](std::size_t job) {
        const std::size_t c = job / opts.reps;
        const std::size_t rep = job % opts.reps;
        const AdaptationCase& change = opts.cases[c];
        const int new_meter = change.kind == ChangeKind::sudden_meter ? change.to_meter : change.from_meter;
        const Millis new_beat = change.kind == ChangeKind::sudden_tempo ? change.beat + change.delta_beat : change.beat;

        if (change.kind == ChangeKind::none) {
            rows[c].times_ms[rep] = 0.0;
            rows[c].measures[rep] = 0.0;
            adapted[job] = 1;
            return;
        }

        SimulationConfig sim;
        sim.beat = change.beat;
        sim.meter = change.from_meter;
        sim.sigma_err = opts.sigma_err;
        sim.steps = static_cast<std::size_t>(4 * change.from_meter * opts.measures_before +
                                             4 * new_meter * opts.measures_after);
        sim.schedule.kind = change.kind;
        sim.schedule.change_after_measures = opts.measures_before;
        sim.schedule.new_beat = new_beat;
        sim.schedule.new_meter = new_meter;
        sim.rng_seed = cell_seed(opts.seed, kSuddenChangeId, c, rep);

        const auto states = apply_schedule(sim);
        const Millis change_time = states[static_cast<std::size_t>(4 * change.from_meter * opts.measures_before)].grid_time;
        const EstimateTrace trace = trace_script(generate(sim), opts.tracker);

        std::function<bool(const TraceEntry&)> correct;
        if (change.kind == ChangeKind::sudden_meter) {
            correct = [&](const TraceEntry& e) { return e.estimate.meter_estimate.meter == new_meter; };
        } else {
            correct = [&](const TraceEntry& e) { return tempo_score(e.estimate.beat_estimate.beat, new_beat) == 100; };
        }
        if (const auto t = adaptation_time(trace, change_time, correct)) {
            rows[c].times_ms[rep] = *t;
            rows[c].measures[rep] = *t / (new_beat * new_meter);
            adapted[job] = 1;
        }
    });

    for (std::size_t c = 0; c < rows.size(); ++c) {
        std::vector<double> times;
        std::vector<double> measures;
        for (std::size_t rep = 0; rep < opts.reps; ++rep) {
            if (adapted[c * opts.reps + rep]) {
                times.push_back(rows[c].times_ms[rep]);
                measures.push_back(rows[c].measures[rep]);
            } else {
                ++rows[c].not_adapted;
            }
        }
        rows[c].times_ms = std::move(times);
        rows[c].measures = std::move(measures);
    }
    return rows;
}

MetricsReport adaptation_report(const std::vector<AdaptationRow>& rows) {
    MetricsReport report{"sudden_change", {}};
    for (const auto& row : rows) {
        const AdaptationCase& c = row.change;
        std::vector<std::pair<std::string, std::string>> labels{{"kind", kind_name(c.kind)},
                                                                {"beat_ms", format_number(c.beat)}};
        if (c.kind == ChangeKind::sudden_meter) {
            labels.emplace_back("from_meter", std::to_string(c.from_meter));
            labels.emplace_back("to_meter", std::to_string(c.to_meter));
        } else {
            labels.emplace_back("delta_beat_ms", format_number(c.delta_beat));
        }
        const std::size_t total = row.times_ms.size() + row.not_adapted;
        report.rows.push_back({std::move(labels),
                               {{"adaptation_ms", summarize(row.times_ms)},
                                {"adaptation_measures", summarize(row.measures)},
                                {"not_adapted", Stat{static_cast<double>(row.not_adapted), 0.0, total}}}});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Gradual tempo change

std::vector<TempoRampRow> run_tempo_ramp_experiment(const TempoRampOptions& opts) {
    std::vector<TempoRampRow> rows;
    for (int inc : opts.increments) {
        rows.push_back({inc, std::vector<TrialMetrics>(2 * opts.reps)});
    }

    const std::size_t per_row = 2 * opts.reps;
    parallel_for(rows.size() * per_row, opts.threads, [&](std::size_t job) {
        const std::size_t r = job / per_row;
        const std::size_t trial = job % per_row;
        const int inc = rows[r].increment;
        const bool down = trial >= opts.reps;

        SimulationConfig sim;
        sim.beat = opts.beat;
        sim.meter = 4;
        sim.sigma_err = opts.sigma_err;
        sim.steps = opts.steps;
        sim.rng_seed = cell_seed(opts.seed, kTempoRampId, r, trial);
        if (inc != 0) {
            sim.schedule.kind = ChangeKind::tempo_ramp;
            sim.schedule.change_after_measures = 5;
            sim.schedule.ramp_increment = down ? -inc : inc;
        }
        rows[r].trials[trial] = run_trial(sim, opts.tracker);
    });
    return rows;
}

MetricsReport tempo_ramp_report(const std::vector<TempoRampRow>& rows) {
    MetricsReport report{"tempo_ramp", {}};
    for (const auto& row : rows) {
        report.rows.push_back(pool_trials({{"step_ms", std::to_string(row.increment)}}, row.trials));
    }
    return report;
}

}  // namespace rhythm
