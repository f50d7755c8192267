#include <doctest.h>

#include <cmath>
#include <vector>

#include "rhythm/simulator.h"

using namespace rhythm;

namespace {

AccentTable all_ones() { return AccentTable{std::vector<double>(16, 1.0)}; }

}  // namespace

TEST_CASE("full table emits every 16th") {
    SimulationConfig cfg;
    cfg.accent_table = all_ones();
    cfg.steps = 32;
    const auto script = generate(cfg);
    REQUIRE(script.events.size() == 32);
    for (std::size_t i = 0; i < 32; ++i) {
        CHECK(script.events.onset(i) == 125.0 * static_cast<double>(i));
        CHECK(script.events.velocity(i) == 1.0);
    }
}

TEST_CASE("downbeats are always played") {
    SimulationConfig cfg;
    cfg.steps = 16 * 40;
    cfg.rng_seed = 77;
    const auto script = generate(cfg);
    for (double onset : script.measure_onsets()) {
        if (onset >= 16 * 40 * 125.0) {
            continue;  // closing record after the last step
        }
        bool found = false;
        for (std::size_t i = 0; i < script.events.size(); ++i) {
            found = found || (script.events.onset(i) == onset && script.events.velocity(i) == 1.0);
        }
        CHECK(found);
    }
}

TEST_CASE("seeded generation is deterministic") {
    SimulationConfig cfg;
    cfg.sigma_err = 10.0;
    cfg.rng_seed = 1234;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    CHECK(a.events == b.events);
    CHECK(a.truth == b.truth);
    cfg.rng_seed = 1235;
    CHECK(!(generate(cfg).events == a.events));
}

TEST_CASE("no change keeps tempo and meter") {
    SimulationConfig cfg;
    for (const auto& s : apply_schedule(cfg)) {
        CHECK(s.beat == 500.0);
        CHECK(s.meter == 4);
    }
}

TEST_CASE("sudden meter change spacing") {
    SimulationConfig cfg;
    cfg.steps = 16 * 5 + 12 * 4;
    cfg.schedule.kind = ChangeKind::sudden_meter;
    cfg.schedule.change_after_measures = 5;
    cfg.schedule.new_meter = 3;
    const auto onsets = generate(cfg).measure_onsets();
    REQUIRE(onsets.size() == 10);
    for (std::size_t i = 1; i < onsets.size(); ++i) {
        CHECK(onsets[i] - onsets[i - 1] == (i <= 5 ? 2000.0 : 1500.0));
    }
}

TEST_CASE("sudden tempo change") {
    SimulationConfig cfg;
    cfg.steps = 16 * 8;
    cfg.schedule.kind = ChangeKind::sudden_tempo;
    cfg.schedule.change_after_measures = 5;
    cfg.schedule.new_beat = 400.0;
    const auto states = apply_schedule(cfg);
    CHECK(states[16 * 5 - 1].beat == 500.0);
    CHECK(states[16 * 5].beat == 400.0);
    CHECK(states[16 * 5].grid_time == 10000.0);
    CHECK(states[16 * 5 + 1].grid_time == 10100.0);
}

TEST_CASE("tempo ramp ends 16 increments away") {
    for (double inc : {2.0, -2.0, 5.0, -5.0, 1.0}) {
        SimulationConfig cfg;
        cfg.schedule.kind = ChangeKind::tempo_ramp;
        cfg.schedule.change_after_measures = 2;
        cfg.schedule.ramp_increment = inc;
        const auto states = apply_schedule(cfg);
        CHECK(states.back().beat == 500.0 + 16.0 * inc);
        CHECK(states[16 * 2 - 1].beat == 500.0);
        CHECK(states[16 * 2].beat == 500.0 + inc);
    }
    SimulationConfig bad;
    bad.schedule.kind = ChangeKind::tempo_ramp;
    bad.schedule.ramp_increment = 6.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("clean onsets lie on the 16th grid") {
    SimulationConfig cfg;
    cfg.beat = 428.0;
    cfg.rng_seed = 9;
    const auto script = generate(cfg);
    for (double t : script.events.onsets()) {
        const double k = t / (cfg.beat / 4.0);
        CHECK(k == std::round(k));
    }
}

TEST_CASE("emission frequency follows the accent weights") {
    // Chi-square goodness of fit per position, 10000 measures, alpha = 0.01.
    SimulationConfig cfg;
    cfg.steps = 16 * 10000;
    cfg.rng_seed = 2024;
    const auto script = generate(cfg);
    const auto weights = default_accent_table(4).weights;
    std::vector<double> counts(16, 0.0);
    for (double t : script.events.onsets()) {
        const auto step = static_cast<std::size_t>(std::llround(t / 125.0));
        counts[step % 16] += 1.0;
    }
    double chi2 = 0.0;
    int dof = 0;
    for (std::size_t p = 0; p < 16; ++p) {
        const double w = weights[p];
        if (w >= 1.0) {
            CHECK(counts[p] == 10000.0);
            continue;
        }
        const double expected = 10000.0 * w;
        chi2 += (counts[p] - expected) * (counts[p] - expected) / (expected * (1.0 - w));
        ++dof;
    }
    REQUIRE(dof == 15);
    CHECK(chi2 < 30.578);  // chi-square(15) upper 1% point
}

TEST_CASE("jitter standard deviation") {
    for (double sigma : {5.0, 10.0, 20.0}) {
        SimulationConfig cfg;
        cfg.accent_table = all_ones();
        cfg.sigma_err = sigma;
        cfg.steps = 4000;
        cfg.rng_seed = 31;
        const auto script = generate(cfg);
        REQUIRE(script.events.size() == 4000);
        double sum = 0.0;
        double sq = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 1; i < script.events.size(); ++i) {  // the first note may be clamped at 0
            const double e = script.events.onset(i) - 125.0 * static_cast<double>(i);
            sum += e;
            sq += e * e;
            ++n;
        }
        const double mean = sum / static_cast<double>(n);
        const double sd = std::sqrt((sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
        CHECK(std::abs(sd - sigma) < 0.1 * sigma);
    }
}

TEST_CASE("jittered events stay sorted and non-negative") {
    SimulationConfig cfg;
    cfg.sigma_err = 25.0;
    cfg.rng_seed = 4;
    const auto script = generate(cfg);
    const auto t = script.events.onsets();
    CHECK(std::is_sorted(t.begin(), t.end()));
    CHECK(t.front() >= 0.0);
    CHECK(script.event_truth().size() == script.events.size());
}

TEST_CASE("accent tables") {
    CHECK(default_accent_table(4).has_metric_hierarchy());
    CHECK(default_accent_table(3).has_metric_hierarchy());
    CHECK(default_accent_table(3).meter() == 3);
    CHECK(!all_ones().has_metric_hierarchy());
    CHECK_THROWS_AS(default_accent_table(5), UnsupportedMeter);
    CHECK_THROWS_AS(AccentTable{std::vector<double>(10, 0.5)}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(AccentTable{std::vector<double>(16, 1.5)}.validate(), std::invalid_argument);

    SimulationConfig cfg;
    cfg.accent_table = default_accent_table(3);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
