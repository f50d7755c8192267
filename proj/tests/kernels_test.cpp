#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.h"
#include "rhythm/kernels.h"

using namespace rhythm;

namespace {

NoteEventSet to_events(const oracle::Rhythm& r) { return NoteEventSet(r.t, r.v); }

}  // namespace

TEST_CASE("note event set sorts and clamps") {
    NoteEventSet e({300.0, 100.0, 200.0}, {0.3, 7.0, -1.0});
    CHECK(e.onsets()[0] == 100.0);
    CHECK(e.onsets()[2] == 300.0);
    CHECK(e.velocities()[0] == 1.0);
    CHECK(e.velocities()[1] == kMinVelocity);
    CHECK(e.velocities()[2] == 0.3);
    CHECK(e.clamped_count() == 2);

    CHECK_THROWS_AS(NoteEventSet({1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(NoteEventSet({NAN}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(NoteEventSet({1.0}, {INFINITY}), std::invalid_argument);
}

TEST_CASE("gaussification examples") {
    const KernelConfig cfg;
    const NoteEventSet one({100.0}, {0.8});
    CHECK(gaussify_eval(one, 100.0, cfg) == 0.8);
    CHECK(gaussify_eval(NoteEventSet{}, 42.0, cfg) == 0.0);
    CHECK(gaussify_eval(one, 125.0, cfg) == doctest::Approx(0.48522452777010674).epsilon(1e-14));
}

TEST_CASE("correlation examples") {
    const KernelConfig cfg;
    const NoteEventSet a({0.0}, {0.6});
    CHECK(correlation(a, a, 0.0, cfg) == doctest::Approx(0.36).epsilon(1e-15));

    const NoteEventSet x({0.0}, {1.0});
    const NoteEventSet y({500.0}, {1.0});
    CHECK(std::abs(correlation(x, y, -500.0, cfg) - 1.0) < 1e-12);

    const NoteEventSet two({0.0, 500.0}, {1.0, 1.0});
    CHECK(correlation(two, two, 0.0, cfg) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("autocorrelation examples") {
    const KernelConfig cfg;
    CHECK(autocorrelation(NoteEventSet({0.0}, {1.0}), 0.0, cfg) == 1.0);
    CHECK(autocorrelation(NoteEventSet({0.0, 500.0}, {1.0, 1.0}), 500.0, cfg) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(autocorrelation(NoteEventSet({0.0, 500.0, 1000.0}, {1.0, 1.0, 1.0}), 500.0, cfg) ==
          doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("salience examples") {
    const KernelConfig cfg;
    CHECK(parncutt_salience(500.0, cfg) == 1.0);
    CHECK(std::abs(parncutt_salience(250.0, cfg) - std::exp(-2.0)) < 1e-12);
    CHECK(std::abs(parncutt_salience(1000.0, cfg) - std::exp(-2.0)) < 1e-12);
    CHECK(parncutt_salience(250.0, cfg) == parncutt_salience(1000.0, cfg));
    // Direct high-precision evaluation of exp(-2 log2^2(1.5)).
    CHECK(parncutt_salience(750.0, cfg) == doctest::Approx(0.5044118133837966).epsilon(1e-14));
    CHECK_THROWS_AS(parncutt_salience(0.0, cfg), std::domain_error);
    CHECK_THROWS_AS(parncutt_salience(-3.0, cfg), std::domain_error);
}

TEST_CASE("lag grid is inclusive") {
    CHECK(LagGrid{100.0, 2000.0, 1.0}.size() == 1901);
    CHECK(LagGrid{0.0, 6000.0, 1.0}.size() == 6001);
    CHECK(LagGrid{0.0, 10.0, 3.0}.size() == 4);
    CHECK(LagGrid{5.0, 4.0, 1.0}.size() == 0);
}

TEST_CASE("peak property on isolated points") {
    std::mt19937_64 rng(11);
    const KernelConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = oracle::random_rhythm(rng, 1 + trial % 12, 20000.0, 8.5 * cfg.sigma);
        const auto events = to_events(r);
        for (std::size_t k = 0; k < events.size(); ++k) {
            CHECK(std::abs(gaussify_eval(events, events.onset(k), cfg) - events.velocity(k)) < 1e-9);
        }
    }
}

TEST_CASE("banded correlation matches the full double sum") {
    std::mt19937_64 rng(12);
    const KernelConfig cfg;
    std::uniform_real_distribution<double> lag(-3000.0, 3000.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ra = oracle::random_rhythm(rng, 1 + trial % 20, 6000.0, 0.0);
        const auto rb = oracle::random_rhythm(rng, 1 + trial % 9, 6000.0, 0.0);
        const auto a = to_events(ra);
        const auto b = to_events(rb);
        for (int k = 0; k < 20; ++k) {
            const double t = lag(rng);
            const double expected = oracle::correlation(ra, rb, t, cfg.sigma);
            CHECK(std::abs(correlation(a, b, t, cfg) - expected) <= 1e-12 * std::max(1.0, expected));
        }
    }
}

TEST_CASE("correlation curve matches pointwise evaluation") {
    std::mt19937_64 rng(13);
    const KernelConfig cfg;
    const LagGrid grid{-700.0, 2300.0, 1.0};
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = to_events(oracle::random_rhythm(rng, 25, 6000.0, 0.0));
        const auto b = to_events(oracle::random_rhythm(rng, 9, 4000.0, 0.0));
        const auto curve = correlation_curve(a, b, grid, cfg);
        REQUIRE(curve.size() == grid.size());
        for (std::size_t k = 0; k < grid.size(); k += 7) {
            CHECK(curve[k] == doctest::Approx(correlation(a, b, grid.at(k), cfg)).epsilon(1e-12));
        }
        const auto auto_curve = autocorrelation_curve(a, grid, cfg);
        CHECK(auto_curve == correlation_curve(a, a, grid, cfg));
    }
}

TEST_CASE("correlation is bilinear in velocities") {
    std::mt19937_64 rng(14);
    const KernelConfig cfg;
    std::uniform_real_distribution<double> lag(-2000.0, 2000.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = to_events(oracle::random_rhythm(rng, 1 + trial % 15, 6000.0, 0.0));
        const auto b = to_events(oracle::random_rhythm(rng, 1 + trial % 7, 6000.0, 0.0));
        const double c = 0.5;
        const double t = lag(rng);
        const double base = correlation(a, b, t, cfg);
        CHECK(std::abs(correlation(a.scaled(c), b, t, cfg) - c * base) <= 1e-12 * std::max(base, 1e-300));
    }
}

TEST_CASE("autocorrelation is maximal at zero lag") {
    std::mt19937_64 rng(15);
    const KernelConfig cfg;
    const LagGrid grid{100.0, 2000.0, 1.0};
    for (int trial = 0; trial < 50; ++trial) {
        const auto events = to_events(oracle::random_rhythm(rng, 2 + trial % 20, 6000.0, 4.0 * cfg.sigma));
        const double zero = autocorrelation(events, 0.0, cfg);
        const auto curve = autocorrelation_curve(events, grid, cfg);
        for (double value : curve) {
            CHECK(zero >= value - 1e-9);
        }
    }
}

TEST_CASE("autocorrelation is symmetric") {
    std::mt19937_64 rng(16);
    const KernelConfig cfg;
    std::uniform_real_distribution<double> lag(0.0, 2500.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto events = to_events(oracle::random_rhythm(rng, 1 + trial % 25, 6000.0, 0.0));
        const double t = lag(rng);
        CHECK(std::abs(autocorrelation(events, t, cfg) - autocorrelation(events, -t, cfg)) < 1e-12);
    }
}

TEST_CASE("closed form agrees with numerical integration of the smoothed curves") {
    // The integral of G_a(x) G_b(x - t) is the closed form at sigma * sqrt(2), up to a constant.
    std::mt19937_64 rng(17);
    const KernelConfig cfg;
    KernelConfig wide = cfg;
    wide.sigma = cfg.sigma * std::sqrt(2.0);
    for (int trial = 0; trial < 12; ++trial) {
        const auto ra = oracle::random_rhythm(rng, 2 + trial % 5, 3000.0, 8.0 * cfg.sigma, true);
        const auto rb = oracle::random_rhythm(rng, 1 + trial % 6, 3000.0, 8.0 * cfg.sigma, true);
        const auto a = to_events(ra);
        const auto b = to_events(rb);

        std::vector<double> closed;
        std::vector<double> integral;
        std::vector<double> ratio;
        for (double t = -3000.0; t <= 3000.0; t += 5.0) {
            closed.push_back(correlation(a, b, t, wide));
            integral.push_back(oracle::integrated_correlation(ra, rb, t, cfg.sigma));
            if (closed.back() > 1e-6) {
                ratio.push_back(integral.back() / closed.back());
            }
        }
        CHECK(oracle::argmax(closed) == oracle::argmax(integral));
        REQUIRE(!ratio.empty());
        for (double r : ratio) {
            CHECK(r == doctest::Approx(ratio.front()).epsilon(1e-6));
        }
    }
}

TEST_CASE("kernel config validation") {
    KernelConfig cfg;
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = KernelConfig{};
    cfg.spontaneous_tempo = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
