#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "rhythm/endpoint.h"
#include "rhythm/protocol.h"
#include "rhythm/session.h"

using namespace rhythm;

namespace {

SessionOptions manual_options(std::size_t max_notes = 60) {
    SessionOptions opts;
    opts.cadence = 0.0;
    opts.tracker.max_notes = max_notes;
    return opts;
}

// Dense enough that one analysis takes a noticeable amount of time.
void fill_dense(Session& session, std::size_t notes, Millis span) {
    for (std::size_t i = 0; i < notes; ++i) {
        session.ingest(span * static_cast<double>(i) / static_cast<double>(notes), 0.5 + 0.5 * static_cast<double>(i % 2));
    }
}

struct Lines {
    std::mutex mutex;
    std::vector<nlohmann::json> records;

    ProtocolEndpoint::Writer writer() {
        return [this](const std::string& line) {
            std::lock_guard lock(mutex);
            records.push_back(nlohmann::json::parse(line));
        };
    }
};

}  // namespace

TEST_CASE("ingest defaults and clamping") {
    auto clock = std::make_shared<ManualClock>(1234.0);
    Session session(manual_options(), clock);
    const auto a = session.ingest(std::nullopt, 0.8);
    CHECK(a.onset == 1234.0);
    CHECK(!a.clamped);
    const auto b = session.ingest(1.0, 7.0);
    CHECK(b.velocity == 1.0);
    CHECK(b.clamped);
    CHECK_THROWS_AS(session.ingest(NAN, 1.0), std::invalid_argument);

    // Late arrivals are slotted into place.
    session.ingest(500.0, 1.0);
    const auto snap = session.snapshot(2000.0);
    REQUIRE(snap.size() == 3);
    CHECK(snap.onset(0) == 1.0);
    CHECK(snap.onset(1) == 500.0);
    CHECK(snap.onset(2) == 1234.0);
    CHECK(session.snapshot(600.0).size() == 2);
}

TEST_CASE("silence yields a status record") {
    auto clock = std::make_shared<ManualClock>();
    Session session(manual_options(), clock);
    Lines out;
    ProtocolEndpoint endpoint(session, out.writer());
    endpoint.handle_line(R"({"type":"analyze","now":1000})");
    REQUIRE(out.records.size() == 1);
    CHECK(out.records[0]["type"] == "status");
    CHECK(out.records[0]["status"] == "insufficient-data");
}

TEST_CASE("endpoint handles every record type") {
    auto clock = std::make_shared<ManualClock>(42.0);
    Session session(manual_options(), clock);
    Lines out;
    ProtocolEndpoint endpoint(session, out.writer());
    endpoint.handle_line(R"({"type":"note","t":1234.5,"v":0.8})");
    endpoint.handle_line(R"({"type":"note","t":1,"v":7})");
    endpoint.handle_line(R"({"type":"note","v":0.8})");
    endpoint.handle_line("   ");
    endpoint.handle_line("{broken");
    endpoint.handle_line(R"({"type":"ping"})");
    endpoint.handle_line(R"({"type":"analyze","now":2000})");

    REQUIRE(out.records.size() == 6);
    CHECK(out.records[0]["type"] == "ack");
    CHECK(!out.records[0].contains("warning"));
    CHECK(out.records[1]["v"] == 1.0);
    CHECK(out.records[1].contains("warning"));
    CHECK(out.records[2]["t"] == 42.0);
    CHECK(out.records[3]["type"] == "error");
    CHECK(out.records[4]["type"] == "pong");
    CHECK(out.records[4]["now_ms"] == 42.0);
    CHECK(out.records[5]["type"] == "estimate");
    CHECK(out.records[5]["note_count"] == 3);
    CHECK(out.records[5]["analyzed_at_ms"] == 2000.0);
}

TEST_CASE("acks can be limited to clamped notes") {
    Session session(manual_options(), std::make_shared<ManualClock>());
    Lines out;
    ProtocolEndpoint endpoint(session, out.writer(), ProtocolEndpoint::Options{false});
    endpoint.handle_line(R"({"type":"note","t":1,"v":0.5})");
    endpoint.handle_line(R"({"type":"note","t":2,"v":5})");
    REQUIRE(out.records.size() == 1);
    CHECK(out.records[0].contains("warning"));
}

TEST_CASE("late publication is flagged stale") {
    auto clock = std::make_shared<ManualClock>();
    Session session(manual_options(), clock);
    for (int i = 0; i <= 8; ++i) {
        session.ingest(500.0 * i, 1.0);
    }
    clock->set(4000.0);
    const auto fresh = session.analyze_now(4000.0);
    REQUIRE(fresh.estimate);
    CHECK(!fresh.stale);

    // The clock has moved past the predicted onset by the time the result is published.
    clock->set(1e6);
    const auto late = session.analyze_now(4000.0);
    REQUIRE(late.estimate);
    CHECK(late.stale);
    CHECK(late.estimate->next_measure_onset < late.published_at);
}

TEST_CASE("steady tapping is tracked at every tick") {
    auto clock = std::make_shared<ManualClock>();
    Session session(manual_options(), clock);
    std::vector<Publication> pubs;
    std::mutex m;
    session.subscribe([&](const Publication& p) {
        std::lock_guard lock(m);
        pubs.push_back(p);
    });
    int next = 0;
    for (int tick = 1; tick <= 16; ++tick) {
        const Millis now = 500.0 * tick;
        clock->set(now);
        while (500.0 * next <= now) {
            session.ingest(500.0 * next++, 1.0);
        }
        CHECK(session.tick_at(now));
        session.wait_idle();
    }
    REQUIRE(pubs.size() == 16);
    for (const auto& p : pubs) {
        REQUIRE(p.estimate);
        CHECK(p.estimate->beat_estimate.bpm == doctest::Approx(120.0).epsilon(0.02));
    }
}

TEST_CASE("published estimates equal the frozen-time analysis") {
    auto clock = std::make_shared<ManualClock>();
    Session session(manual_options(0), clock);
    fill_dense(session, 40, 6000.0);
    clock->set(6000.0);
    REQUIRE(session.tick_at(5000.0));
    clock->set(9000.0);  // time moves on while the analysis runs
    session.wait_idle();
    const auto pub = session.last_publication();
    REQUIRE(pub);
    REQUIRE(pub->estimate);
    CHECK(pub->analyzed_at == 5000.0);
    CHECK(*pub->estimate == analyze(pub->snapshot, 5000.0, session.options().tracker));
    CHECK(pub->snapshot == session.snapshot(5000.0));
}

TEST_CASE("ticks during an analysis are coalesced and ingest is not blocked") {
    auto clock = std::make_shared<ManualClock>(6000.0);
    Session session(manual_options(0), clock);
    fill_dense(session, 600, 6000.0);

    REQUIRE(session.tick_at(6000.0));
    CHECK(session.analysis_in_flight());
    CHECK(!session.tick_at(6100.0));
    CHECK(!session.tick_at(6200.0));
    CHECK(session.coalesced_ticks() == 2);

    using clk = std::chrono::steady_clock;
    double worst_ms = 0.0;
    int during = 0;
    for (int i = 0; i < 50 && session.analysis_in_flight(); ++i, ++during) {
        const auto t0 = clk::now();
        session.ingest(6000.0 + i, 1.0);
        worst_ms = std::max(worst_ms, std::chrono::duration<double, std::milli>(clk::now() - t0).count());
    }
    CHECK(during > 0);
    CHECK(worst_ms < 1.0);
    session.wait_idle();
    CHECK(!session.analysis_in_flight());
    CHECK(session.tick_at(7000.0));
    session.wait_idle();
}

TEST_CASE("unsubscribed endpoints receive nothing") {
    auto clock = std::make_shared<ManualClock>();
    Session session(manual_options(), clock);
    Lines out;
    {
        ProtocolEndpoint endpoint(session, out.writer());
    }
    session.analyze_now(0.0);
    CHECK(out.records.empty());
}

TEST_CASE("replay trace length and determinism") {
    SimulationConfig sim;
    sim.sigma_err = 10.0;
    sim.rng_seed = 17;
    const auto script = generate(sim);
    const TrackerConfig cfg;

    Millis duration = 0.0;
    for (const auto& r : script.truth) {
        duration = std::max(duration, r.time);
    }
    const auto ticks = static_cast<std::size_t>(std::floor(duration / 500.0));
    std::size_t warm_up = 0;
    for (std::size_t k = 1; k <= ticks; ++k) {
        const double now = 500.0 * static_cast<double>(k);
        std::size_t in_window = 0;
        for (double t : script.events.onsets()) {
            in_window += (t <= now && t >= now - cfg.window) ? 1 : 0;
        }
        warm_up += in_window < 2 ? 1 : 0;
    }

    const auto trace = replay(script, 500.0, cfg);
    CHECK(trace.size() == ticks - warm_up);
    const auto again = replay(script, 500.0, cfg);
    REQUIRE(again.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        CHECK(trace[i].estimate == again[i].estimate);
        CHECK(trace[i].true_beat == 500.0);
    }
}

TEST_CASE("replay files") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto empty = dir / "rhythm_empty_script.jsonl";
    const auto corrupt = dir / "rhythm_corrupt_script.jsonl";
    const auto good = dir / "rhythm_good_script.jsonl";
    std::ofstream(empty).flush();
    std::ofstream(corrupt) << "{\"type\":\"note\",\"t\":0,\"v\":1}\n{\"type\":\"note\",\"t\":\n";
    SimulationConfig sim;
    sim.rng_seed = 3;
    const auto script = generate(sim);
    {
        std::ofstream out(good);
        protocol::write_script(out, script);
    }
    const TrackerConfig cfg;
    CHECK(replay_file(empty.string(), 500.0, cfg).empty());
    CHECK_THROWS_AS(replay_file(corrupt.string(), 500.0, cfg), std::runtime_error);
    CHECK(replay_file(good.string(), 500.0, cfg).size() == replay(script, 500.0, cfg).size());
    for (const auto& p : {empty, corrupt, good}) {
        std::filesystem::remove(p);
    }
}

TEST_CASE("live ticker publishes on its own") {
    SessionOptions opts;
    opts.cadence = 20.0;
    Session session(opts);
    std::atomic<int> count{0};
    session.subscribe([&](const Publication&) { ++count; });
    {
        Ticker ticker(session, opts.cadence);
        std::this_thread::sleep_for(std::chrono::milliseconds(150));
    }
    session.wait_idle();
    CHECK(count.load() >= 3);
}
