#pragma once

// Live analysis session: an ingester appending notes and a single-flight analyzer
// working on frozen snapshots. Ticks that arrive while an analysis is running are
// coalesced, never queued.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rhythm/metrics.h"
#include "rhythm/simulator.h"
#include "rhythm/tracker.h"

namespace rhythm {

class Clock {
public:
    virtual ~Clock() = default;
    virtual Millis now() const = 0;
};

/// Monotonic clock reading 0 at construction.
class SessionClock final : public Clock {
public:
    SessionClock() : epoch_(std::chrono::steady_clock::now()) {}
    Millis now() const override {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_).count();
    }

private:
    std::chrono::steady_clock::time_point epoch_;
};

/// Clock advanced by hand; used for replay and tests.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Millis start = 0.0) : now_(start) {}
    Millis now() const override { return now_.load(); }
    void set(Millis t) { now_.store(t); }

private:
    std::atomic<Millis> now_;
};

struct SessionOptions {
    TrackerConfig tracker;
    /// Analysis period for automatic ticks; 0 disables them.
    Millis cadence = 500.0;
};

struct IngestAck {
    Millis onset = 0.0;
    double velocity = 0.0;
    bool clamped = false;
};

struct Publication {
    /// Empty when the snapshot held too few notes.
    std::optional<RhythmEstimate> estimate;
    bool stale = false;
    Millis analyzed_at = 0.0;
    Millis published_at = 0.0;
    NoteEventSet snapshot;
};

class Session {
public:
    using Subscriber = std::function<void(const Publication&)>;

    explicit Session(SessionOptions opts, std::shared_ptr<const Clock> clock = std::make_shared<SessionClock>());
    ~Session();

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Appends a note; `onset` defaults to the current session time. Never waits for analysis.
    IngestAck ingest(std::optional<Millis> onset, double velocity);

    /// Starts an asynchronous analysis at the current session time.
    /// Returns false when one is already running (the tick is coalesced).
    bool tick();
    bool tick_at(Millis now);

    /// Analyses synchronously at `now` and publishes the result.
    Publication analyze_now(Millis now);

    /// Returns a handle for unsubscribe().
    std::size_t subscribe(Subscriber subscriber);
    void unsubscribe(std::size_t handle);

    /// Blocks until no analysis is in flight.
    void wait_idle();
    bool analysis_in_flight() const { return in_flight_.load(); }
    std::size_t coalesced_ticks() const { return coalesced_.load(); }

    /// Notes played at or before `now`.
    NoteEventSet snapshot(Millis now) const;
    std::optional<Publication> last_publication() const;

    const SessionOptions& options() const { return opts_; }
    const Clock& clock() const { return *clock_; }

private:
    Publication run_analysis(NoteEventSet snapshot, Millis now) const;
    void publish(const Publication& pub);
    void analyzer_loop(std::stop_token stop);

    SessionOptions opts_;
    std::shared_ptr<const Clock> clock_;

    mutable std::mutex events_mutex_;
    std::deque<std::pair<Millis, double>> events_;

    mutable std::mutex subscribers_mutex_;
    std::vector<std::pair<std::size_t, Subscriber>> subscribers_;
    std::size_t next_subscriber_ = 0;
    std::optional<Publication> last_;

    std::mutex job_mutex_;
    std::condition_variable_any job_cv_;
    std::condition_variable_any idle_cv_;
    std::optional<std::pair<NoteEventSet, Millis>> job_;
    std::atomic<bool> in_flight_{false};
    std::atomic<std::size_t> coalesced_{0};

    std::jthread analyzer_;
};

/// Calls session.tick() every cadence on a steady clock until destroyed.
class Ticker {
public:
    Ticker(Session& session, Millis cadence);

private:
    std::jthread thread_;
};

/// Drives a session over a script with a manual clock, analysing at every multiple of
/// `cadence` up to the script's last time. Warm-up ticks are left out of the trace.
EstimateTrace replay(const PerformanceScript& script, Millis cadence, const TrackerConfig& cfg);
EstimateTrace replay_file(const std::string& path, Millis cadence, const TrackerConfig& cfg);

}  // namespace rhythm
