#include "rhythm/session.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rhythm/protocol.h"

namespace rhythm {

Session::Session(SessionOptions opts, std::shared_ptr<const Clock> clock)
    : opts_(std::move(opts)), clock_(std::move(clock)) {
    opts_.tracker.validate();
    if (!clock_) {
        throw std::invalid_argument("session needs a clock");
    }
    analyzer_ = std::jthread([this](std::stop_token stop) { analyzer_loop(stop); });
}

Session::~Session() {
    analyzer_.request_stop();
    job_cv_.notify_all();
}

IngestAck Session::ingest(std::optional<Millis> onset, double velocity) {
    IngestAck ack;
    ack.onset = onset.value_or(clock_->now());
    if (!std::isfinite(ack.onset) || !std::isfinite(velocity)) {
        throw std::invalid_argument("note onset and velocity must be finite");
    }
    ack.velocity = velocity;
    ack.clamped = clamp_velocity(ack.velocity);

    std::lock_guard lock(events_mutex_);
    // Arrivals are nearly in order, so the insertion point is found from the back.
    auto pos = events_.end();
    while (pos != events_.begin() && std::prev(pos)->first > ack.onset) {
        --pos;
    }
    events_.insert(pos, {ack.onset, ack.velocity});

    // Keep two windows of history; anything older can no longer be analysed.
    const Millis horizon = events_.back().first - 2.0 * opts_.tracker.window;
    while (!events_.empty() && events_.front().first < horizon) {
        events_.pop_front();
    }
    return ack;
}

NoteEventSet Session::snapshot(Millis now) const {
    std::vector<Millis> t;
    std::vector<double> v;
    {
        std::lock_guard lock(events_mutex_);
        t.reserve(events_.size());
        v.reserve(events_.size());
        for (const auto& [onset, velocity] : events_) {
            if (onset > now) {
                break;
            }
            t.push_back(onset);
            v.push_back(velocity);
        }
    }
    return NoteEventSet(std::move(t), std::move(v));
}

Publication Session::run_analysis(NoteEventSet snapshot, const Millis now) const {
    Publication pub;
    pub.analyzed_at = now;
    try {
        pub.estimate = analyze(snapshot, now, opts_.tracker);
    } catch (const InsufficientData&) {
        pub.estimate.reset();
    }
    pub.published_at = clock_->now();
    pub.stale = pub.estimate && pub.estimate->next_measure_onset < pub.published_at;
    pub.snapshot = std::move(snapshot);
    return pub;
}

void Session::publish(const Publication& pub) {
    std::lock_guard lock(subscribers_mutex_);
    last_ = pub;
    for (const auto& [handle, s] : subscribers_) {
        s(pub);
    }
}

bool Session::tick() { return tick_at(clock_->now()); }

bool Session::tick_at(Millis now) {
    bool expected = false;
    if (!in_flight_.compare_exchange_strong(expected, true)) {
        ++coalesced_;
        return false;
    }
    {
        std::lock_guard lock(job_mutex_);
        job_.emplace(snapshot(now), now);
    }
    job_cv_.notify_one();
    return true;
}

Publication Session::analyze_now(Millis now) {
    Publication pub = run_analysis(snapshot(now), now);
    publish(pub);
    return pub;
}

void Session::analyzer_loop(std::stop_token stop) {
    while (true) {
        std::pair<NoteEventSet, Millis> job;
        {
            std::unique_lock lock(job_mutex_);
            if (!job_cv_.wait(lock, stop, [this] { return job_.has_value(); })) {
                return;
            }
            job = std::move(*job_);
            job_.reset();
        }
        publish(run_analysis(std::move(job.first), job.second));
        {
            std::lock_guard lock(job_mutex_);
            in_flight_ = false;
        }
        idle_cv_.notify_all();
    }
}

std::size_t Session::subscribe(Subscriber subscriber) {
    std::lock_guard lock(subscribers_mutex_);
    subscribers_.emplace_back(next_subscriber_, std::move(subscriber));
    return next_subscriber_++;
}

void Session::unsubscribe(std::size_t handle) {
    std::lock_guard lock(subscribers_mutex_);
    std::erase_if(subscribers_, [handle](const auto& entry) { return entry.first == handle; });
}

void Session::wait_idle() {
    std::unique_lock lock(job_mutex_);
    idle_cv_.wait(lock, [this] { return !in_flight_.load(); });
}

std::optional<Publication> Session::last_publication() const {
    std::lock_guard lock(subscribers_mutex_);
    return last_;
}

Ticker::Ticker(Session& session, Millis cadence) {
    if (!(cadence > 0.0)) {
        throw std::invalid_argument("ticker cadence must be positive");
    }
    thread_ = std::jthread([&session, cadence](std::stop_token stop) {
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double, std::milli>(cadence));
        auto next = std::chrono::steady_clock::now() + period;
        std::mutex m;
        std::condition_variable_any cv;
        while (!stop.stop_requested()) {
            std::unique_lock lock(m);
            cv.wait_until(lock, stop, next, [] { return false; });
            if (stop.stop_requested()) {
                return;
            }
            session.tick();
            next += period;
        }
    });
}

EstimateTrace replay(const PerformanceScript& script, Millis cadence, const TrackerConfig& cfg) {
    if (!(cadence > 0.0)) {
        throw std::invalid_argument("replay cadence must be positive");
    }
    Millis duration = 0.0;
    if (!script.events.empty()) {
        duration = script.events.onsets().back();
    }
    for (const auto& r : script.truth) {
        duration = std::max(duration, r.time);
    }

    auto clock = std::make_shared<ManualClock>();
    Session session({cfg, 0.0}, clock);
    const auto onsets = script.events.onsets();
    std::size_t next_note = 0;
    std::size_t next_truth = 0;
    std::optional<TruthRecord> truth_now;

    EstimateTrace trace;
    const auto ticks = static_cast<std::size_t>(std::floor(duration / cadence));
    for (std::size_t k = 1; k <= ticks; ++k) {
        const Millis now = static_cast<double>(k) * cadence;
        clock->set(now);
        while (next_note < onsets.size() && onsets[next_note] <= now) {
            session.ingest(onsets[next_note], script.events.velocity(next_note));
            ++next_note;
        }
        while (next_truth < script.truth.size() && script.truth[next_truth].time <= now) {
            truth_now = script.truth[next_truth++];
        }
        const Publication pub = session.analyze_now(now);
        if (pub.estimate) {
            trace.push_back({*pub.estimate, truth_now ? truth_now->beat : 0.0, truth_now ? truth_now->meter : 0, now});
        }
    }
    return trace;
}

EstimateTrace replay_file(const std::string& path, Millis cadence, const TrackerConfig& cfg) {
    return replay(protocol::read_script_file(path), cadence, cfg);
}

}  // namespace rhythm
