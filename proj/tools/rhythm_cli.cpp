// rhythm: command line front end for the tracker, simulator and evaluation harness.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>

#include <CLI11.hpp>

#include "rhythm/endpoint.h"
#include "rhythm/experiments.h"
#include "rhythm/protocol.h"
#include "rhythm/report.h"
#include "rhythm/session.h"
#include "rhythm/simulator.h"
#include "rhythm/socket_server.h"

namespace {

using namespace rhythm;

void add_tracker_flags(CLI::App* cmd, TrackerConfig& cfg) {
    cmd->add_option("--window", cfg.window, "Analysis window in ms")->capture_default_str();
    cmd->add_option("--sigma", cfg.kernel.sigma, "Gaussian width in ms")->capture_default_str();
    cmd->add_option("--ts", cfg.kernel.spontaneous_tempo, "Spontaneous tempo in ms")->capture_default_str();
    cmd->add_option("--min-lag", cfg.min_lag, "Shortest beat candidate in ms")->capture_default_str();
    cmd->add_option("--max-lag", cfg.max_lag, "Longest beat candidate in ms")->capture_default_str();
    cmd->add_option("--max-notes", cfg.max_notes, "Most recent notes analysed (0 = all)")->capture_default_str();
}

void write_report(const MetricsReport& report, const std::string& out) {
    const std::string table = to_table(report);
    std::cout << table;
    if (out.empty()) {
        return;
    }
    std::ofstream jsonl(out + ".jsonl");
    std::ofstream tsv(out + ".tsv");
    if (!jsonl || !tsv) {
        throw std::runtime_error("cannot write report files with prefix '" + out + "'");
    }
    jsonl << to_jsonl(report);
    tsv << table;
    std::cerr << "wrote " << out << ".jsonl and " << out << ".tsv\n";
}

MetricsReport concat(std::string experiment, std::initializer_list<MetricsReport> parts) {
    MetricsReport all{std::move(experiment), {}};
    for (const auto& part : parts) {
        for (ReportRow row : part.rows) {
            // Keep the grouping of each part visible in the flat file.
            row.labels.insert(row.labels.begin(), {"table", part.experiment});
            all.rows.push_back(std::move(row));
        }
    }
    return all;
}

int run_track(const SessionOptions& opts, bool acks) {
    std::ios::sync_with_stdio(false);
    std::mutex out_mutex;
    Session session(opts);
    ProtocolEndpoint endpoint(
        session,
        [&](const std::string& line) {
            std::lock_guard lock(out_mutex);
            std::cout << line << '\n' << std::flush;
        },
        ProtocolEndpoint::Options{acks});
    std::optional<Ticker> ticker;
    if (opts.cadence > 0.0) {
        ticker.emplace(session, opts.cadence);
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        endpoint.handle_line(line);
    }
    ticker.reset();
    session.wait_idle();
    return 0;
}

net::SocketServer* g_server = nullptr;

extern "C" void stop_server(int) {
    if (g_server) {
        g_server->stop();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Real-time tempo and meter tracking for note onset streams"};
    app.require_subcommand(1);

    // track
    SessionOptions track_opts;
    bool no_ack = false;
    auto* track = app.add_subcommand("track", "Live session over stdin/stdout");
    track->add_option("--cadence", track_opts.cadence, "Analysis period in ms (0 = manual only)")->capture_default_str();
    add_tracker_flags(track, track_opts.tracker);
    track->add_flag("--no-ack", no_ack, "Only acknowledge notes whose velocity was clamped");

    // simulate
    SimulationConfig sim;
    std::string change = "none";
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Emit a synthetic performance script");
    simulate->add_option("--beat", sim.beat, "Beat in ms")->capture_default_str();
    simulate->add_option("--meter", sim.meter, "Beats per measure (3 or 4)")->capture_default_str();
    simulate->add_option("--sigma-err", sim.sigma_err, "Timing jitter SD in ms")->capture_default_str();
    simulate->add_option("--steps", sim.steps, "Number of 16th-note steps")->capture_default_str();
    simulate->add_option("--seed", sim.rng_seed, "Random seed")->capture_default_str();
    simulate->add_option("--change", change, "Change schedule")
        ->check(CLI::IsMember({"none", "tempo", "meter", "ramp"}))
        ->capture_default_str();
    simulate->add_option("--change-after", sim.schedule.change_after_measures, "Measures before the change")
        ->capture_default_str();
    simulate->add_option("--new-beat", sim.schedule.new_beat, "Beat after a sudden tempo change");
    simulate->add_option("--new-meter", sim.schedule.new_meter, "Meter after a sudden meter change");
    simulate->add_option("--ramp-increment", sim.schedule.ramp_increment, "Beat change per 16th note in ms");
    simulate->add_option("-o,--out", sim_out, "Output file (default stdout)");

    // bench
    LatencyOptions latency;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "Analysis latency against note count");
    bench->add_option("--reps", latency.reps, "Repetitions per note count")->capture_default_str();
    bench->add_option("--out", bench_out, "Report file prefix (.jsonl and .tsv)");
    add_tracker_flags(bench, latency.tracker);

    // eval
    int experiment = 2;
    std::string variant = "meter";
    std::size_t reps = 50;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string eval_out;
    TrackerConfig eval_tracker;
    auto* eval = app.add_subcommand("eval", "Simulation experiments: steady tempo, sudden change, tempo ramp");
    eval->add_option("--experiment", experiment, "2 steady tempo, 3 sudden change, 4 tempo ramp")
        ->check(CLI::IsMember({2, 3, 4}))
        ->capture_default_str();
    eval->add_option("--variant", variant, "Sudden change kind for experiment 3")
        ->check(CLI::IsMember({"meter", "tempo"}))
        ->capture_default_str();
    eval->add_option("--reps", reps, "Repetitions per cell")->capture_default_str();
    eval->add_option("--seed", seed, "Run seed")->capture_default_str();
    eval->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    eval->add_option("--out", eval_out, "Report file prefix (.jsonl and .tsv)");
    add_tracker_flags(eval, eval_tracker);

    // serve
    net::ServerOptions serve_opts;
    auto* serve = app.add_subcommand("serve", "Socket endpoint (line JSON or WebSocket), one session per connection");
    serve->add_option("--port", serve_opts.port, "TCP port (0 = ephemeral)")->capture_default_str();
    serve->add_option("--host", serve_opts.host, "Listen address")->capture_default_str();
    serve->add_option("--cadence", serve_opts.session.cadence, "Analysis period in ms")->capture_default_str();
    add_tracker_flags(serve, serve_opts.session.tracker);

    // replay
    std::string script_path;
    Millis replay_cadence = 500.0;
    TrackerConfig replay_tracker;
    auto* replay_cmd = app.add_subcommand("replay", "Drive a session over a script file and score it");
    replay_cmd->add_option("script", script_path, "Script file")->required();
    replay_cmd->add_option("--cadence", replay_cadence, "Analysis period in ms")->capture_default_str();
    add_tracker_flags(replay_cmd, replay_tracker);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*track) {
            return run_track(track_opts, !no_ack);
        }

        if (*simulate) {
            static const std::map<std::string, ChangeKind> kinds{{"none", ChangeKind::none},
                                                                 {"tempo", ChangeKind::sudden_tempo},
                                                                 {"meter", ChangeKind::sudden_meter},
                                                                 {"ramp", ChangeKind::tempo_ramp}};
            sim.schedule.kind = kinds.at(change);
            const PerformanceScript script = generate(sim);
            if (sim_out.empty()) {
                protocol::write_script(std::cout, script);
            } else {
                std::ofstream out(sim_out);
                if (!out) {
                    throw std::runtime_error("cannot write '" + sim_out + "'");
                }
                protocol::write_script(out, script);
            }
            return 0;
        }

        if (*bench) {
            write_report(latency_report(run_latency_experiment(latency)), bench_out);
            return 0;
        }

        if (*eval) {
            if (experiment == 2) {
                SteadyTempoOptions opts;
                opts.reps = reps;
                opts.seed = seed;
                opts.threads = threads;
                opts.tracker = eval_tracker;
                const auto result = run_steady_tempo_experiment(opts);
                write_report(concat("steady_tempo", {result.by_sigma(), result.by_tempo(), result.by_cell()}),
                             eval_out);
            } else if (experiment == 3) {
                SuddenChangeOptions opts;
                opts.cases = variant == "meter" ? meter_change_cases() : tempo_change_cases();
                opts.reps = reps;
                opts.seed = seed;
                opts.threads = threads;
                opts.tracker = eval_tracker;
                write_report(adaptation_report(run_sudden_change_experiment(opts)), eval_out);
            } else {
                TempoRampOptions opts;
                opts.reps = reps;
                opts.seed = seed;
                opts.threads = threads;
                opts.tracker = eval_tracker;
                write_report(tempo_ramp_report(run_tempo_ramp_experiment(opts)), eval_out);
            }
            return 0;
        }

        if (*serve) {
            net::SocketServer server(serve_opts);
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            std::cerr << "listening on " << serve_opts.host << ':' << server.port() << '\n';
            server.run();
            g_server = nullptr;
            return 0;
        }

        if (*replay_cmd) {
            const PerformanceScript script = protocol::read_script_file(script_path);
            const EstimateTrace trace = replay(script, replay_cadence, replay_tracker);
            for (const auto& entry : trace) {
                std::cout << protocol::estimate_record(entry.estimate, false) << '\n';
            }
            const auto onsets = script.measure_onsets();
            const TrialMetrics m = score_trace(trace, onsets);
            const auto show = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("n/a"); };
            std::cerr << "estimates " << trace.size() << "  t_ac " << show(m.t_ac) << "  m_ac " << show(m.m_ac)
                      << "  precision " << show(m.precision) << "  recall " << show(m.recall) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "rhythm: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
