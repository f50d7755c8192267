#include "rhythm/protocol.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

namespace rhythm::protocol {
namespace {

using ordered_json = nlohmann::ordered_json;

double finite_number(const ordered_json& j, const char* key) {
    const auto& field = j.at(key);
    if (!field.is_number()) {
        throw ProtocolError(std::string("field '") + key + "' must be a number");
    }
    const double value = field.get<double>();
    if (!std::isfinite(value)) {
        throw ProtocolError(std::string("field '") + key + "' must be finite");
    }
    return value;
}

std::optional<double> optional_number(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return finite_number(j, key);
}

}  // namespace

Inbound parse_inbound(std::string_view line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("malformed record: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        throw ProtocolError("record needs a string 'type'");
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "note") {
        if (!j.contains("v")) {
            throw ProtocolError("note record needs 'v'");
        }
        return NoteRecord{optional_number(j, "t"), finite_number(j, "v")};
    }
    if (type == "analyze") {
        return AnalyzeRecord{optional_number(j, "now")};
    }
    if (type == "ping") {
        return PingRecord{};
    }
    throw ProtocolError("unknown record type '" + type + "'");
}

std::string estimate_record(const RhythmEstimate& estimate, bool stale) {
    ordered_json j;
    j["type"] = "estimate";
    j["beat_ms"] = estimate.beat_estimate.beat;
    j["bpm"] = estimate.beat_estimate.bpm;
    j["clarity"] = estimate.beat_estimate.clarity;
    j["meter"] = estimate.meter_estimate.meter;
    j["phase_ms"] = estimate.meter_estimate.phase;
    j["next_measure_onset_ms"] = estimate.next_measure_onset;
    j["note_count"] = estimate.note_count;
    j["analyzed_at_ms"] = estimate.analyzed_at;
    j["stale"] = stale;
    return j.dump();
}

std::string status_record(std::string_view status, Millis analyzed_at, std::size_t note_count) {
    ordered_json j;
    j["type"] = "status";
    j["status"] = status;
    j["analyzed_at_ms"] = analyzed_at;
    j["note_count"] = note_count;
    return j.dump();
}

std::string ack_record(Millis t, double v, bool clamped) {
    ordered_json j;
    j["type"] = "ack";
    j["t"] = t;
    j["v"] = v;
    if (clamped) {
        j["warning"] = "velocity clamped to (0, 1]";
    }
    return j.dump();
}

std::string pong_record(Millis now) {
    ordered_json j;
    j["type"] = "pong";
    j["now_ms"] = now;
    return j.dump();
}

std::string error_record(std::string_view message) {
    ordered_json j;
    j["type"] = "error";
    j["message"] = message;
    return j.dump();
}

std::string note_record(Millis t, double v) {
    ordered_json j;
    j["type"] = "note";
    j["t"] = t;
    j["v"] = v;
    return j.dump();
}

std::string truth_record(const TruthRecord& truth) {
    ordered_json j;
    j["type"] = "truth";
    j["t"] = truth.time;
    j["beat"] = truth.beat;
    j["meter"] = truth.meter;
    j["measure_onset"] = truth.measure_onset;
    return j.dump();
}

void write_script(std::ostream& out, const PerformanceScript& script) {
    std::size_t next_event = 0;
    for (const TruthRecord& r : script.truth) {
        if (!r.measure_onset) {
            out << note_record(script.events.onset(next_event), script.events.velocity(next_event)) << '\n';
            ++next_event;
        }
        out << truth_record(r) << '\n';
    }
}

PerformanceScript read_script(std::istream& in) {
    std::vector<Millis> onsets;
    std::vector<double> velocities;
    PerformanceScript script;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = ordered_json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "note") {
                onsets.push_back(finite_number(j, "t"));
                velocities.push_back(finite_number(j, "v"));
            } else if (type == "truth") {
                script.truth.push_back({finite_number(j, "t"), finite_number(j, "beat"), j.at("meter").get<int>(),
                                        j.at("measure_onset").get<bool>()});
            } else {
                throw ProtocolError("unexpected record type '" + type + "'");
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("script line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    script.events = NoteEventSet(std::move(onsets), std::move(velocities));
    return script;
}

PerformanceScript read_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open script '" + path + "'");
    }
    return read_script(in);
}

}  // namespace rhythm::protocol
