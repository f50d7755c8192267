#pragma once

// Line-delimited JSON records shared by the stdio session, the socket endpoint and
// script files. One object per line, UTF-8.
//
// inbound   {"type":"note","t":ms,"v":float}      t optional (arrival time on the session clock)
//           {"type":"analyze","now":ms}           now optional (session clock)
//           {"type":"ping"}                       clock sync, answered with a pong
// outbound  {"type":"estimate","beat_ms":..,"bpm":..,"clarity":..,"meter":3|4,"phase_ms":..,
//            "next_measure_onset_ms":..,"note_count":n,"analyzed_at_ms":..,"stale":bool}
//           {"type":"status","status":"insufficient-data","analyzed_at_ms":..,"note_count":n}
//           {"type":"ack","t":ms,"v":float[,"warning":".."]}
//           {"type":"pong","now_ms":ms}
//           {"type":"error","message":".."}
// scripts   note records plus {"type":"truth","t":ms,"beat":ms,"meter":n,"measure_onset":bool}

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "rhythm/simulator.h"
#include "rhythm/tracker.h"

namespace rhythm::protocol {

class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

struct NoteRecord {
    std::optional<Millis> t;
    double v = 1.0;
};

struct AnalyzeRecord {
    std::optional<Millis> now;
};

struct PingRecord {};

using Inbound = std::variant<NoteRecord, AnalyzeRecord, PingRecord>;

/// Throws ProtocolError for malformed JSON, unknown types, or non-finite numbers.
Inbound parse_inbound(std::string_view line);

std::string estimate_record(const RhythmEstimate& estimate, bool stale);
std::string status_record(std::string_view status, Millis analyzed_at, std::size_t note_count);
std::string ack_record(Millis t, double v, bool clamped);
std::string pong_record(Millis now);
std::string error_record(std::string_view message);

std::string note_record(Millis t, double v);
std::string truth_record(const TruthRecord& truth);

/// Writes every truth record in order, each note record directly before its truth record.
void write_script(std::ostream& out, const PerformanceScript& script);

/// Reads a script written by write_script (blank lines allowed).
/// Throws std::runtime_error naming the line on corrupt input.
PerformanceScript read_script(std::istream& in);
PerformanceScript read_script_file(const std::string& path);

}  // namespace rhythm::protocol
