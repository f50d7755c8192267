#include "rhythm/endpoint.h"

#include <type_traits>
#include <variant>

#include "rhythm/protocol.h"

namespace rhythm {

ProtocolEndpoint::ProtocolEndpoint(Session& session, Writer writer)
    : ProtocolEndpoint(session, std::move(writer), Options{}) {}

ProtocolEndpoint::ProtocolEndpoint(Session& session, Writer writer, Options opts)
    : session_(session), writer_(std::move(writer)), opts_(opts) {
    subscription_ = session_.subscribe([this](const Publication& pub) { write(format(pub)); });
}

ProtocolEndpoint::~ProtocolEndpoint() { session_.unsubscribe(subscription_); }

std::string ProtocolEndpoint::format(const Publication& pub) {
    if (pub.estimate) {
        return protocol::estimate_record(*pub.estimate, pub.stale);
    }
    return protocol::status_record("insufficient-data", pub.analyzed_at, pub.snapshot.size());
}

void ProtocolEndpoint::write(const std::string& line) {
    std::lock_guard lock(write_mutex_);
    writer_(line);
}

void ProtocolEndpoint::handle_line(std::string_view line) {
    if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        return;
    }
    protocol::Inbound record;
    try {
        record = protocol::parse_inbound(line);
    } catch (const protocol::ProtocolError& e) {
        write(protocol::error_record(e.what()));
        return;
    }

    std::visit(
        [this](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, protocol::NoteRecord>) {
                const IngestAck ack = session_.ingest(r.t, r.v);
                if (opts_.acks || ack.clamped) {
                    write(protocol::ack_record(ack.onset, ack.velocity, ack.clamped));
                }
            } else if constexpr (std::is_same_v<T, protocol::AnalyzeRecord>) {
                session_.analyze_now(r.now.value_or(session_.clock().now()));
            } else {
                write(protocol::pong_record(session_.clock().now()));
            }
        },
        record);
}

}  // namespace rhythm
