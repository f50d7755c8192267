#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <string_view>

#include "rhythm/session.h"

namespace rhythm {

/// Binds a Session to a line-oriented transport. Inbound lines are handled on the
/// caller's thread; publications arrive from the analyzer thread. Writes are serialized.
class ProtocolEndpoint {
public:
    using Writer = std::function<void(const std::string& line)>;

    struct Options {
        bool acks = true;
    };

    ProtocolEndpoint(Session& session, Writer writer);
    ProtocolEndpoint(Session& session, Writer writer, Options opts);
    ~ProtocolEndpoint();

    ProtocolEndpoint(const ProtocolEndpoint&) = delete;
    ProtocolEndpoint& operator=(const ProtocolEndpoint&) = delete;

    /// Handles one inbound record. Malformed input produces an error record; the stream continues.
    void handle_line(std::string_view line);

    /// Serializes a publication as an estimate or status record.
    static std::string format(const Publication& pub);

private:
    void write(const std::string& line);

    Session& session_;
    Writer writer_;
    Options opts_;
    std::mutex write_mutex_;
    std::size_t subscription_ = 0;
};

}  // namespace rhythm
