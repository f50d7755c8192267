#pragma once

// TCP endpoint for live clients. A connection either speaks newline-delimited JSON
// directly or upgrades to a WebSocket with one JSON record per text frame.

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rhythm/session.h"

namespace rhythm::net {

class SocketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept(std::string_view key);

enum class Opcode : std::uint8_t { continuation = 0x0, text = 0x1, binary = 0x2, close = 0x8, ping = 0x9, pong = 0xA };

struct Frame {
    Opcode opcode = Opcode::text;
    bool fin = true;
    std::string payload;
};

/// Encodes a single frame. Servers send unmasked frames; clients pass a mask.
std::string encode_frame(Opcode opcode, std::string_view payload, std::optional<std::uint32_t> mask = std::nullopt);

/// Incremental frame parser over a byte stream.
class FrameDecoder {
public:
    void feed(std::string_view bytes) { buffer_.append(bytes); }
    /// Next complete frame, unmasked. Throws SocketError on frames this server refuses.
    std::optional<Frame> next();

private:
    std::string buffer_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    /// 0 picks an ephemeral port; see SocketServer::port().
    std::uint16_t port = 8765;
    SessionOptions session;
    bool acks = true;
};

/// Accepts connections and gives each its own session, ticker and protocol endpoint.
class SocketServer {
public:
    explicit SocketServer(ServerOptions opts);
    ~SocketServer();

    SocketServer(const SocketServer&) = delete;
    SocketServer& operator=(const SocketServer&) = delete;

    std::uint16_t port() const { return port_; }

    /// Accepts until stop() is called.
    void run();
    void stop();

private:
    void serve_connection(int fd);

    ServerOptions opts_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;

    std::mutex mutex_;
    bool stopping_ = false;
    std::set<int> clients_;
    std::vector<std::jthread> workers_;
};

}  // namespace rhythm::net
