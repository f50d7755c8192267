#include "rhythm/socket_server.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <memory>

#include "rhythm/endpoint.h"

namespace rhythm::net {
namespace {

constexpr std::string_view kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxFramePayload = 1 << 20;
constexpr std::size_t kMaxLine = 1 << 16;

bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::optional<std::string> header_value(std::string_view request, std::string_view name) {
    const std::string wanted = lowercase(name);
    std::size_t pos = request.find("\r\n");
    while (pos != std::string_view::npos) {
        const std::size_t start = pos + 2;
        const std::size_t end = request.find("\r\n", start);
        const std::string_view line = request.substr(start, end == std::string_view::npos ? end : end - start);
        const std::size_t colon = line.find(':');
        if (colon != std::string_view::npos && lowercase(trim(line.substr(0, colon))) == wanted) {
            return std::string(trim(line.substr(colon + 1)));
        }
        pos = end;
    }
    return std::nullopt;
}

// Splits complete lines off the front of `buffer`.
template <typename F>
void drain_lines(std::string& buffer, F&& on_line) {
    std::size_t start = 0;
    for (std::size_t nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
        on_line(std::string_view(buffer).substr(start, nl - start));
        start = nl + 1;
    }
    buffer.erase(0, start);
    if (buffer.size() > kMaxLine) {
        throw SocketError("line too long");
    }
}

}  // namespace

std::string websocket_accept(std::string_view key) {
    const std::string input = std::string(key) + std::string(kWebSocketGuid);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(input.data(), input.size(), digest.data(), &len, EVP_sha1(), nullptr) != 1) {
        throw SocketError("sha1 failed");
    }
    std::string out(4 * ((len + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), digest.data(), static_cast<int>(len));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::string encode_frame(Opcode opcode, std::string_view payload, std::optional<std::uint32_t> mask) {
    std::string out;
    out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(opcode)));
    const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
    const std::size_t n = payload.size();
    if (n < 126) {
        out.push_back(static_cast<char>(mask_bit | n));
    } else if (n <= 0xFFFF) {
        out.push_back(static_cast<char>(mask_bit | 126));
        out.push_back(static_cast<char>((n >> 8) & 0xFF));
        out.push_back(static_cast<char>(n & 0xFF));
    } else {
        out.push_back(static_cast<char>(mask_bit | 127));
        for (int shift = 56; shift >= 0; shift -= 8) {
            out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> shift) & 0xFF));
        }
    }
    if (!mask) {
        out.append(payload);
        return out;
    }
    const std::array<char, 4> key{static_cast<char>(*mask >> 24), static_cast<char>(*mask >> 16),
                                  static_cast<char>(*mask >> 8), static_cast<char>(*mask)};
    out.append(key.data(), key.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
    }
    return out;
}

std::optional<Frame> FrameDecoder::next() {
    const auto byte = [this](std::size_t i) { return static_cast<std::uint8_t>(buffer_[i]); };
    if (buffer_.size() < 2) {
        return std::nullopt;
    }
    Frame frame;
    frame.fin = (byte(0) & 0x80) != 0;
    frame.opcode = static_cast<Opcode>(byte(0) & 0x0F);
    const bool masked = (byte(1) & 0x80) != 0;
    std::uint64_t length = byte(1) & 0x7F;
    std::size_t header = 2;
    if (length == 126) {
        if (buffer_.size() < 4) {
            return std::nullopt;
        }
        length = (std::uint64_t{byte(2)} << 8) | byte(3);
        header = 4;
    } else if (length == 127) {
        if (buffer_.size() < 10) {
            return std::nullopt;
        }
        length = 0;
        for (std::size_t i = 2; i < 10; ++i) {
            length = (length << 8) | byte(i);
        }
        header = 10;
    }
    if (length > kMaxFramePayload) {
        throw SocketError("frame too large");
    }
    const std::size_t key_at = header;
    if (masked) {
        header += 4;
    }
    if (buffer_.size() < header + length) {
        return std::nullopt;
    }
    frame.payload = buffer_.substr(header, static_cast<std::size_t>(length));
    if (masked) {
        for (std::size_t i = 0; i < frame.payload.size(); ++i) {
            frame.payload[i] = static_cast<char>(frame.payload[i] ^ buffer_[key_at + i % 4]);
        }
    }
    buffer_.erase(0, header + static_cast<std::size_t>(length));
    return frame;
}

SocketServer::SocketServer(ServerOptions opts) : opts_(std::move(opts)) {
    opts_.session.tracker.validate();
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw SocketError(std::string("socket: ") + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(opts_.port);
    if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw SocketError("bad listen address '" + opts_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const std::string reason = std::strerror(errno);
        ::close(listen_fd_);
        throw SocketError("cannot listen on " + opts_.host + ":" + std::to_string(opts_.port) + ": " + reason);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

SocketServer::~SocketServer() {
    stop();
    workers_.clear();
    ::close(listen_fd_);
}

void SocketServer::stop() {
    std::lock_guard lock(mutex_);
    if (stopping_) {
        return;
    }
    stopping_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    for (int fd : clients_) {
        ::shutdown(fd, SHUT_RDWR);
    }
}

void SocketServer::run() {
    while (true) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        std::lock_guard lock(mutex_);
        if (stopping_) {
            if (fd >= 0) {
                ::close(fd);
            }
            return;
        }
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) {
                continue;
            }
            throw SocketError(std::string("accept: ") + std::strerror(errno));
        }
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        clients_.insert(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void SocketServer::serve_connection(int fd) {
    bool websocket = false;
    std::mutex send_mutex;
    const auto writer = [&](const std::string& line) {
        std::lock_guard lock(send_mutex);
        send_all(fd, websocket ? encode_frame(Opcode::text, line) : line + "\n");
    };

    try {
        auto session = std::make_unique<Session>(opts_.session);
        auto endpoint = std::make_unique<ProtocolEndpoint>(*session, writer, ProtocolEndpoint::Options{opts_.acks});
        std::unique_ptr<Ticker> ticker;

        std::string buffer;
        FrameDecoder decoder;
        bool handshaken = false;
        std::string message;
        std::array<char, 4096> chunk{};
        bool open = true;
        while (open) {
            const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
            if (n <= 0) {
                if (n < 0 && errno == EINTR) {
                    continue;
                }
                break;
            }
            if (!handshaken) {
                buffer.append(chunk.data(), static_cast<std::size_t>(n));
                if (buffer.size() < 4 && std::string_view("GET ").starts_with(buffer)) {
                    continue;
                }
                if (buffer.starts_with("GET ")) {
                    const std::size_t end = buffer.find("\r\n\r\n");
                    if (end == std::string::npos) {
                        if (buffer.size() > kMaxLine) {
                            break;
                        }
                        continue;
                    }
                    const auto key = header_value(std::string_view(buffer).substr(0, end + 2), "Sec-WebSocket-Key");
                    if (!key) {
                        send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
                        break;
                    }
                    {
                        std::lock_guard lock(send_mutex);
                        send_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                                     "Sec-WebSocket-Accept: " +
                                         websocket_accept(*key) + "\r\n\r\n");
                        websocket = true;
                    }
                    decoder.feed(std::string_view(buffer).substr(end + 4));
                    buffer.clear();
                }
                handshaken = true;
                if (opts_.session.cadence > 0.0) {
                    ticker = std::make_unique<Ticker>(*session, opts_.session.cadence);
                }
                if (!websocket) {
                    drain_lines(buffer, [&](std::string_view line) { endpoint->handle_line(line); });
                    continue;
                }
            } else if (websocket) {
                decoder.feed(std::string_view(chunk.data(), static_cast<std::size_t>(n)));
            } else {
                buffer.append(chunk.data(), static_cast<std::size_t>(n));
                drain_lines(buffer, [&](std::string_view line) { endpoint->handle_line(line); });
                continue;
            }

            while (auto frame = decoder.next()) {
                switch (frame->opcode) {
                    case Opcode::text:
                    case Opcode::continuation:
                        message += frame->payload;
                        if (frame->fin) {
                            message.push_back('\n');
                            drain_lines(message, [&](std::string_view line) { endpoint->handle_line(line); });
                            message.clear();
                        }
                        break;
                    case Opcode::ping: {
                        std::lock_guard lock(send_mutex);
                        send_all(fd, encode_frame(Opcode::pong, frame->payload));
                        break;
                    }
                    case Opcode::close: {
                        std::lock_guard lock(send_mutex);
                        send_all(fd, encode_frame(Opcode::close, frame->payload.substr(0, 2)));
                        open = false;
                        break;
                    }
                    default:
                        break;
                }
                if (!open) {
                    break;
                }
            }
        }
        // Stop ticks before the endpoint unsubscribes, and both before the session goes.
        ticker.reset();
        endpoint.reset();
        session.reset();
    } catch (const std::exception&) {
        // A misbehaving client only loses its own connection.
    }

    std::lock_guard lock(mutex_);
    clients_.erase(fd);
    ::close(fd);
}

}  // namespace rhythm::net
