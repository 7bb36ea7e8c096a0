// Copyright (c) 2026 GUMS Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gums/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>

#include "gums/wire.hpp"

namespace gums {

Status Credential::validate() const {
  if (self_dn.empty()) {
    return make_error(Errc::ConfigError, "credential without dn");
  }
  auto it = trusted.find(self_dn);
  if (it != trusted.end() && it->second != secret_fingerprint) {
    return make_error(Errc::ConfigError,
                      "trust map lists own dn with a different fingerprint");
  }
  return ok_status();
}

Status Credential::check_peer(const DistinguishedName& dn,
                              const std::string& fp) const {
  auto it = trusted.find(dn);
  if (it == trusted.end()) {
    return make_error(Errc::UnknownPeer, dn.str());
  }
  if (it->second != fp) {
    return make_error(Errc::FingerprintMismatch, dn.str());
  }
  return ok_status();
}

std::vector<TranscriptEntry> Channel::transcript() const {
  std::lock_guard<std::mutex> lk(transcript_mu_);
  return transcript_;
}

void Channel::record(Direction dir, const std::string& bytes) {
  std::lock_guard<std::mutex> lk(transcript_mu_);
  transcript_.push_back(TranscriptEntry{dir, bytes, now_utc()});
}

// -- in-process pair ----------------------------------------------------

namespace {

struct PairCore {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> to_a;
  std::deque<std::string> to_b;
  bool a_open = true;
  bool b_open = true;
};

class PairChannel final : public Channel {
 public:
  PairChannel(std::shared_ptr<PairCore> core, bool is_a, PeerIdentity local,
              PeerIdentity remote)
      : Channel(std::move(local), std::move(remote)),
        core_(std::move(core)),
        is_a_(is_a) {}

  ~PairChannel() override { close(); }

  Status send(std::string msg) override {
    {
      std::lock_guard<std::mutex> lk(core_->mu);
      bool self_open = is_a_ ? core_->a_open : core_->b_open;
      bool peer_open = is_a_ ? core_->b_open : core_->a_open;
      if (!self_open || !peer_open) {
        return make_error(Errc::Closed, "channel closed");
      }
      (is_a_ ? core_->to_b : core_->to_a).push_back(msg);
    }
    record(Direction::Sent, msg);
    core_->cv.notify_all();
    return ok_status();
  }

  Result<std::string> recv() override {
    std::unique_lock<std::mutex> lk(core_->mu);
    auto& inbox = is_a_ ? core_->to_a : core_->to_b;
    core_->cv.wait(lk, [&] {
      bool self_open = is_a_ ? core_->a_open : core_->b_open;
      bool peer_open = is_a_ ? core_->b_open : core_->a_open;
      return !inbox.empty() || !self_open || !peer_open;
    });
    bool self_open = is_a_ ? core_->a_open : core_->b_open;
    if (!self_open) return make_error(Errc::Closed, "channel closed");
    if (!inbox.empty()) {
      std::string msg = std::move(inbox.front());
      inbox.pop_front();
      lk.unlock();
      record(Direction::Received, msg);
      return msg;
    }
    return make_error(Errc::Closed, "peer has shut down");
  }

  void close() override {
    {
      std::lock_guard<std::mutex> lk(core_->mu);
      (is_a_ ? core_->a_open : core_->b_open) = false;
    }
    core_->cv.notify_all();
  }

 private:
  std::shared_ptr<PairCore> core_;
  bool is_a_;
};

}  // namespace

Result<std::pair<ChannelPtr, ChannelPtr>> handshake(const Credential& client,
                                                    const Credential& server) {
  if (Status s = client.validate(); !s.ok()) return s.error();
  if (Status s = server.validate(); !s.ok()) return s.error();
  // Server vets the client first, then the client vets the server; the TCP
  // handshake performs the same checks in the same order.
  if (Status s = server.check_peer(client.self_dn, client.secret_fingerprint);
      !s.ok()) {
    return s.error();
  }
  if (Status s = client.check_peer(server.self_dn, server.secret_fingerprint);
      !s.ok()) {
    return s.error();
  }
  PeerIdentity client_id{client.self_dn, client.secret_fingerprint};
  PeerIdentity server_id{server.self_dn, server.secret_fingerprint};
  auto core = std::make_shared<PairCore>();
  ChannelPtr a = std::make_unique<PairChannel>(core, true, client_id, server_id);
  ChannelPtr b = std::make_unique<PairChannel>(core, false, server_id, client_id);
  return std::make_pair(std::move(a), std::move(b));
}

// -- loopback -----------------------------------------------------------

namespace {

class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(PeerIdentity local, PeerIdentity remote, FrameHandler handler)
      : Channel(std::move(local), std::move(remote)),
        handler_(std::move(handler)) {}

  Status send(std::string msg) override {
    if (!open_) return make_error(Errc::Closed, "channel closed");
    record(Direction::Sent, msg);
    inbox_.push_back(handler_(local_, msg));
    return ok_status();
  }

  Result<std::string> recv() override {
    if (!open_ || inbox_.empty()) {
      return make_error(Errc::Closed, "no pending reply");
    }
    std::string msg = std::move(inbox_.front());
    inbox_.pop_front();
    record(Direction::Received, msg);
    return msg;
  }

  void close() override { open_ = false; }

 private:
  FrameHandler handler_;
  std::deque<std::string> inbox_;
  bool open_ = true;
};

}  // namespace

Result<ChannelPtr> connect_loopback(const Credential& client,
                                    const Credential& server,
                                    FrameHandler handler) {
  if (Status s = server.check_peer(client.self_dn, client.secret_fingerprint);
      !s.ok()) {
    return s.error();
  }
  if (Status s = client.check_peer(server.self_dn, server.secret_fingerprint);
      !s.ok()) {
    return s.error();
  }
  PeerIdentity client_id{client.self_dn, client.secret_fingerprint};
  PeerIdentity server_id{server.self_dn, server.secret_fingerprint};
  return ChannelPtr{std::make_unique<LoopbackChannel>(client_id, server_id,
                                                      std::move(handler))};
}

// -- TCP framing --------------------------------------------------------

namespace {

constexpr std::size_t kMaxFrame = 64u << 20;

Status write_all(int fd, const char* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return make_error(Errc::Closed, std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return ok_status();
}

Status read_all(int fd, char* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::recv(fd, data, len, 0);
    if (n == 0) return make_error(Errc::Closed, "connection closed");
    if (n < 0) {
      if (errno == EINTR) continue;
      return make_error(Errc::Closed, std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return ok_status();
}

}  // namespace

Status write_frame(int fd, std::string_view payload) {
  unsigned char hdr[4];
  std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  hdr[0] = static_cast<unsigned char>(len >> 24);
  hdr[1] = static_cast<unsigned char>(len >> 16);
  hdr[2] = static_cast<unsigned char>(len >> 8);
  hdr[3] = static_cast<unsigned char>(len);
  if (Status s = write_all(fd, reinterpret_cast<char*>(hdr), 4); !s.ok()) return s;
  return write_all(fd, payload.data(), payload.size());
}

Result<std::string> read_frame(int fd) {
  unsigned char hdr[4];
  if (Status s = read_all(fd, reinterpret_cast<char*>(hdr), 4); !s.ok()) {
    return s.error();
  }
  std::uint32_t len = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                      (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
  if (len > kMaxFrame) {
    return make_error(Errc::ProtocolError, "frame too large");
  }
  std::string payload(len, '\0');
  if (len > 0) {
    if (Status s = read_all(fd, payload.data(), len); !s.ok()) return s.error();
  }
  return payload;
}

// -- TCP channel --------------------------------------------------------

namespace {

class TcpChannel final : public Channel {
 public:
  TcpChannel(int fd, PeerIdentity local, PeerIdentity remote)
      : Channel(std::move(local), std::move(remote)), fd_(fd) {}

  ~TcpChannel() override { close(); }

  Status send(std::string msg) override {
    if (fd_ < 0) return make_error(Errc::Closed, "channel closed");
    if (Status s = write_frame(fd_, msg); !s.ok()) return s;
    record(Direction::Sent, msg);
    return ok_status();
  }

  Result<std::string> recv() override {
    if (fd_ < 0) return make_error(Errc::Closed, "channel closed");
    auto r = read_frame(fd_);
    if (!r.ok()) return r;
    record(Direction::Received, r.value());
    return r;
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

std::string render_hello(const Credential& c, bool insecure) {
  std::string s = "HELLO\ndn: " + c.self_dn.str() + "\nfp: " +
                  c.secret_fingerprint + "\n";
  if (insecure) s += "insecure: true\n";
  return s;
}

struct HandshakeClaim {
  DistinguishedName dn;
  std::string fp;
  bool insecure = false;
};

Result<HandshakeClaim> parse_claim(std::string_view frame,
                                   std::string_view expect_verb) {
  auto lines = split_lines(frame);
  if (lines.empty() || lines[0] != expect_verb) {
    return make_error(Errc::HandshakeFailed,
                      "expected " + std::string(expect_verb));
  }
  HandshakeClaim claim;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.rfind("dn: ", 0) == 0) {
      auto dn = DistinguishedName::parse(line.substr(4));
      if (!dn.ok()) return dn.error();
      claim.dn = dn.take();
    } else if (line.rfind("fp: ", 0) == 0) {
      claim.fp = std::string(line.substr(4));
    } else if (line == "insecure: true") {
      claim.insecure = true;
    }
  }
  if (claim.dn.empty()) {
    return make_error(Errc::HandshakeFailed, "claim without dn");
  }
  return claim;
}

Error deny_to_error(std::string_view line) {
  if (line.rfind("DENY ", 0) == 0) {
    std::string_view code = line.substr(5);
    if (auto c = errc_from_name(code)) return make_error(*c, "peer denied");
    return make_error(Errc::HandshakeFailed, std::string(code));
  }
  return make_error(Errc::HandshakeFailed, std::string(line));
}

}  // namespace

TcpListener::TcpListener(TcpListener&& o) noexcept : fd_(o.fd_), port_(o.port_) {
  o.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    port_ = o.port_;
    o.fd_ = -1;
  }
  return *this;
}

TcpListener::~TcpListener() { close(); }

Result<TcpListener> TcpListener::bind(const std::string& host, int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return make_error(Errc::IoError, std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = INADDR_ANY;
  } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return make_error(Errc::ConfigError, "bad listen address: " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(fd, 64) != 0) {
    Error e = make_error(Errc::IoError, std::strerror(errno));
    ::close(fd);
    return e;
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  TcpListener l;
  l.fd_ = fd;
  l.port_ = ntohs(addr.sin_port);
  return l;
}

Result<int> TcpListener::accept_fd() {
  if (fd_ < 0) return make_error(Errc::Closed, "listener closed");
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return make_error(Errc::Closed, std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

Result<ChannelPtr> tcp_connect(const std::string& host_port,
                               const Credential& client, bool insecure) {
  std::size_t colon = host_port.rfind(':');
  if (colon == std::string::npos) {
    return make_error(Errc::ConfigError, "address not host:port: " + host_port);
  }
  std::string host = host_port.substr(0, colon);
  std::string port = host_port.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) {
    return make_error(Errc::Unreachable, "cannot resolve " + host_port);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    return make_error(Errc::Unreachable, "cannot connect to " + host_port);
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  auto fail = [&](Error e) -> Result<ChannelPtr> {
    ::close(fd);
    return e;
  };

  if (Status s = write_frame(fd, render_hello(client, insecure)); !s.ok()) {
    return fail(s.error());
  }
  auto reply = read_frame(fd);
  if (!reply.ok()) return fail(reply.error());
  if (reply.value().rfind("DENY", 0) == 0) {
    return fail(deny_to_error(split_lines(reply.value())[0]));
  }
  auto claim = parse_claim(reply.value(), "WELCOME");
  if (!claim.ok()) return fail(claim.error());
  if (!insecure) {
    if (Status s = client.check_peer(claim.value().dn, claim.value().fp);
        !s.ok()) {
      write_frame(fd, "DENY " + std::string(errc_name(s.error().code)) + "\n");
      return fail(s.error());
    }
  }
  if (Status s = write_frame(fd, "CONFIRM\n"); !s.ok()) return fail(s.error());

  PeerIdentity local{client.self_dn, client.secret_fingerprint};
  PeerIdentity remote{claim.value().dn, claim.value().fp};
  return ChannelPtr{std::make_unique<TcpChannel>(fd, local, remote)};
}

Result<ChannelPtr> tcp_serve_handshake(int fd, const Credential& server,
                                       bool allow_insecure) {
  auto fail = [&](Error e) -> Result<ChannelPtr> {
    ::close(fd);
    return e;
  };
  auto hello = read_frame(fd);
  if (!hello.ok()) return fail(hello.error());
  auto claim = parse_claim(hello.value(), "HELLO");
  if (!claim.ok()) {
    write_frame(fd, "DENY handshake-failed\n");
    return fail(claim.error());
  }
  bool insecure = claim.value().insecure;
  if (insecure && !allow_insecure) {
    write_frame(fd, "DENY not-authorized\n");
    return fail(make_error(Errc::NotAuthorized, "insecure mode not allowed"));
  }
  if (!insecure) {
    if (Status s = server.check_peer(claim.value().dn, claim.value().fp);
        !s.ok()) {
      write_frame(fd, "DENY " + std::string(errc_name(s.error().code)) + "\n");
      return fail(s.error());
    }
  }
  std::string welcome = "WELCOME\ndn: " + server.self_dn.str() + "\nfp: " +
                        server.secret_fingerprint + "\n";
  if (Status s = write_frame(fd, welcome); !s.ok()) return fail(s.error());
  auto confirm = read_frame(fd);
  if (!confirm.ok()) return fail(confirm.error());
  auto lines = split_lines(confirm.value());
  if (lines.empty() || lines[0] != "CONFIRM") {
    return fail(lines.empty() ? make_error(Errc::HandshakeFailed, "no confirm")
                              : deny_to_error(lines[0]));
  }
  PeerIdentity local{server.self_dn, server.secret_fingerprint};
  PeerIdentity remote{claim.value().dn, claim.value().fp};
  return ChannelPtr{std::make_unique<TcpChannel>(fd, local, remote)};
}

}  // namespace gums
