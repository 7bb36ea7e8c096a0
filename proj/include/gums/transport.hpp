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
//
// Mutually-authenticated message transport. Identity assertion is done with
// fingerprint allow-lists: each peer presents its DN and credential
// fingerprint, and the other side accepts only a known (dn, fingerprint)
// pair. A deployment wanting real cryptography swaps this layer for TLS with
// client certificates; nothing above it changes.
//
// The same channel contract runs in-process (simulation harness, tests) and
// over TCP (real daemons). TCP messages are framed as a 4-byte big-endian
// length prefix followed by the UTF-8 payload.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gums/domain.hpp"
#include "gums/result.hpp"
#include "gums/timeutil.hpp"

namespace gums {

/// A peer's own identity plus the fingerprints it trusts.
struct Credential {
  DistinguishedName self_dn;
  std::string secret_fingerprint;
  std::map<DistinguishedName, std::string> trusted;  // dn -> fingerprint

  /// Rejects a credential whose trust map contradicts its own identity.
  Status validate() const;

  /// UnknownPeer / FingerprintMismatch for the given remote claim.
  Status check_peer(const DistinguishedName& dn, const std::string& fp) const;
};

enum class Direction { Sent, Received };

struct TranscriptEntry {
  Direction dir;
  std::string bytes;
  Timestamp at;
};

/// One endpoint of an authenticated duplex message stream. Owned by one
/// logical task at a time; may be handed between threads but not shared.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual Status send(std::string msg) = 0;
  /// Blocks until a message arrives; Errc::Closed once the peer is gone and
  /// the inbound queue has drained.
  virtual Result<std::string> recv() = 0;
  virtual void close() = 0;

  const PeerIdentity& local_identity() const { return local_; }
  const PeerIdentity& remote_identity() const { return remote_; }

  std::vector<TranscriptEntry> transcript() const;

 protected:
  Channel(PeerIdentity local, PeerIdentity remote)
      : local_(std::move(local)), remote_(std::move(remote)) {}

  void record(Direction dir, const std::string& bytes);

  PeerIdentity local_;
  PeerIdentity remote_;

 private:
  mutable std::mutex transcript_mu_;
  std::vector<TranscriptEntry> transcript_;
};

using ChannelPtr = std::unique_ptr<Channel>;

/// In-process mutual authentication. Succeeds iff each side's (dn,
/// fingerprint) appears in the other's trust map; the check order (server
/// checks client, then client checks server) matches the wire handshake.
Result<std::pair<ChannelPtr, ChannelPtr>> handshake(const Credential& client,
                                                    const Credential& server);

/// In-process client channel whose peer is a request handler. Each sent
/// frame is answered synchronously by `handler`; replies are queued for
/// recv(). Runs the same trust checks as `handshake`.
using FrameHandler =
    std::function<std::string(const PeerIdentity& actor, const std::string&)>;
Result<ChannelPtr> connect_loopback(const Credential& client,
                                    const Credential& server,
                                    FrameHandler handler);

// -- TCP ---------------------------------------------------------------

Status write_frame(int fd, std::string_view payload);
Result<std::string> read_frame(int fd);

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&&) noexcept;
  TcpListener& operator=(TcpListener&&) noexcept;
  ~TcpListener();

  static Result<TcpListener> bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Blocks until a connection arrives; Errc::Closed after close().
  Result<int> accept_fd();
  void close();

 private:
  int fd_ = -1;
  int port_ = 0;
};

/// Dials host:port and runs the client side of the handshake.
/// `insecure` skips both trust checks (harness only; the server must have
/// been started with insecure mode as well).
Result<ChannelPtr> tcp_connect(const std::string& host_port,
                               const Credential& client,
                               bool insecure = false);

/// Runs the server side of the handshake on an accepted socket.
Result<ChannelPtr> tcp_serve_handshake(int fd, const Credential& server,
                                       bool allow_insecure = false);

}  // namespace gums
