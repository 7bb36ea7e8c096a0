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
// The VO user database and registration authority. One implementation serves
// both the root VO and regional sub-VOs: direct registration through
// registrars, replicated arrival through the push protocol, and projected
// queries gated by a per-admin ACL. State is an append-only change log;
// the in-memory maps are a fold of it, and the on-disk journal is the same
// log, replayed at startup.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "gums/domain.hpp"
#include "gums/result.hpp"
#include "gums/transport.hpp"
#include "gums/wire.hpp"

namespace gums {

enum class ChangeKind { Added, Updated, RoleChanged, Removed };

std::string_view change_kind_name(ChangeKind k);
std::optional<ChangeKind> change_kind_from_name(std::string_view);

/// One audit-log event. `record` carries the post-change record for
/// Added/Updated/RoleChanged so that folding the log over an empty node
/// reproduces the user map exactly; Removed entries keep only the dn.
struct ChangeLogEntry {
  std::uint64_t seq = 0;
  ChangeKind kind = ChangeKind::Added;
  DistinguishedName dn;
  Timestamp at{};
  DistinguishedName actor;
  std::optional<UserRecord> record;
};

struct StoredUser {
  UserRecord record;
  DistinguishedName origin;  // actor that first inserted this dn
  std::uint64_t seq = 0;     // seq of the entry that created/last changed it
};

struct QueryResult {
  std::vector<UserRecord> records;  // projected, sorted by dn
  AttributeProjection effective;    // want ∩ allowed(actor)
};

class RegistryNode {
 public:
  explicit RegistryNode(std::string vo_path) : vo_path_(std::move(vo_path)) {}

  /// Opens (or creates) the journal and replays it. A partial trailing line
  /// from an interrupted write is discarded; corruption elsewhere is an error.
  Status attach_journal(const std::filesystem::path& path);

  const std::string& vo_path() const { return vo_path_; }

  // Operator actions (no precondition beyond being on the admin channel).
  Status add_registrar(const DistinguishedName& dn);
  Status enroll_site_admin(const DistinguishedName& admin,
                           const AttributeProjection& allowed);

  // Registrar-gated mutations.
  Result<std::uint64_t> register_user(const PeerIdentity& actor, UserRecord record);
  Result<std::uint64_t> assign_roles(const PeerIdentity& actor,
                                     const DistinguishedName& dn,
                                     std::set<RoleName> roles);
  Result<std::uint64_t> remove_user(const PeerIdentity& actor,
                                    const DistinguishedName& dn);

  /// Replication arrivals. The pushing peer must itself be enrolled as a
  /// registrar here. Record blocks upsert idempotently (identical re-push is
  /// a no-op); tombstones remove. A differing record pushed by a peer other
  /// than the one that first inserted the dn is a ConflictingRecord.
  /// Validation matches direct registration, restricted to the attributes
  /// the block carries. Returns the number of entries that changed state.
  Result<std::uint64_t> apply_push(const PeerIdentity& actor,
                                   const std::vector<PushBlock>& blocks);

  /// ACL-gated projected read; silently narrows `want` to the actor's
  /// allowance. Sorted by dn.
  Result<QueryResult> query_users(const PeerIdentity& actor,
                                  const AttributeProjection& want) const;

  std::vector<ChangeLogEntry> log_since(std::uint64_t seq) const;
  std::uint64_t latest_seq() const;

  std::map<DistinguishedName, StoredUser> users_snapshot() const;
  std::set<DistinguishedName> registrars() const;
  std::map<DistinguishedName, AttributeProjection> acl_snapshot() const;
  std::size_t user_count() const;

  std::string dump_blocks() const;

 private:
  Result<std::uint64_t> append_entry_locked(ChangeKind kind,
                                            const DistinguishedName& dn,
                                            const DistinguishedName& actor,
                                            std::optional<UserRecord> record);
  void apply_entry_locked(const ChangeLogEntry& e);
  Status journal_line(const std::string& line);

  std::string vo_path_;
  mutable std::shared_mutex mu_;
  std::set<DistinguishedName> registrars_;
  std::map<DistinguishedName, StoredUser> users_;
  std::map<DistinguishedName, AttributeProjection> acl_;
  std::vector<ChangeLogEntry> log_;
  std::uint64_t next_seq_ = 1;
  std::optional<std::ofstream> journal_;
};

/// Dispatches one protocol frame against the node on behalf of an
/// authenticated actor and renders the reply frame. Used verbatim by the TCP
/// server and by in-process loopback connections.
std::string handle_registry_frame(RegistryNode& node, const PeerIdentity& actor,
                                  const std::string& frame);

FrameHandler registry_frame_handler(RegistryNode& node);

/// TCP front end: accept loop plus one thread per connection.
class RegistryServer {
 public:
  RegistryServer(RegistryNode& node, Credential credential,
                 bool allow_insecure = false);
  ~RegistryServer();

  Result<int> start(const std::string& host, int port);
  void stop();

 private:
  void accept_loop();

  RegistryNode& node_;
  Credential credential_;
  bool allow_insecure_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::mutex conns_mu_;
  std::vector<std::thread> conn_threads_;
  std::set<int> live_fds_;
  std::atomic<bool> stopping_{false};
};

}  // namespace gums
