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
// The site's durable database: per-user lifecycle state, full transition
// history, the pre-created account pool, the pending-request queue, and
// provisioning request/result correlation. Persistence is a single-writer
// append-only JSON-lines journal plus an optional snapshot; state is
// rebuilt at startup by replay. Sync cycles write as all-or-nothing
// batches: ops buffered between begin_batch/commit_batch hit the disk in
// one write, bracketed by begin/commit marker lines, and replay discards a
// trailing batch that never committed.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gums/domain.hpp"
#include "gums/result.hpp"
#include "gums/timeutil.hpp"

namespace gums {

enum class UserStatus { PendingCreate, Active, Held, Disabled, Banned };

std::string_view user_status_name(UserStatus s);
std::optional<UserStatus> user_status_from_name(std::string_view);

/// Legal lifecycle edges. `from == to` is always fine (a data update, not a
/// transition). Banned is reachable from anywhere and absorbing; only the
/// operator unban path (Store::unban_user) leaves it.
bool transition_allowed(std::optional<UserStatus> from, UserStatus to);

struct SiteUserState {
  DistinguishedName dn;
  UserStatus status = UserStatus::PendingCreate;
  std::optional<std::string> local_account;
  std::set<std::string> groups;
  std::string source_vo;
  Timestamp first_seen{};
  Timestamp last_updated{};
  UserRecord snapshot;  // the projected record last seen from the VO
};

struct HistoryEvent {
  DistinguishedName dn;
  std::optional<UserStatus> from;  // empty for the first event of a dn
  UserStatus to = UserStatus::PendingCreate;
  Timestamp at{};
  std::string cause;
};

enum class RequestKind { CreateGroup, AddToGroup, RemoveFromGroup, ReviewAccount };
enum class RequestStatus { Open, Done, Rejected };

std::string_view request_kind_name(RequestKind);
std::optional<RequestKind> request_kind_from_name(std::string_view);
std::string_view request_status_name(RequestStatus);

/// A recorded administrative action awaiting a human (or auto-approval).
struct PendingRequest {
  std::string id;
  RequestKind kind = RequestKind::ReviewAccount;
  RoleName role;          // CreateGroup
  DistinguishedName dn;   // AddToGroup / RemoveFromGroup / ReviewAccount
  std::string group;      // AddToGroup / RemoveFromGroup
  std::string vo;         // namespace for group membership changes
  std::string related;    // provisioning request id, for ReviewAccount
  Timestamp created_at{};
  RequestStatus status = RequestStatus::Open;
  std::string note;

  std::string describe() const;
};

enum class ProvisionKind { Create, Disable, Reenable };

std::string_view provision_kind_name(ProvisionKind);
std::optional<ProvisionKind> provision_kind_from_name(std::string_view);

struct ProvisionRequest {
  std::string id;
  DistinguishedName dn;
  ProvisionKind kind = ProvisionKind::Create;
  std::string cause;  // carried into the history event on success
  Timestamp at{};
};

struct ProvisionResult {
  std::string id;
  bool success = false;
  std::optional<std::string> account;
  std::string reason;
};

/// Thrown by the test-only crash plan to emulate the process dying
/// mid-operation. Never thrown in production configurations.
struct SimulatedCrash {};

struct CrashPlan {
  std::uint64_t after_ops = 0;  // throw when the N-th op of this plan lands
  bool torn_commit = false;     // die halfway through the commit write
};

class Store {
 public:
  /// In-memory store (simulation harness); nothing touches the disk.
  Store() = default;

  Store(Store&&) = default;
  Store& operator=(Store&&) = default;

  /// Opens dir/journal.log (and dir/snapshot.json when present) and replays.
  static Result<Store> open(const std::filesystem::path& dir);

  bool initialized() const { return initialized_; }

  /// Creates the schema and populates the pool with zero-padded names
  /// prefix+NNN for N in [start, end]. Refuses to run twice unless forced;
  /// force resets the store completely.
  Status initdb(const std::string& prefix, int start, int end, bool force);

  /// Idempotent per dn: a dn that already holds an account gets it back;
  /// otherwise the lowest-ordered free account is bound.
  Result<std::string> allocate_account(const DistinguishedName& dn);

  /// Frees an account whose holder is Banned everywhere. Operator action.
  Status release_account(const std::string& account);

  Status upsert_state(SiteUserState s, const std::string& cause);
  Result<SiteUserState> get_state(const std::string& vo,
                                  const DistinguishedName& dn) const;
  std::vector<SiteUserState> list_by_status(UserStatus) const;
  std::vector<SiteUserState> states_for_vo(const std::string& vo) const;
  std::vector<SiteUserState> all_states() const;

  Result<std::vector<HistoryEvent>> history(const DistinguishedName& dn) const;
  const std::vector<HistoryEvent>& global_history() const { return history_; }

  Result<PendingRequest> raise_request(PendingRequest req);
  std::optional<PendingRequest> find_open_request(const PendingRequest& like) const;
  Result<PendingRequest> complete_request(const std::string& id, bool done,
                                          const std::string& note);
  std::vector<PendingRequest> open_requests() const;
  std::vector<PendingRequest> all_requests() const;

  Result<ProvisionRequest> new_provision_request(const DistinguishedName& dn,
                                                 ProvisionKind kind,
                                                 const std::string& cause);
  /// False when the result id was already recorded (duplicate delivery).
  Result<bool> record_provision_result(const ProvisionResult& res);
  Result<ProvisionRequest> provision_request(const std::string& id) const;
  std::vector<ProvisionRequest> outstanding_provisions() const;
  bool has_outstanding(const DistinguishedName& dn, ProvisionKind kind) const;

  Status register_group(const RoleName& role, const std::string& group);
  const std::map<RoleName, std::string>& registered_rolemap() const {
    return rolemap_;
  }

  Status add_ban(const DistinguishedName& dn);
  /// Clears the operator ban (and masks a policy-file ban); every Banned
  /// state for the dn moves to Disabled so the next sync can re-admit.
  Status unban_user(const DistinguishedName& dn);
  const std::set<DistinguishedName>& operator_bans() const { return bans_; }
  const std::set<DistinguishedName>& operator_unbans() const { return unbans_; }

  // Pool introspection.
  std::vector<std::string> pool_accounts() const { return pool_names_; }
  std::size_t pool_free() const { return free_.size(); }
  const std::map<std::string, DistinguishedName>& allocations() const {
    return allocations_;
  }

  void begin_batch();
  Status commit_batch();
  void abort_batch();
  std::uint64_t committed_ops() const { return committed_ops_; }

  Status save_snapshot();

  std::string dump_blocks() const;
  nlohmann::json dump_json() const;

  void set_crash_plan(std::optional<CrashPlan> plan) {
    crash_plan_ = plan;
    crash_seen_ = 0;
  }

 private:
  using StateKey = std::pair<std::string, DistinguishedName>;

  Status add_op(nlohmann::json op);
  Status write_line(const std::string& line);
  Status apply_op(const nlohmann::json& op, bool replay);
  Status load_snapshot_file(const std::filesystem::path& path);
  nlohmann::json snapshot_json() const;

  // state
  bool initialized_ = false;
  std::string pool_prefix_;
  int pool_start_ = 0;
  int pool_end_ = -1;
  std::vector<std::string> pool_names_;
  std::set<std::string> free_;
  std::map<std::string, DistinguishedName> allocations_;
  std::map<DistinguishedName, std::string> account_by_dn_;
  std::map<StateKey, SiteUserState> users_;
  std::vector<HistoryEvent> history_;
  std::map<std::string, PendingRequest> requests_;
  std::map<std::string, ProvisionRequest> provisions_;
  std::set<std::string> provision_done_;
  std::map<RoleName, std::string> rolemap_;
  std::set<DistinguishedName> bans_;
  std::set<DistinguishedName> unbans_;
  std::uint64_t next_request_id_ = 1;
  std::uint64_t next_provision_id_ = 1;

  // journal
  std::filesystem::path dir_;
  std::optional<std::ofstream> journal_;
  std::uint64_t next_op_seq_ = 1;
  std::uint64_t snapshot_op_seq_ = 0;  // ops covered by the snapshot file
  bool in_batch_ = false;
  std::vector<std::string> batch_lines_;
  std::uint64_t batch_ops_ = 0;
  std::uint64_t committed_ops_ = 0;

  std::optional<CrashPlan> crash_plan_;
  std::uint64_t crash_seen_ = 0;
};

}  // namespace gums
