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
// The site daemon engine. Every cycle: pull projected membership from the
// configured VO endpoints over authenticated channels, diff against the
// local store, apply policy, drive asynchronous account provisioning,
// reconcile group membership through the pending-request queue, and
// regenerate the gridmap. A cycle's store writes land as one atomic journal
// batch, so the daemon may die at any instant and resume cleanly.

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gums/domain.hpp"
#include "gums/gridmap.hpp"
#include "gums/policy.hpp"
#include "gums/result.hpp"
#include "gums/store.hpp"
#include "gums/transport.hpp"

namespace gums {

struct EndpointSpec {
  std::string address;
  std::string vo_path;
  AttributeProjection projection;  // always contains dn by construction
};

struct SyncConfig {
  std::vector<EndpointSpec> endpoints;
  std::chrono::seconds interval{60};
  Credential credential;
  bool auto_approve = false;
  bool insecure = false;  // harness only: skip transport trust checks
  std::string pool_prefix = "grid";
  int pool_start = 1;
  int pool_end = 99;
  std::filesystem::path policy_file;
  std::filesystem::path notify_file;
  std::filesystem::path gridmap_path;
  std::filesystem::path data_dir;
  std::string provision_backend = "auto";  // auto | queue
  int provision_latency_ms = 0;
  std::string admin_email = "root@localhost";
  int snapshot_every_cycles = 0;  // 0 = never

  Status validate() const;
};

/// Three-way reconciliation of one VO's remote list against local state.
/// Held and Disabled users count as absent locally (they re-enter through
/// `added` for re-admission or revival); Banned users are excluded in both
/// directions; only Active users can depart.
struct SyncDiff {
  std::vector<UserRecord> added;
  std::vector<std::pair<UserRecord, UserRecord>> changed;  // old snapshot, new
  std::vector<DistinguishedName> departed;
};

Result<SyncDiff> compute_diff(const std::vector<UserRecord>& remote,
                              const std::vector<SiteUserState>& local);

/// Backend contract for account creation/disabling, deliberately
/// asynchronous: submit now, results surface from drain() arbitrarily later.
class ProvisionBackend {
 public:
  virtual ~ProvisionBackend() = default;
  virtual void submit(const ProvisionRequest& req) = 0;
  virtual std::vector<ProvisionResult> drain() = 0;
};

/// Allocates from the pool immediately and emits synthetic results after a
/// configurable number of drain rounds. Powers the simulation harness.
class AutoBackend final : public ProvisionBackend {
 public:
  using LatencyFn = std::function<int(const ProvisionRequest&)>;

  AutoBackend(Store& store, LatencyFn latency_cycles);

  void submit(const ProvisionRequest& req) override;
  std::vector<ProvisionResult> drain() override;

 private:
  struct Pending {
    ProvisionResult result;
    int due;
  };
  Store* store_;
  LatencyFn latency_;
  std::vector<Pending> pending_;
};

/// Writes ReviewAccount pending requests for a human; results come back
/// through `gums complete`.
class QueueBackend final : public ProvisionBackend {
 public:
  QueueBackend(Store& store, NotificationSink& sink, std::string admin_to);

  void submit(const ProvisionRequest& req) override;
  std::vector<ProvisionResult> drain() override;
  void deliver(ProvisionResult res);

 private:
  Store* store_;
  NotificationSink* sink_;
  std::string admin_to_;
  std::vector<ProvisionResult> ready_;
};

struct SyncReport {
  std::size_t endpoints_ok = 0;
  std::size_t endpoints_failed = 0;
  std::size_t pulled = 0;
  std::size_t added = 0;
  std::size_t changed = 0;
  std::size_t departed = 0;
  std::size_t banned = 0;
  std::size_t held = 0;
  std::size_t activated = 0;
  std::size_t disabled = 0;
  std::size_t provisions_issued = 0;
  std::size_t results_applied = 0;
  std::size_t requests_raised = 0;
  std::size_t requests_completed = 0;
  std::size_t notifications = 0;
  std::uint64_t journal_ops = 0;
  std::size_t active_total = 0;
  std::vector<std::string> endpoint_errors;

  std::string to_string() const;
  nlohmann::json to_json() const;
};

using ConnectorFactory = std::function<Result<ChannelPtr>(
    const EndpointSpec&, const Credential&, bool insecure)>;

ConnectorFactory tcp_connector_factory();

class Site {
 public:
  /// Validates config and policy (including the reserved-accounts/pool
  /// overlap check) and wires the chosen provisioning backend.
  /// `latency_cycles` overrides the auto backend's latency (harness hook).
  static Result<std::unique_ptr<Site>> create(
      SyncConfig config, SitePolicy file_policy, Store store,
      std::unique_ptr<NotificationSink> sink, ConnectorFactory connect,
      AutoBackend::LatencyFn latency_cycles = {},
      std::vector<PolicyHook> hooks = {});

  struct PullOutcome {
    std::map<std::string, std::vector<UserRecord>> by_vo;  // successful only
    std::vector<std::string> errors;
  };

  PullOutcome pull();

  /// One full cycle: pull, diff, apply, drain provisioning, auto-approve
  /// (when configured), regenerate the gridmap. All store writes in one
  /// journal batch.
  Result<SyncReport> run_cycle();

  Status on_provision_result(const ProvisionResult& res, SyncReport* report);

  /// Completes a pending request and dispatches its side effects
  /// (group insertion, membership change, provisioning result delivery).
  Result<PendingRequest> complete(const std::string& id, bool done,
                                  const std::string& note);

  /// Inserts a role→group mapping and raises membership-change requests for
  /// every user carrying the role. Also closes matching open CreateGroup
  /// requests.
  Status register_group(const RoleName& role, const std::string& group);

  /// Group reconciliation pass; with `cron`, re-notifies open requests.
  SyncReport updategroup(bool cron);

  Status unban(const DistinguishedName& dn);

  SitePolicy effective_policy() const;
  Store& store() { return store_; }
  const Store& store() const { return store_; }
  const SyncConfig& config() const { return config_; }
  const std::string& gridmap_text() const { return gridmap_text_; }
  GridMapDocument current_gridmap() const;

 private:
  Site(SyncConfig config, SitePolicy file_policy, Store store,
       std::unique_ptr<NotificationSink> sink, ConnectorFactory connect,
       std::vector<PolicyHook> hooks);

  void apply_vo(const std::string& vo, const SyncDiff& diff,
                const SitePolicy& policy, SyncReport& report);
  void admit(const std::string& vo, const UserRecord& record,
             const SitePolicy& policy, SyncReport& report);
  void ban_sweep(const SitePolicy& policy, SyncReport& report);
  void issue_provision(const std::string& vo, const DistinguishedName& dn,
                       ProvisionKind kind, const std::string& cause,
                       SyncReport& report);
  void raise(PendingRequest req, SyncReport& report);
  void run_auto_approve(SyncReport& report);
  void desired_group_requests(const std::string& vo, const SiteUserState& state,
                              const SitePolicy& policy, SyncReport& report);
  void write_gridmap(SyncReport& report);

  SyncConfig config_;
  SitePolicy file_policy_;
  Store store_;
  std::unique_ptr<NotificationSink> sink_;
  std::unique_ptr<ProvisionBackend> backend_;
  QueueBackend* queue_backend_ = nullptr;  // set when backend is the queue
  ConnectorFactory connect_;
  std::vector<PolicyHook> hooks_;
  std::string gridmap_text_;
  std::size_t notifications_count_ = 0;
  int cycles_since_snapshot_ = 0;

  class CountingSink;
};

/// Blocking loop: run_cycle every interval until `stop` goes true.
void run_daemon(Site& site, const std::atomic<bool>& stop);

}  // namespace gums
