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
// Site policy: admission/ban/hold decisions, role-to-group mapping, and the
// pending-request queue through which all group and account changes pass on
// their way to a human administrator.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gums/domain.hpp"
#include "gums/result.hpp"
#include "gums/store.hpp"

namespace gums {

struct SitePolicy {
  std::set<DistinguishedName> banned_dns;
  std::set<std::string> reserved_accounts;  // existing non-grid local users
  std::map<RoleName, std::string> role_group_map;
  bool hold_unknown_roles = true;
};

/// Line format: `ban <dn>`, `reserve <account>`, `rolemap <role> <group>`,
/// `hold-unknown-roles {true|false}`, `#` comments.
Result<SitePolicy> parse_policy(std::string_view text);
Result<SitePolicy> load_policy_file(const std::filesystem::path& path);

/// Reserved accounts must never collide with the grid pool; checked at load.
Status check_policy_against_pool(const SitePolicy& policy,
                                 const std::vector<std::string>& pool_accounts);

struct Decision {
  enum Kind { Admit, Ban, Hold } kind = Admit;
  std::string reason;
};

/// Additional site-specific checks; composed left-to-right after the ban
/// check and before the unknown-role hold, first non-Admit wins.
using PolicyHook = std::function<Decision(const UserRecord&)>;

Decision evaluate(const UserRecord& record, const SitePolicy& policy,
                  const std::vector<PolicyHook>& hooks = {});

/// Image of the mapped roles plus the set of roles with no mapping.
std::pair<std::set<std::string>, std::set<RoleName>> roles_to_groups(
    const std::set<RoleName>& roles, const SitePolicy& policy);

// -- notifications ---------------------------------------------------------

struct Notification {
  std::string to;
  std::string subject;
  std::string body;
  std::string related_request;
};

class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  virtual void emit(const Notification& n) = 0;
};

class MemorySink final : public NotificationSink {
 public:
  void emit(const Notification& n) override { notifications_.push_back(n); }
  const std::vector<Notification>& notifications() const { return notifications_; }
  void clear() { notifications_.clear(); }

 private:
  std::vector<Notification> notifications_;
};

/// Appends mbox-like blocks: To:, Subject:, blank line, body, "---".
class FileSink final : public NotificationSink {
 public:
  explicit FileSink(std::filesystem::path path) : path_(std::move(path)) {}
  void emit(const Notification& n) override;

 private:
  std::filesystem::path path_;
};

std::string render_notification(const Notification& n);

// -- request workflow --------------------------------------------------------

/// Raises a request unless an identical one is already open (coalesced: no
/// second request, no second notification). Emits exactly one notification
/// per genuinely new request.
Result<PendingRequest> raise_request(Store& store, NotificationSink& sink,
                                     const std::string& admin_to,
                                     PendingRequest req);

/// Emits one notification per open request (cron-mode rescan).
std::size_t notify_open_requests(const Store& store, NotificationSink& sink,
                                 const std::string& admin_to);

}  // namespace gums
