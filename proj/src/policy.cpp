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

#include "gums/policy.hpp"

#include <fstream>
#include <sstream>

#include "gums/wire.hpp"

namespace gums {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// First whitespace-delimited token; rest (trimmed) returned via `rest`.
std::string_view first_token(std::string_view s, std::string_view& rest) {
  std::size_t sp = s.find_first_of(" \t");
  if (sp == std::string_view::npos) {
    rest = {};
    return s;
  }
  rest = trim(s.substr(sp + 1));
  return s.substr(0, sp);
}

}  // namespace

Result<SitePolicy> parse_policy(std::string_view text) {
  SitePolicy policy;
  int lineno = 0;
  for (std::string_view raw : split_lines(text)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::string_view rest;
    std::string_view verb = first_token(line, rest);
    if (verb == "ban") {
      auto dn = DistinguishedName::parse(rest);
      if (!dn.ok()) {
        return make_error(Errc::ConfigError,
                          "policy line " + std::to_string(lineno) + ": " +
                              dn.error().to_string());
      }
      policy.banned_dns.insert(dn.take());
    } else if (verb == "reserve") {
      if (rest.empty()) {
        return make_error(Errc::ConfigError,
                          "policy line " + std::to_string(lineno) +
                              ": reserve needs an account");
      }
      policy.reserved_accounts.insert(std::string(rest));
    } else if (verb == "rolemap") {
      std::string_view group;
      std::string_view role = first_token(rest, group);
      if (role.empty() || group.empty()) {
        return make_error(Errc::ConfigError,
                          "policy line " + std::to_string(lineno) +
                              ": rolemap needs <role> <group>");
      }
      policy.role_group_map[std::string(role)] = std::string(group);
    } else if (verb == "hold-unknown-roles") {
      if (rest == "true") {
        policy.hold_unknown_roles = true;
      } else if (rest == "false") {
        policy.hold_unknown_roles = false;
      } else {
        return make_error(Errc::ConfigError,
                          "policy line " + std::to_string(lineno) +
                              ": expected true|false");
      }
    } else {
      return make_error(Errc::ConfigError,
                        "policy line " + std::to_string(lineno) +
                            ": unknown directive " + std::string(verb));
    }
  }
  return policy;
}

Result<SitePolicy> load_policy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return make_error(Errc::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_policy(ss.str());
}

Status check_policy_against_pool(const SitePolicy& policy,
                                 const std::vector<std::string>& pool_accounts) {
  for (const auto& account : pool_accounts) {
    if (policy.reserved_accounts.contains(account)) {
      return make_error(Errc::ConfigError,
                        "reserved account collides with pool: " + account);
    }
  }
  return ok_status();
}

Decision evaluate(const UserRecord& record, const SitePolicy& policy,
                  const std::vector<PolicyHook>& hooks) {
  // Bans dominate every other consideration.
  if (policy.banned_dns.contains(record.dn)) {
    return Decision{Decision::Ban, "banned-dn"};
  }
  for (const auto& hook : hooks) {
    Decision d = hook(record);
    if (d.kind != Decision::Admit) return d;
  }
  if (policy.hold_unknown_roles) {
    auto [groups, missing] = roles_to_groups(record.roles, policy);
    if (!missing.empty()) {
      std::string reason = "unknown-role:";
      for (const auto& r : missing) reason += " " + r;
      return Decision{Decision::Hold, reason};
    }
  }
  return Decision{Decision::Admit, ""};
}

std::pair<std::set<std::string>, std::set<RoleName>> roles_to_groups(
    const std::set<RoleName>& roles, const SitePolicy& policy) {
  std::set<std::string> groups;
  std::set<RoleName> missing;
  for (const auto& role : roles) {
    auto it = policy.role_group_map.find(role);
    if (it == policy.role_group_map.end()) {
      missing.insert(role);
    } else {
      groups.insert(it->second);
    }
  }
  return {std::move(groups), std::move(missing)};
}

std::string render_notification(const Notification& n) {
  std::string out;
  out += "To: " + n.to + "\n";
  out += "Subject: " + n.subject + "\n";
  out += "\n";
  out += n.body;
  if (out.back() != '\n') out += '\n';
  out += "---\n";
  return out;
}

void FileSink::emit(const Notification& n) {
  std::ofstream out(path_, std::ios::app);
  out << render_notification(n);
}

Result<PendingRequest> raise_request(Store& store, NotificationSink& sink,
                                     const std::string& admin_to,
                                     PendingRequest req) {
  if (auto existing = store.find_open_request(req)) {
    return *existing;  // coalesced; the admin already has mail about it
  }
  auto raised = store.raise_request(std::move(req));
  if (!raised.ok()) return raised;
  Notification n;
  n.to = admin_to;
  n.subject = "[gums] action required: " +
              std::string(request_kind_name(raised.value().kind));
  n.body = raised.value().describe() + "\nrequest id: " + raised.value().id + "\n";
  n.related_request = raised.value().id;
  sink.emit(n);
  return raised;
}

std::size_t notify_open_requests(const Store& store, NotificationSink& sink,
                                 const std::string& admin_to) {
  std::size_t count = 0;
  for (const auto& req : store.open_requests()) {
    Notification n;
    n.to = admin_to;
    n.subject = "[gums] pending: " + std::string(request_kind_name(req.kind));
    n.body = req.describe() + "\nrequest id: " + req.id + "\n";
    n.related_request = req.id;
    sink.emit(n);
    ++count;
  }
  return count;
}

}  // namespace gums
