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

#include "gums/store.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "gums/wire.hpp"

namespace gums {

using nlohmann::json;

namespace {

const char* const kStatusNames[] = {"pending-create", "active", "held",
                                    "disabled", "banned"};
const char* const kRequestKindNames[] = {"create-group", "add-to-group",
                                         "remove-from-group", "review-account"};
const char* const kRequestStatusNames[] = {"open", "done", "rejected"};
const char* const kProvisionKindNames[] = {"create", "disable", "reenable"};

std::uint64_t id_suffix(const std::string& id) {
  std::size_t dash = id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoull(id.substr(dash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

std::string_view user_status_name(UserStatus s) {
  return kStatusNames[static_cast<int>(s)];
}

std::optional<UserStatus> user_status_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kStatusNames); ++i) {
    if (name == kStatusNames[i]) return static_cast<UserStatus>(i);
  }
  return std::nullopt;
}

std::string_view request_kind_name(RequestKind k) {
  return kRequestKindNames[static_cast<int>(k)];
}

std::optional<RequestKind> request_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kRequestKindNames); ++i) {
    if (name == kRequestKindNames[i]) return static_cast<RequestKind>(i);
  }
  return std::nullopt;
}

std::string_view request_status_name(RequestStatus s) {
  return kRequestStatusNames[static_cast<int>(s)];
}

std::string_view provision_kind_name(ProvisionKind k) {
  return kProvisionKindNames[static_cast<int>(k)];
}

std::optional<ProvisionKind> provision_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kProvisionKindNames); ++i) {
    if (name == kProvisionKindNames[i]) return static_cast<ProvisionKind>(i);
  }
  return std::nullopt;
}

bool transition_allowed(std::optional<UserStatus> from, UserStatus to) {
  if (to == UserStatus::Banned) return true;  // reachable from anywhere
  if (!from) {
    return to == UserStatus::PendingCreate || to == UserStatus::Held;
  }
  if (*from == to) return true;
  switch (*from) {
    case UserStatus::PendingCreate:
      return to == UserStatus::Active || to == UserStatus::Held;
    case UserStatus::Active:
      return to == UserStatus::Disabled;
    case UserStatus::Disabled:
      return to == UserStatus::Active;
    case UserStatus::Held:
      return to == UserStatus::PendingCreate;
    case UserStatus::Banned:
      return false;  // absorbing; operator unban is a separate path
  }
  return false;
}

std::string PendingRequest::describe() const {
  std::string s{request_kind_name(kind)};
  switch (kind) {
    case RequestKind::CreateGroup:
      s += " role=" + role;
      break;
    case RequestKind::AddToGroup:
    case RequestKind::RemoveFromGroup:
      s += " dn=" + dn.str() + " group=" + group + " vo=" + vo;
      break;
    case RequestKind::ReviewAccount:
      s += " dn=" + dn.str();
      break;
  }
  return s;
}

// -- serialization -------------------------------------------------------

namespace {

json state_to_json(const SiteUserState& s) {
  json j;
  j["vo"] = s.source_vo;
  j["dn"] = s.dn.str();
  j["status"] = std::string(user_status_name(s.status));
  if (s.local_account) j["account"] = *s.local_account;
  if (!s.groups.empty()) j["groups"] = s.groups;
  j["first"] = timestamp_to_unix(s.first_seen);
  j["last"] = timestamp_to_unix(s.last_updated);
  j["snapshot"] = record_to_json(s.snapshot);
  return j;
}

SiteUserState state_from_json(const json& j) {
  SiteUserState s;
  s.source_vo = j.value("vo", "");
  s.dn = DistinguishedName::unchecked(j.at("dn").get<std::string>());
  s.status = user_status_from_name(j.at("status").get<std::string>())
                 .value_or(UserStatus::PendingCreate);
  if (j.contains("account")) s.local_account = j["account"].get<std::string>();
  if (j.contains("groups")) {
    for (const auto& g : j["groups"]) s.groups.insert(g.get<std::string>());
  }
  s.first_seen = timestamp_from_unix(j.value("first", std::int64_t{0}));
  s.last_updated = timestamp_from_unix(j.value("last", std::int64_t{0}));
  if (j.contains("snapshot")) {
    auto rec = record_from_json(j["snapshot"]);
    if (rec.ok()) s.snapshot = rec.take();
  }
  return s;
}

json request_to_json(const PendingRequest& r) {
  json j;
  j["id"] = r.id;
  j["kind"] = std::string(request_kind_name(r.kind));
  if (!r.role.empty()) j["role"] = r.role;
  if (!r.dn.empty()) j["dn"] = r.dn.str();
  if (!r.group.empty()) j["group"] = r.group;
  if (!r.vo.empty()) j["vo"] = r.vo;
  if (!r.related.empty()) j["related"] = r.related;
  j["at"] = timestamp_to_unix(r.created_at);
  return j;
}

PendingRequest request_from_json(const json& j) {
  PendingRequest r;
  r.id = j.at("id").get<std::string>();
  r.kind = request_kind_from_name(j.at("kind").get<std::string>())
               .value_or(RequestKind::ReviewAccount);
  r.role = j.value("role", "");
  if (j.contains("dn")) r.dn = DistinguishedName::unchecked(j["dn"].get<std::string>());
  r.group = j.value("group", "");
  r.vo = j.value("vo", "");
  r.related = j.value("related", "");
  r.created_at = timestamp_from_unix(j.value("at", std::int64_t{0}));
  r.status = RequestStatus::Open;
  return r;
}

json provision_to_json(const ProvisionRequest& p) {
  json j;
  j["id"] = p.id;
  j["dn"] = p.dn.str();
  j["kind"] = std::string(provision_kind_name(p.kind));
  if (!p.cause.empty()) j["cause"] = p.cause;
  j["at"] = timestamp_to_unix(p.at);
  return j;
}

ProvisionRequest provision_from_json(const json& j) {
  ProvisionRequest p;
  p.id = j.at("id").get<std::string>();
  p.dn = DistinguishedName::unchecked(j.at("dn").get<std::string>());
  p.kind = provision_kind_from_name(j.at("kind").get<std::string>())
               .value_or(ProvisionKind::Create);
  p.cause = j.value("cause", "");
  p.at = timestamp_from_unix(j.value("at", std::int64_t{0}));
  return p;
}

std::string pool_account_name(const std::string& prefix, int number, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix.c_str(), width, number);
  return buf;
}

}  // namespace

// -- journal plumbing ----------------------------------------------------

Status Store::write_line(const std::string& line) {
  if (!journal_) return ok_status();
  *journal_ << line << '\n';
  journal_->flush();
  if (!*journal_) return make_error(Errc::IoError, "journal write failed");
  return ok_status();
}

Status Store::add_op(json op) {
  op["n"] = next_op_seq_++;
  if (crash_plan_ && !crash_plan_->torn_commit) {
    if (++crash_seen_ >= crash_plan_->after_ops) {
      crash_plan_.reset();
      throw SimulatedCrash{};
    }
  }
  std::string line = op.dump();
  if (in_batch_) {
    batch_lines_.push_back(std::move(line));
    ++batch_ops_;
    return ok_status();
  }
  ++committed_ops_;
  return write_line(line);
}

void Store::begin_batch() {
  in_batch_ = true;
  batch_lines_.clear();
  batch_ops_ = 0;
}

Status Store::commit_batch() {
  in_batch_ = false;
  if (batch_lines_.empty()) return ok_status();
  std::string blob = "{\"t\":\"begin\"}\n";
  for (const auto& line : batch_lines_) {
    blob += line;
    blob += '\n';
  }
  blob += "{\"t\":\"commit\"}\n";
  committed_ops_ += batch_ops_;
  batch_lines_.clear();
  batch_ops_ = 0;
  if (!journal_) return ok_status();
  if (crash_plan_ && crash_plan_->torn_commit) {
    crash_plan_.reset();
    journal_->write(blob.data(),
                    static_cast<std::streamsize>(blob.size() / 2));
    journal_->flush();
    throw SimulatedCrash{};
  }
  journal_->write(blob.data(), static_cast<std::streamsize>(blob.size()));
  journal_->flush();
  if (!*journal_) return make_error(Errc::IoError, "journal write failed");
  return ok_status();
}

void Store::abort_batch() {
  in_batch_ = false;
  batch_lines_.clear();
  batch_ops_ = 0;
}

// -- op application (live path and replay share this) ---------------------

Status Store::apply_op(const json& op, bool replay) {
  const std::string t = op.value("t", "");
  if (t == "init") {
    initialized_ = true;
    pool_prefix_ = op.at("prefix").get<std::string>();
    pool_start_ = op.at("start").get<int>();
    pool_end_ = op.at("end").get<int>();
    int width = 3;
    for (int v = pool_end_; v >= 1000; v /= 10) ++width;
    pool_names_.clear();
    free_.clear();
    allocations_.clear();
    account_by_dn_.clear();
    for (int n = pool_start_; n <= pool_end_; ++n) {
      pool_names_.push_back(pool_account_name(pool_prefix_, n, width));
      free_.insert(pool_names_.back());
    }
  } else if (t == "alloc") {
    std::string account = op.at("account").get<std::string>();
    auto dn = DistinguishedName::unchecked(op.at("dn").get<std::string>());
    allocations_[account] = dn;
    account_by_dn_[dn] = account;
    free_.erase(account);
  } else if (t == "state") {
    SiteUserState s = state_from_json(op);
    StateKey key{s.source_vo, s.dn};
    auto it = users_.find(key);
    std::optional<UserStatus> from;
    if (it != users_.end()) from = it->second.status;
    if (!from || *from != s.status) {
      HistoryEvent ev;
      ev.dn = s.dn;
      ev.from = from;
      ev.to = s.status;
      ev.at = timestamp_from_unix(op.value("last", std::int64_t{0}));
      ev.cause = op.value("cause", "");
      history_.push_back(std::move(ev));
    }
    users_[key] = std::move(s);
  } else if (t == "req") {
    PendingRequest r = request_from_json(op);
    next_request_id_ = std::max(next_request_id_, id_suffix(r.id) + 1);
    requests_[r.id] = std::move(r);
  } else if (t == "reqdone") {
    auto it = requests_.find(op.at("id").get<std::string>());
    if (it != requests_.end()) {
      it->second.status = op.value("outcome", "done") == "done"
                              ? RequestStatus::Done
                              : RequestStatus::Rejected;
      it->second.note = op.value("note", "");
    }
  } else if (t == "prov") {
    ProvisionRequest p = provision_from_json(op);
    next_provision_id_ = std::max(next_provision_id_, id_suffix(p.id) + 1);
    provisions_[p.id] = std::move(p);
  } else if (t == "provdone") {
    provision_done_.insert(op.at("id").get<std::string>());
  } else if (t == "rolemap") {
    rolemap_[op.at("role").get<std::string>()] = op.at("group").get<std::string>();
  } else if (t == "ban") {
    auto dn = DistinguishedName::unchecked(op.at("dn").get<std::string>());
    bans_.insert(dn);
    unbans_.erase(dn);
  } else if (t == "unban") {
    auto dn = DistinguishedName::unchecked(op.at("dn").get<std::string>());
    unbans_.insert(dn);
    bans_.erase(dn);
  } else if (t == "release") {
    std::string account = op.at("account").get<std::string>();
    auto it = allocations_.find(account);
    if (it != allocations_.end()) {
      account_by_dn_.erase(it->second);
      allocations_.erase(it);
    }
    free_.insert(account);
  } else {
    if (replay) {
      return make_error(Errc::ConfigError, "unknown journal op: " + t);
    }
    return make_error(Errc::ConfigError, "unknown op: " + t);
  }
  return ok_status();
}

// -- open / replay --------------------------------------------------------

Result<Store> Store::open(const std::filesystem::path& dir) {
  Store store;
  store.dir_ = dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return make_error(Errc::IoError, ec.message());

  std::filesystem::path snap = dir / "snapshot.json";
  if (std::filesystem::exists(snap)) {
    if (Status s = store.load_snapshot_file(snap); !s.ok()) return s.error();
  }

  std::filesystem::path path = dir / "journal.log";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    if (!in) return make_error(Errc::IoError, "cannot read " + path.string());
    std::string line;
    std::uintmax_t offset = 0;
    std::uintmax_t safe_offset = 0;
    bool in_pending = false;
    std::vector<json> pending;
    bool torn = false;
    while (std::getline(in, line)) {
      std::uintmax_t line_end = offset + line.size() + 1;
      if (line.empty()) {
        offset = line_end;
        continue;
      }
      json op = json::parse(line, nullptr, false);
      if (op.is_discarded()) {
        torn = true;
        break;
      }
      std::string t = op.value("t", "");
      if (t == "begin") {
        in_pending = true;
        pending.clear();
      } else if (t == "commit") {
        for (const auto& p : pending) {
          if (p.value("n", std::uint64_t{0}) > store.snapshot_op_seq_) {
            if (Status s = store.apply_op(p, true); !s.ok()) return s.error();
            ++store.committed_ops_;
          }
          store.next_op_seq_ =
              std::max(store.next_op_seq_, p.value("n", std::uint64_t{0}) + 1);
        }
        pending.clear();
        in_pending = false;
        safe_offset = line_end;
      } else if (in_pending) {
        pending.push_back(std::move(op));
      } else {
        if (op.value("n", std::uint64_t{0}) > store.snapshot_op_seq_) {
          if (Status s = store.apply_op(op, true); !s.ok()) return s.error();
          ++store.committed_ops_;
        }
        store.next_op_seq_ =
            std::max(store.next_op_seq_, op.value("n", std::uint64_t{0}) + 1);
        safe_offset = line_end;
      }
      offset = line_end;
    }
    // A torn tail or an uncommitted trailing batch was never acknowledged;
    // drop it so appends land on a clean boundary.
    if ((torn || in_pending) && safe_offset < std::filesystem::file_size(path)) {
      std::filesystem::resize_file(path, safe_offset, ec);
      if (ec) return make_error(Errc::IoError, ec.message());
    }
  }

  store.journal_.emplace(path, std::ios::app);
  if (!*store.journal_) {
    return make_error(Errc::IoError, "cannot open " + path.string());
  }
  return store;
}

// -- snapshot --------------------------------------------------------------

json Store::snapshot_json() const {
  json j;
  j["op"] = next_op_seq_ - 1;
  j["initialized"] = initialized_;
  j["prefix"] = pool_prefix_;
  j["start"] = pool_start_;
  j["end"] = pool_end_;
  j["free"] = free_;
  json allocs = json::array();
  for (const auto& [account, dn] : allocations_) {
    allocs.push_back({{"account", account}, {"dn", dn.str()}});
  }
  j["alloc"] = std::move(allocs);
  json states = json::array();
  for (const auto& [key, s] : users_) states.push_back(state_to_json(s));
  j["states"] = std::move(states);
  json hist = json::array();
  for (const auto& ev : history_) {
    json e;
    e["dn"] = ev.dn.str();
    if (ev.from) e["from"] = std::string(user_status_name(*ev.from));
    e["to"] = std::string(user_status_name(ev.to));
    e["at"] = timestamp_to_unix(ev.at);
    e["cause"] = ev.cause;
    hist.push_back(std::move(e));
  }
  j["history"] = std::move(hist);
  json reqs = json::array();
  for (const auto& [id, r] : requests_) {
    json e = request_to_json(r);
    e["status"] = std::string(request_status_name(r.status));
    e["note"] = r.note;
    reqs.push_back(std::move(e));
  }
  j["requests"] = std::move(reqs);
  json provs = json::array();
  for (const auto& [id, p] : provisions_) provs.push_back(provision_to_json(p));
  j["provisions"] = std::move(provs);
  j["provision_done"] = provision_done_;
  j["rolemap"] = rolemap_;
  json bans = json::array();
  for (const auto& dn : bans_) bans.push_back(dn.str());
  j["bans"] = std::move(bans);
  json unbans = json::array();
  for (const auto& dn : unbans_) unbans.push_back(dn.str());
  j["unbans"] = std::move(unbans);
  return j;
}

Status Store::load_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return make_error(Errc::IoError, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    return make_error(Errc::ConfigError, "corrupt snapshot " + path.string());
  }
  try {
    snapshot_op_seq_ = j.value("op", std::uint64_t{0});
    next_op_seq_ = snapshot_op_seq_ + 1;
    initialized_ = j.value("initialized", false);
    pool_prefix_ = j.value("prefix", "");
    pool_start_ = j.value("start", 0);
    pool_end_ = j.value("end", -1);
    int width = 3;
    for (int v = pool_end_; v >= 1000; v /= 10) ++width;
    pool_names_.clear();
    for (int n = pool_start_; n <= pool_end_; ++n) {
      pool_names_.push_back(pool_account_name(pool_prefix_, n, width));
    }
    free_.clear();
    for (const auto& a : j.value("free", json::array())) {
      free_.insert(a.get<std::string>());
    }
    for (const auto& e : j.value("alloc", json::array())) {
      auto dn = DistinguishedName::unchecked(e.at("dn").get<std::string>());
      std::string account = e.at("account").get<std::string>();
      allocations_[account] = dn;
      account_by_dn_[dn] = account;
    }
    for (const auto& e : j.value("states", json::array())) {
      SiteUserState s = state_from_json(e);
      users_[{s.source_vo, s.dn}] = std::move(s);
    }
    for (const auto& e : j.value("history", json::array())) {
      HistoryEvent ev;
      ev.dn = DistinguishedName::unchecked(e.at("dn").get<std::string>());
      if (e.contains("from")) {
        ev.from = user_status_from_name(e["from"].get<std::string>());
      }
      ev.to = user_status_from_name(e.at("to").get<std::string>())
                  .value_or(UserStatus::PendingCreate);
      ev.at = timestamp_from_unix(e.value("at", std::int64_t{0}));
      ev.cause = e.value("cause", "");
      history_.push_back(std::move(ev));
    }
    for (const auto& e : j.value("requests", json::array())) {
      PendingRequest r = request_from_json(e);
      std::string st = e.value("status", "open");
      r.status = st == "done"     ? RequestStatus::Done
                 : st == "rejected" ? RequestStatus::Rejected
                                    : RequestStatus::Open;
      r.note = e.value("note", "");
      next_request_id_ = std::max(next_request_id_, id_suffix(r.id) + 1);
      requests_[r.id] = std::move(r);
    }
    for (const auto& e : j.value("provisions", json::array())) {
      ProvisionRequest p = provision_from_json(e);
      next_provision_id_ = std::max(next_provision_id_, id_suffix(p.id) + 1);
      provisions_[p.id] = std::move(p);
    }
    for (const auto& e : j.value("provision_done", json::array())) {
      provision_done_.insert(e.get<std::string>());
    }
    if (j.contains("rolemap")) {
      for (auto it = j["rolemap"].begin(); it != j["rolemap"].end(); ++it) {
        rolemap_[it.key()] = it.value().get<std::string>();
      }
    }
    for (const auto& e : j.value("bans", json::array())) {
      bans_.insert(DistinguishedName::unchecked(e.get<std::string>()));
    }
    for (const auto& e : j.value("unbans", json::array())) {
      unbans_.insert(DistinguishedName::unchecked(e.get<std::string>()));
    }
  } catch (const json::exception& e) {
    return make_error(Errc::ConfigError, e.what());
  }
  return ok_status();
}

Status Store::save_snapshot() {
  if (dir_.empty()) {
    return make_error(Errc::ConfigError, "in-memory store has no snapshot");
  }
  json j = snapshot_json();
  std::filesystem::path snap = dir_ / "snapshot.json";
  std::filesystem::path tmp = dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return make_error(Errc::IoError, "cannot write " + tmp.string());
    out << j.dump() << '\n';
    out.flush();
    if (!out) return make_error(Errc::IoError, "snapshot write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, snap, ec);
  if (ec) return make_error(Errc::IoError, ec.message());
  snapshot_op_seq_ = next_op_seq_ - 1;
  // Journal entries at or below the snapshot seq are now redundant.
  journal_.emplace(dir_ / "journal.log", std::ios::trunc);
  if (!*journal_) return make_error(Errc::IoError, "cannot truncate journal");
  return ok_status();
}

// -- public mutators -------------------------------------------------------

Status Store::initdb(const std::string& prefix, int start, int end, bool force) {
  if (initialized_ && !force) {
    return make_error(Errc::AlreadyInitialized, "store already initialized");
  }
  if (prefix.empty() || start < 0 || end < start) {
    return make_error(Errc::ConfigError, "bad pool range");
  }
  if (force || initialized_) {
    // Full reset: wipe memory and start a fresh journal.
    std::filesystem::path dir = dir_;
    std::optional<CrashPlan> plan = crash_plan_;
    *this = Store{};
    dir_ = dir;
    crash_plan_ = plan;
    if (!dir_.empty()) {
      std::error_code ec;
      std::filesystem::remove(dir_ / "snapshot.json", ec);
      journal_.emplace(dir_ / "journal.log", std::ios::trunc);
      if (!*journal_) return make_error(Errc::IoError, "cannot reset journal");
    }
  }
  json op{{"t", "init"}, {"prefix", prefix}, {"start", start}, {"end", end}};
  if (Status s = add_op(op); !s.ok()) return s;
  return apply_op(op, false);
}

Result<std::string> Store::allocate_account(const DistinguishedName& dn) {
  if (!initialized_) {
    return make_error(Errc::ConfigError, "pool not initialized");
  }
  auto it = account_by_dn_.find(dn);
  if (it != account_by_dn_.end()) return it->second;
  if (free_.empty()) {
    return make_error(Errc::PoolExhausted, "no free account for " + dn.str());
  }
  std::string account = *free_.begin();
  json op{{"t", "alloc"}, {"dn", dn.str()}, {"account", account}};
  if (Status s = add_op(op); !s.ok()) return s.error();
  if (Status s = apply_op(op, false); !s.ok()) return s.error();
  return account;
}

Status Store::release_account(const std::string& account) {
  auto it = allocations_.find(account);
  if (it == allocations_.end()) {
    return make_error(Errc::NotFound, "account not allocated: " + account);
  }
  for (const auto& [key, s] : users_) {
    if (key.second == it->second && s.status != UserStatus::Banned) {
      return make_error(Errc::Rejected,
                        "holder of " + account + " is not banned");
    }
  }
  json op{{"t", "release"}, {"account", account}};
  if (Status s = add_op(op); !s.ok()) return s;
  return apply_op(op, false);
}

Status Store::upsert_state(SiteUserState s, const std::string& cause) {
  StateKey key{s.source_vo, s.dn};
  auto it = users_.find(key);
  std::optional<UserStatus> from;
  if (it != users_.end()) from = it->second.status;
  if (!transition_allowed(from, s.status)) {
    std::string msg = (from ? std::string(user_status_name(*from)) : "none");
    msg += " -> ";
    msg += user_status_name(s.status);
    return make_error(Errc::IllegalTransition, msg);
  }
  if (s.status == UserStatus::Active && !s.local_account) {
    return make_error(Errc::IllegalTransition, "active without local account");
  }
  if (s.status == UserStatus::Banned) s.groups.clear();
  Timestamp now = now_utc();
  if (it == users_.end() && s.first_seen == Timestamp{}) s.first_seen = now;
  if (it != users_.end() && s.first_seen == Timestamp{}) {
    s.first_seen = it->second.first_seen;
  }
  s.last_updated = now;
  json op = state_to_json(s);
  op["t"] = "state";
  op["cause"] = cause;
  if (Status st = add_op(op); !st.ok()) return st;
  return apply_op(op, false);
}

Result<SiteUserState> Store::get_state(const std::string& vo,
                                       const DistinguishedName& dn) const {
  auto it = users_.find({vo, dn});
  if (it == users_.end()) {
    return make_error(Errc::NotFound, dn.str() + " in vo " + vo);
  }
  return it->second;
}

std::vector<SiteUserState> Store::list_by_status(UserStatus status) const {
  std::vector<SiteUserState> out;
  for (const auto& [key, s] : users_) {
    if (s.status == status) out.push_back(s);
  }
  return out;
}

std::vector<SiteUserState> Store::states_for_vo(const std::string& vo) const {
  std::vector<SiteUserState> out;
  for (const auto& [key, s] : users_) {
    if (key.first == vo) out.push_back(s);
  }
  return out;
}

std::vector<SiteUserState> Store::all_states() const {
  std::vector<SiteUserState> out;
  out.reserve(users_.size());
  for (const auto& [key, s] : users_) out.push_back(s);
  return out;
}

Result<std::vector<HistoryEvent>> Store::history(
    const DistinguishedName& dn) const {
  std::vector<HistoryEvent> out;
  for (const auto& ev : history_) {
    if (ev.dn == dn) out.push_back(ev);
  }
  if (out.empty()) {
    return make_error(Errc::NotFound, "no history for " + dn.str());
  }
  return out;
}

Result<PendingRequest> Store::raise_request(PendingRequest req) {
  req.id = "req-" + std::to_string(next_request_id_);
  req.created_at = now_utc();
  req.status = RequestStatus::Open;
  json op = request_to_json(req);
  op["t"] = "req";
  if (Status s = add_op(op); !s.ok()) return s.error();
  if (Status s = apply_op(op, false); !s.ok()) return s.error();
  return requests_.at(req.id);
}

std::optional<PendingRequest> Store::find_open_request(
    const PendingRequest& like) const {
  for (const auto& [id, r] : requests_) {
    if (r.status != RequestStatus::Open) continue;
    if (r.kind == like.kind && r.role == like.role && r.dn == like.dn &&
        r.group == like.group && r.vo == like.vo) {
      return r;
    }
  }
  return std::nullopt;
}

Result<PendingRequest> Store::complete_request(const std::string& id, bool done,
                                               const std::string& note) {
  auto it = requests_.find(id);
  if (it == requests_.end()) {
    return make_error(Errc::UnknownRequest, id);
  }
  if (it->second.status != RequestStatus::Open) {
    return make_error(Errc::AlreadyClosed, id);
  }
  json op{{"t", "reqdone"},
          {"id", id},
          {"outcome", done ? "done" : "rejected"},
          {"note", note}};
  if (Status s = add_op(op); !s.ok()) return s.error();
  if (Status s = apply_op(op, false); !s.ok()) return s.error();
  return it->second;
}

std::vector<PendingRequest> Store::open_requests() const {
  std::vector<PendingRequest> out;
  for (const auto& [id, r] : requests_) {
    if (r.status == RequestStatus::Open) out.push_back(r);
  }
  return out;
}

std::vector<PendingRequest> Store::all_requests() const {
  std::vector<PendingRequest> out;
  for (const auto& [id, r] : requests_) out.push_back(r);
  return out;
}

Result<ProvisionRequest> Store::new_provision_request(
    const DistinguishedName& dn, ProvisionKind kind, const std::string& cause) {
  ProvisionRequest p;
  p.id = "prov-" + std::to_string(next_provision_id_);
  p.dn = dn;
  p.kind = kind;
  p.cause = cause;
  p.at = now_utc();
  json op = provision_to_json(p);
  op["t"] = "prov";
  if (Status s = add_op(op); !s.ok()) return s.error();
  if (Status s = apply_op(op, false); !s.ok()) return s.error();
  return provisions_.at(p.id);
}

Result<bool> Store::record_provision_result(const ProvisionResult& res) {
  if (!provisions_.contains(res.id)) {
    return make_error(Errc::UnknownRequestId, res.id);
  }
  if (provision_done_.contains(res.id)) return false;
  json op{{"t", "provdone"}, {"id", res.id}};
  if (Status s = add_op(op); !s.ok()) return s.error();
  if (Status s = apply_op(op, false); !s.ok()) return s.error();
  return true;
}

Result<ProvisionRequest> Store::provision_request(const std::string& id) const {
  auto it = provisions_.find(id);
  if (it == provisions_.end()) {
    return make_error(Errc::UnknownRequestId, id);
  }
  return it->second;
}

std::vector<ProvisionRequest> Store::outstanding_provisions() const {
  std::vector<ProvisionRequest> out;
  for (const auto& [id, p] : provisions_) {
    if (!provision_done_.contains(id)) out.push_back(p);
  }
  return out;
}

bool Store::has_outstanding(const DistinguishedName& dn,
                            ProvisionKind kind) const {
  for (const auto& [id, p] : provisions_) {
    if (p.dn == dn && p.kind == kind && !provision_done_.contains(id)) {
      return true;
    }
  }
  return false;
}

Status Store::register_group(const RoleName& role, const std::string& group) {
  if (group.empty()) return make_error(Errc::ConfigError, "empty group name");
  auto it = rolemap_.find(role);
  if (it != rolemap_.end() && it->second == group) return ok_status();
  json op{{"t", "rolemap"}, {"role", role}, {"group", group}};
  if (Status s = add_op(op); !s.ok()) return s;
  return apply_op(op, false);
}

Status Store::add_ban(const DistinguishedName& dn) {
  if (bans_.contains(dn)) return ok_status();
  json op{{"t", "ban"}, {"dn", dn.str()}};
  if (Status s = add_op(op); !s.ok()) return s;
  return apply_op(op, false);
}

Status Store::unban_user(const DistinguishedName& dn) {
  if (!unbans_.contains(dn)) {
    json op{{"t", "unban"}, {"dn", dn.str()}};
    if (Status s = add_op(op); !s.ok()) return s;
    if (Status s = apply_op(op, false); !s.ok()) return s;
  }
  // Banned states step down to Disabled; the next sync re-admits normally.
  for (const auto& [key, s] : users_) {
    if (key.second != dn || s.status != UserStatus::Banned) continue;
    SiteUserState next = s;
    next.status = UserStatus::Disabled;
    json op = state_to_json(next);
    op["t"] = "state";
    op["cause"] = "operator-unban";
    if (Status st = add_op(op); !st.ok()) return st;
    if (Status st = apply_op(op, false); !st.ok()) return st;
  }
  return ok_status();
}

std::string Store::dump_blocks() const {
  std::string out;
  for (const auto& [key, s] : users_) {
    out.append(render_record_block(s.snapshot, AttributeProjection::all()));
    out.append("vo: " + s.source_vo + "\n");
    out.append("status: " + std::string(user_status_name(s.status)) + "\n");
    if (s.local_account) out.append("account: " + *s.local_account + "\n");
    if (!s.groups.empty()) {
      std::string groups;
      for (const auto& g : s.groups) {
        if (!groups.empty()) groups += ',';
        groups += g;
      }
      out.append("groups: " + groups + "\n");
    }
    out.append("firstSeen: " + format_rfc3339(s.first_seen) + "\n");
    out.append("lastUpdated: " + format_rfc3339(s.last_updated) + "\n");
    out.push_back('\n');
  }
  out.append("END count=" + std::to_string(users_.size()) + "\n");
  return out;
}

json Store::dump_json() const {
  json j;
  json states = json::array();
  for (const auto& [key, s] : users_) {
    json e = state_to_json(s);
    states.push_back(std::move(e));
  }
  j["states"] = std::move(states);
  json reqs = json::array();
  for (const auto& [id, r] : requests_) {
    json e = request_to_json(r);
    e["status"] = std::string(request_status_name(r.status));
    if (!r.note.empty()) e["note"] = r.note;
    reqs.push_back(std::move(e));
  }
  j["requests"] = std::move(reqs);
  j["pool"] = {{"prefix", pool_prefix_},
               {"start", pool_start_},
               {"end", pool_end_},
               {"free", free_.size()},
               {"allocated", allocations_.size()}};
  return j;
}

}  // namespace gums
