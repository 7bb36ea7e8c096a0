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

#include "gums/registry.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace gums {

using nlohmann::json;

namespace {

const char* const kKindNames[] = {"added", "updated", "role-changed", "removed"};

}  // namespace

std::string_view change_kind_name(ChangeKind k) {
  return kKindNames[static_cast<int>(k)];
}

std::optional<ChangeKind> change_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (name == kKindNames[i]) return static_cast<ChangeKind>(i);
  }
  return std::nullopt;
}

Status RegistryNode::attach_journal(const std::filesystem::path& path) {
  std::unique_lock lk(mu_);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);

  std::uintmax_t good_bytes = 0;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    if (!in) return make_error(Errc::IoError, "cannot read " + path.string());
    std::string line;
    std::uintmax_t offset = 0;
    bool bad_tail = false;
    while (std::getline(in, line)) {
      std::uintmax_t line_end = offset + line.size() + 1;
      if (line.empty()) {
        offset = line_end;
        continue;
      }
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        bad_tail = true;
        break;
      }
      std::string t = j.value("t", "");
      if (t == "log") {
        ChangeLogEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        auto kind = change_kind_from_name(j.at("kind").get<std::string>());
        if (!kind) return make_error(Errc::ConfigError, "bad journal kind");
        e.kind = *kind;
        e.dn = DistinguishedName::unchecked(j.at("dn").get<std::string>());
        e.at = timestamp_from_unix(j.at("at").get<std::int64_t>());
        e.actor = DistinguishedName::unchecked(j.at("actor").get<std::string>());
        if (j.contains("record")) {
          auto rec = record_from_json(j["record"]);
          if (!rec.ok()) return rec.error();
          e.record = rec.take();
        }
        apply_entry_locked(e);
        log_.push_back(std::move(e));
        next_seq_ = log_.back().seq + 1;
      } else if (t == "registrar") {
        registrars_.insert(
            DistinguishedName::unchecked(j.at("dn").get<std::string>()));
      } else if (t == "acl") {
        auto proj = AttributeProjection::parse(j.at("attrs").get<std::string>());
        if (!proj.ok()) return proj.error();
        acl_[DistinguishedName::unchecked(j.at("dn").get<std::string>())] =
            proj.take();
      } else {
        return make_error(Errc::ConfigError, "unknown journal line type: " + t);
      }
      offset = line_end;
    }
    good_bytes = offset;
    if (bad_tail) {
      // A torn final line can only come from an interrupted append; anything
      // after it was never acknowledged. Cut the file back to the last good
      // line before reopening for append.
      std::filesystem::resize_file(path, good_bytes, ec);
      if (ec) return make_error(Errc::IoError, ec.message());
    }
  }

  journal_.emplace(path, std::ios::app);
  if (!*journal_) {
    journal_.reset();
    return make_error(Errc::IoError, "cannot open " + path.string());
  }
  return ok_status();
}

Status RegistryNode::journal_line(const std::string& line) {
  if (!journal_) return ok_status();
  *journal_ << line << '\n';
  journal_->flush();
  if (!*journal_) return make_error(Errc::IoError, "journal write failed");
  return ok_status();
}

void RegistryNode::apply_entry_locked(const ChangeLogEntry& e) {
  switch (e.kind) {
    case ChangeKind::Added:
      users_[e.dn] = StoredUser{*e.record, e.actor, e.seq};
      break;
    case ChangeKind::Updated:
    case ChangeKind::RoleChanged: {
      auto it = users_.find(e.dn);
      if (it == users_.end()) {
        users_[e.dn] = StoredUser{*e.record, e.actor, e.seq};
      } else {
        it->second.record = *e.record;
        it->second.seq = e.seq;
      }
      break;
    }
    case ChangeKind::Removed:
      users_.erase(e.dn);
      break;
  }
}

Result<std::uint64_t> RegistryNode::append_entry_locked(
    ChangeKind kind, const DistinguishedName& dn, const DistinguishedName& actor,
    std::optional<UserRecord> record) {
  ChangeLogEntry e;
  e.seq = next_seq_;
  e.kind = kind;
  e.dn = dn;
  e.at = now_utc();
  e.actor = actor;
  e.record = std::move(record);

  json j;
  j["t"] = "log";
  j["seq"] = e.seq;
  j["kind"] = std::string(change_kind_name(e.kind));
  j["dn"] = e.dn.str();
  j["at"] = timestamp_to_unix(e.at);
  j["actor"] = e.actor.str();
  if (e.record) j["record"] = record_to_json(*e.record);
  if (Status s = journal_line(j.dump()); !s.ok()) return s.error();

  apply_entry_locked(e);
  log_.push_back(std::move(e));
  ++next_seq_;
  return log_.back().seq;
}

Status RegistryNode::add_registrar(const DistinguishedName& dn) {
  std::unique_lock lk(mu_);
  if (registrars_.insert(dn).second) {
    json j{{"t", "registrar"}, {"dn", dn.str()}};
    return journal_line(j.dump());
  }
  return ok_status();
}

Status RegistryNode::enroll_site_admin(const DistinguishedName& admin,
                                       const AttributeProjection& allowed) {
  std::unique_lock lk(mu_);
  acl_[admin] = allowed;  // re-enrollment replaces the previous allowance
  json j{{"t", "acl"}, {"dn", admin.str()}, {"attrs", allowed.to_csv()}};
  return journal_line(j.dump());
}

Result<std::uint64_t> RegistryNode::register_user(const PeerIdentity& actor,
                                                  UserRecord record) {
  std::unique_lock lk(mu_);
  if (!registrars_.contains(actor.dn)) {
    return make_error(Errc::NotARegistrar, actor.dn.str());
  }
  record.registrar_dn = actor.dn;
  record.vo_path = vo_path_;
  if (auto violations = validate_record(record); !violations.empty()) {
    return make_error(Errc::InvalidRecord, violations_to_string(violations));
  }
  auto it = users_.find(record.dn);
  if (it != users_.end()) {
    if (it->second.record == record) return it->second.seq;
    return make_error(Errc::ConflictingRecord, record.dn.str());
  }
  DistinguishedName dn = record.dn;
  return append_entry_locked(ChangeKind::Added, dn, actor.dn, std::move(record));
}

Result<std::uint64_t> RegistryNode::assign_roles(const PeerIdentity& actor,
                                                 const DistinguishedName& dn,
                                                 std::set<RoleName> roles) {
  std::unique_lock lk(mu_);
  if (!registrars_.contains(actor.dn)) {
    return make_error(Errc::NotARegistrar, actor.dn.str());
  }
  auto it = users_.find(dn);
  if (it == users_.end()) return make_error(Errc::UnknownUser, dn.str());
  for (const auto& r : roles) {
    if (!valid_role_name(r)) {
      return make_error(Errc::InvalidRecord,
                        std::string(violation_name(Violation::InvalidRole)));
    }
  }
  if (it->second.record.roles == roles) return it->second.seq;
  UserRecord updated = it->second.record;
  updated.roles = std::move(roles);
  return append_entry_locked(ChangeKind::RoleChanged, dn, actor.dn,
                             std::move(updated));
}

Result<std::uint64_t> RegistryNode::remove_user(const PeerIdentity& actor,
                                                const DistinguishedName& dn) {
  std::unique_lock lk(mu_);
  if (!registrars_.contains(actor.dn)) {
    return make_error(Errc::NotARegistrar, actor.dn.str());
  }
  if (!users_.contains(dn)) return make_error(Errc::UnknownUser, dn.str());
  return append_entry_locked(ChangeKind::Removed, dn, actor.dn, std::nullopt);
}

Result<std::uint64_t> RegistryNode::apply_push(
    const PeerIdentity& actor, const std::vector<PushBlock>& blocks) {
  std::unique_lock lk(mu_);
  if (!registrars_.contains(actor.dn)) {
    return make_error(Errc::NotARegistrar, actor.dn.str());
  }
  std::uint64_t applied = 0;
  for (const auto& block : blocks) {
    if (block.removed) {
      if (users_.contains(block.record.dn)) {
        auto r = append_entry_locked(ChangeKind::Removed, block.record.dn,
                                     actor.dn, std::nullopt);
        if (!r.ok()) return r.error();
        ++applied;
      }
      continue;
    }
    UserRecord rec = block.record;
    if (auto violations = validate_record(rec, present_attributes(rec));
        !violations.empty()) {
      return make_error(Errc::InvalidRecord, violations_to_string(violations));
    }
    if (rec.registrar_dn.empty()) rec.registrar_dn = actor.dn;
    if (rec.vo_path.empty()) rec.vo_path = vo_path_;
    auto it = users_.find(rec.dn);
    if (it == users_.end()) {
      auto r = append_entry_locked(ChangeKind::Added, rec.dn, actor.dn,
                                   std::move(rec));
      if (!r.ok()) return r.error();
      ++applied;
      continue;
    }
    if (it->second.record == rec) continue;  // idempotent retransmission
    if (it->second.origin != actor.dn) {
      return make_error(Errc::ConflictingRecord, rec.dn.str());
    }
    UserRecord with_roles_only = it->second.record;
    with_roles_only.roles = rec.roles;
    ChangeKind kind = (with_roles_only == rec) ? ChangeKind::RoleChanged
                                               : ChangeKind::Updated;
    auto r = append_entry_locked(kind, rec.dn, actor.dn, std::move(rec));
    if (!r.ok()) return r.error();
    ++applied;
  }
  return applied;
}

Result<QueryResult> RegistryNode::query_users(
    const PeerIdentity& actor, const AttributeProjection& want) const {
  std::shared_lock lk(mu_);
  auto it = acl_.find(actor.dn);
  if (it == acl_.end()) {
    return make_error(Errc::NotAuthorized, actor.dn.str());
  }
  QueryResult out;
  out.effective = want.intersect(it->second);
  out.records.reserve(users_.size());
  for (const auto& [dn, stored] : users_) {
    out.records.push_back(project_record(stored.record, out.effective));
  }
  return out;
}

std::vector<ChangeLogEntry> RegistryNode::log_since(std::uint64_t seq) const {
  std::shared_lock lk(mu_);
  std::vector<ChangeLogEntry> out;
  // seqs are consecutive from 1, so the log is its own index
  if (seq < log_.size()) {
    out.assign(log_.begin() + static_cast<std::ptrdiff_t>(seq), log_.end());
  }
  return out;
}

std::uint64_t RegistryNode::latest_seq() const {
  std::shared_lock lk(mu_);
  return next_seq_ - 1;
}

std::map<DistinguishedName, StoredUser> RegistryNode::users_snapshot() const {
  std::shared_lock lk(mu_);
  return users_;
}

std::set<DistinguishedName> RegistryNode::registrars() const {
  std::shared_lock lk(mu_);
  return registrars_;
}

std::map<DistinguishedName, AttributeProjection> RegistryNode::acl_snapshot()
    const {
  std::shared_lock lk(mu_);
  return acl_;
}

std::size_t RegistryNode::user_count() const {
  std::shared_lock lk(mu_);
  return users_.size();
}

std::string RegistryNode::dump_blocks() const {
  std::shared_lock lk(mu_);
  std::string out;
  for (const auto& [dn, stored] : users_) {
    out.append(render_record_block(stored.record, AttributeProjection::all()));
    out.push_back('\n');
  }
  out.append("END count=" + std::to_string(users_.size()) + "\n");
  return out;
}

// -- wire handler --------------------------------------------------------

namespace {

std::string err_frame(const Error& e) { return render_err(e.code); }

std::optional<std::string> block_value(const std::vector<std::string_view>& lines,
                                       std::string_view key) {
  std::string prefix = std::string(key) + ": ";
  for (std::string_view line : lines) {
    if (line.rfind(prefix, 0) == 0) return std::string(line.substr(prefix.size()));
  }
  return std::nullopt;
}

std::string rest_after_first_line(const std::string& frame) {
  std::size_t nl = frame.find('\n');
  return nl == std::string::npos ? std::string{} : frame.substr(nl + 1);
}

}  // namespace

std::string handle_registry_frame(RegistryNode& node, const PeerIdentity& actor,
                                  const std::string& frame) {
  auto lines = split_lines(frame);
  if (lines.empty()) return render_err(Errc::ProtocolError);
  std::string_view head = lines[0];

  if (head.rfind("QUERY attrs=", 0) == 0) {
    auto want = AttributeProjection::parse(head.substr(12));
    if (!want.ok()) return err_frame(want.error());
    auto res = node.query_users(actor, want.value());
    if (!res.ok()) return err_frame(res.error());
    return render_query_response(res.value().records, res.value().effective);
  }

  if (head.rfind("PUSH seq=", 0) == 0) {
    std::uint64_t seq = 0;
    try {
      seq = std::stoull(std::string(head.substr(9)));
    } catch (const std::exception&) {
      return render_err(Errc::ProtocolError);
    }
    std::string body = rest_after_first_line(frame);
    std::size_t end = body.rfind("END\n");
    if (end == std::string::npos) return render_err(Errc::ProtocolError);
    auto blocks = parse_push_blocks(std::string_view(body).substr(0, end));
    if (!blocks.ok()) return err_frame(blocks.error());
    auto applied = node.apply_push(actor, blocks.value());
    if (!applied.ok()) return err_frame(applied.error());
    return "ACK seq=" + std::to_string(seq) + "\n";
  }

  if (head == "ADDUSER") {
    auto body_lines = split_lines(rest_after_first_line(frame));
    auto rec = parse_record_block(body_lines);
    if (!rec.ok()) return err_frame(rec.error());
    auto seq = node.register_user(actor, rec.take());
    if (!seq.ok()) return err_frame(seq.error());
    return "OK seq=" + std::to_string(seq.value()) + "\n";
  }

  if (head == "SETROLES") {
    auto body_lines = split_lines(rest_after_first_line(frame));
    auto dn_text = block_value(body_lines, "dn");
    if (!dn_text) return render_err(Errc::ProtocolError);
    auto dn = DistinguishedName::parse(*dn_text);
    if (!dn.ok()) return err_frame(dn.error());
    std::set<RoleName> roles;
    if (auto roles_text = block_value(body_lines, "roles")) {
      std::size_t pos = 0;
      while (pos <= roles_text->size()) {
        std::size_t end = roles_text->find(',', pos);
        if (end == std::string::npos) end = roles_text->size();
        if (end > pos) roles.insert(roles_text->substr(pos, end - pos));
        if (end == roles_text->size()) break;
        pos = end + 1;
      }
    }
    auto seq = node.assign_roles(actor, dn.value(), std::move(roles));
    if (!seq.ok()) return err_frame(seq.error());
    return "OK seq=" + std::to_string(seq.value()) + "\n";
  }

  if (head == "REMOVEUSER") {
    auto body_lines = split_lines(rest_after_first_line(frame));
    auto dn_text = block_value(body_lines, "dn");
    if (!dn_text) return render_err(Errc::ProtocolError);
    auto dn = DistinguishedName::parse(*dn_text);
    if (!dn.ok()) return err_frame(dn.error());
    auto seq = node.remove_user(actor, dn.value());
    if (!seq.ok()) return err_frame(seq.error());
    return "OK seq=" + std::to_string(seq.value()) + "\n";
  }

  if (head == "ENROLLADMIN") {
    auto body_lines = split_lines(rest_after_first_line(frame));
    auto dn_text = block_value(body_lines, "dn");
    auto attrs_text = block_value(body_lines, "attrs");
    if (!dn_text || !attrs_text) return render_err(Errc::ProtocolError);
    auto dn = DistinguishedName::parse(*dn_text);
    if (!dn.ok()) return err_frame(dn.error());
    auto proj = AttributeProjection::parse(*attrs_text);
    if (!proj.ok()) return err_frame(proj.error());
    if (Status s = node.enroll_site_admin(dn.value(), proj.value()); !s.ok()) {
      return err_frame(s.error());
    }
    return "OK\n";
  }

  if (head == "ADDREGISTRAR") {
    auto body_lines = split_lines(rest_after_first_line(frame));
    auto dn_text = block_value(body_lines, "dn");
    if (!dn_text) return render_err(Errc::ProtocolError);
    auto dn = DistinguishedName::parse(*dn_text);
    if (!dn.ok()) return err_frame(dn.error());
    if (Status s = node.add_registrar(dn.value()); !s.ok()) {
      return err_frame(s.error());
    }
    return "OK\n";
  }

  if (head == "DUMP") return node.dump_blocks();
  if (head == "PING") return "OK\n";

  return render_err(Errc::ProtocolError);
}

FrameHandler registry_frame_handler(RegistryNode& node) {
  return [&node](const PeerIdentity& actor, const std::string& frame) {
    return handle_registry_frame(node, actor, frame);
  };
}

// -- TCP server ----------------------------------------------------------

RegistryServer::RegistryServer(RegistryNode& node, Credential credential,
                               bool allow_insecure)
    : node_(node),
      credential_(std::move(credential)),
      allow_insecure_(allow_insecure) {}

RegistryServer::~RegistryServer() { stop(); }

Result<int> RegistryServer::start(const std::string& host, int port) {
  auto listener = TcpListener::bind(host, port);
  if (!listener.ok()) return listener.error();
  listener_ = listener.take();
  int bound = listener_.port();
  accept_thread_ = std::thread([this] { accept_loop(); });
  return bound;
}

void RegistryServer::accept_loop() {
  while (!stopping_.load()) {
    auto fd = listener_.accept_fd();
    if (!fd.ok()) break;
    int conn_fd = fd.value();
    std::lock_guard<std::mutex> lk(conns_mu_);
    if (stopping_.load()) {
      ::shutdown(conn_fd, SHUT_RDWR);
      ::close(conn_fd);
      break;
    }
    live_fds_.insert(conn_fd);
    conn_threads_.emplace_back([this, conn_fd] {
      auto ch = tcp_serve_handshake(conn_fd, credential_, allow_insecure_);
      if (ch.ok()) {
        ChannelPtr channel = ch.take();
        while (true) {
          auto frame = channel->recv();
          if (!frame.ok()) break;
          std::string reply = handle_registry_frame(
              node_, channel->remote_identity(), frame.value());
          if (!channel->send(std::move(reply)).ok()) break;
        }
      }
      std::lock_guard<std::mutex> lk2(conns_mu_);
      live_fds_.erase(conn_fd);
    });
  }
}

void RegistryServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    // Kick blocked readers loose; the owning threads close the fds.
    std::lock_guard<std::mutex> lk(conns_mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> threads;
  {
    std::lock_guard<std::mutex> lk(conns_mu_);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
}

}  // namespace gums
