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

#include "gums/feedup.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "gums/wire.hpp"

namespace gums {

using nlohmann::json;

Result<SyncUpReport> sync_up(FeedUpState& state, const RegistryNode& source,
                             const AttributeProjection& required,
                             const Connector& upstream) {
  auto entries = source.log_since(state.last_acked_seq);
  if (entries.empty()) {
    state.pending_since.reset();
    return SyncUpReport{0, state.last_acked_seq};
  }
  if (!state.pending_since) state.pending_since = now_utc();

  std::uint64_t batch_seq = entries.back().seq;
  std::string frame = "PUSH seq=" + std::to_string(batch_seq) + "\n";
  for (const auto& e : entries) {
    if (e.kind == ChangeKind::Removed) {
      frame += render_tombstone_block(e.dn);
    } else {
      frame += render_record_block(project_record(*e.record, required), required);
    }
    frame += "\n";
  }
  frame += "END\n";

  auto ch = upstream();
  if (!ch.ok()) {
    // Credential problems are configuration, not weather: stop retrying.
    Errc c = ch.error().code;
    if (c == Errc::UnknownPeer || c == Errc::FingerprintMismatch ||
        c == Errc::HandshakeFailed || c == Errc::NotAuthorized) {
      return make_error(Errc::Rejected, ch.error().to_string());
    }
    return make_error(Errc::Unreachable, ch.error().to_string());
  }
  ChannelPtr channel = ch.take();
  if (Status s = channel->send(std::move(frame)); !s.ok()) {
    return make_error(Errc::Unreachable, s.error().to_string());
  }
  auto reply = channel->recv();
  if (!reply.ok()) {
    return make_error(Errc::Unreachable, reply.error().to_string());
  }
  if (auto err = parse_err(reply.value())) {
    return make_error(Errc::Rejected, err->to_string());
  }
  if (reply.value().rfind("ACK seq=", 0) != 0) {
    return make_error(Errc::Rejected, "unexpected reply: " + reply.value());
  }
  std::uint64_t acked = 0;
  try {
    acked = std::stoull(reply.value().substr(8));
  } catch (const std::exception&) {
    return make_error(Errc::Rejected, "bad ACK: " + reply.value());
  }
  state.last_acked_seq = acked;
  state.pending_since.reset();
  return SyncUpReport{entries.size(), acked};
}

Status save_feedup_state(const FeedUpState& state,
                         const std::filesystem::path& path) {
  json j;
  j["acked"] = state.last_acked_seq;
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return make_error(Errc::IoError, "cannot write " + tmp.string());
    out << j.dump() << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) return make_error(Errc::IoError, ec.message());
  return ok_status();
}

Result<FeedUpState> load_feedup_state(const std::filesystem::path& path) {
  FeedUpState state;
  std::ifstream in(path);
  if (!in) return state;  // first run
  std::string line;
  std::getline(in, line);
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    return make_error(Errc::ConfigError, "corrupt state file " + path.string());
  }
  state.last_acked_seq = j.value("acked", std::uint64_t{0});
  return state;
}

}  // namespace gums
