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
// Pushes a registration authority's change log up to its parent VO,
// projected to the attributes the parent requires. Delivery is
// at-least-once; the receiving node applies idempotently, so retransmission
// after a failure (or a crash before the ACK was recorded) is safe.

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>

#include "gums/registry.hpp"
#include "gums/result.hpp"
#include "gums/transport.hpp"

namespace gums {

struct FeedUpState {
  std::uint64_t last_acked_seq = 0;
  std::optional<Timestamp> pending_since;
  std::chrono::seconds interval{60};
};

/// Produces a fresh authenticated channel to the upstream node.
using Connector = std::function<Result<ChannelPtr>()>;

struct SyncUpReport {
  std::uint64_t entries_sent = 0;
  std::uint64_t acked_seq = 0;
};

/// Transmits every change-log entry past `state.last_acked_seq` as one PUSH
/// frame (record blocks for upserts, tombstones for removals), then waits
/// for the ACK and advances the cursor. Nothing pending means no connection
/// is made at all.
///
/// Errors: Unreachable (transient; retry next interval) or Rejected (the
/// upstream refused the content or the credentials; halt and alert).
Result<SyncUpReport> sync_up(FeedUpState& state, const RegistryNode& source,
                             const AttributeProjection& required,
                             const Connector& upstream);

Status save_feedup_state(const FeedUpState& state,
                         const std::filesystem::path& path);
Result<FeedUpState> load_feedup_state(const std::filesystem::path& path);

}  // namespace gums
