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

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "gums/result.hpp"

namespace gums {

/// UTC timestamps at second resolution. Second resolution keeps the
/// RFC-3339 text rendering a lossless round trip.
using Timestamp = std::chrono::time_point<std::chrono::system_clock,
                                          std::chrono::seconds>;

Timestamp now_utc();

/// "2026-08-09T12:00:00Z"
std::string format_rfc3339(Timestamp t);
Result<Timestamp> parse_rfc3339(std::string_view text);

inline Timestamp timestamp_from_unix(std::int64_t secs) {
  return Timestamp{std::chrono::seconds{secs}};
}

inline std::int64_t timestamp_to_unix(Timestamp t) {
  return t.time_since_epoch().count();
}

}  // namespace gums
