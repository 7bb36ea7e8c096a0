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
// Text formats shared by the query and push protocols:
//
//   record block     one "attr: value" line per projected attribute,
//                    roles comma-joined, timestamps RFC-3339
//   tombstone block  "dn: <dn>" + "removed: true"
//   query response   blocks separated by one blank line, then "END count=<n>"
//   push body        "PUSH seq=<n>" + blocks + "END"
//   error            single "ERR <code>" line
//
// JSON record serialization for the on-disk journals also lives here.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gums/domain.hpp"
#include "gums/result.hpp"

namespace gums {

std::vector<std::string_view> split_lines(std::string_view text);

/// Renders the attributes of `proj` that carry a value; dn always appears.
std::string render_record_block(const UserRecord& r,
                                const AttributeProjection& proj);

Result<UserRecord> parse_record_block(
    const std::vector<std::string_view>& lines);

/// One unit of replication: a (projected) record upsert or a tombstone.
struct PushBlock {
  bool removed = false;
  UserRecord record;  // for tombstones only record.dn is meaningful
};

std::string render_tombstone_block(const DistinguishedName& dn);

/// Splits a body into blank-line-separated blocks and parses each one.
Result<std::vector<PushBlock>> parse_push_blocks(std::string_view body);

std::string render_query_response(const std::vector<UserRecord>& records,
                                  const AttributeProjection& proj);

Result<std::vector<UserRecord>> parse_query_response(std::string_view text);

std::string render_err(Errc code);

/// If `text`'s first line is "ERR <code>", returns the decoded error.
std::optional<Error> parse_err(std::string_view text);

nlohmann::json record_to_json(const UserRecord& r);
Result<UserRecord> record_from_json(const nlohmann::json& j);

}  // namespace gums
