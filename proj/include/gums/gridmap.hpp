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
// Deterministic grid-mapfile generation. Each line maps a quoted DN to a
// local account:
//
//   "/O=atlas/CN=Alice Adams" grid001
//
// Entries are sorted by DN byte order so repeated builds of the same store
// state are byte-identical; '"' inside a DN is escaped as '\"'. Files are
// installed with write-to-temp + atomic rename.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gums/domain.hpp"
#include "gums/result.hpp"
#include "gums/store.hpp"

namespace gums {

struct GridMapEntry {
  DistinguishedName dn;
  std::string account;

  bool operator==(const GridMapEntry&) const = default;
};

struct GridMapDocument {
  std::vector<GridMapEntry> entries;  // sorted by dn, unique dns

  bool operator==(const GridMapDocument&) const = default;
};

/// Exactly the Active users; every other status is excluded. A dn Active in
/// several VOs appears once (it holds one account).
GridMapDocument build_gridmap(const std::vector<SiteUserState>& states);

std::string render_gridmap(const GridMapDocument& doc);

/// Inverse of render on its image; tolerates blank lines and '#' comments.
Result<GridMapDocument> parse_gridmap(std::string_view text);

Status atomic_write_text(const std::filesystem::path& path,
                         const std::string& content);
Status atomic_write_gridmap(const GridMapDocument& doc,
                            const std::filesystem::path& path);

}  // namespace gums
