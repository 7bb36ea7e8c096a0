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

#include "gums/gridmap.hpp"

#include <algorithm>
#include <fstream>

#include "gums/wire.hpp"

namespace gums {

GridMapDocument build_gridmap(const std::vector<SiteUserState>& states) {
  GridMapDocument doc;
  for (const auto& s : states) {
    if (s.status != UserStatus::Active) continue;
    if (!s.local_account) continue;  // Active implies an account; belt and braces
    doc.entries.push_back(GridMapEntry{s.dn, *s.local_account});
  }
  std::sort(doc.entries.begin(), doc.entries.end(),
            [](const GridMapEntry& a, const GridMapEntry& b) {
              return a.dn.str() < b.dn.str();
            });
  doc.entries.erase(std::unique(doc.entries.begin(), doc.entries.end(),
                                [](const GridMapEntry& a, const GridMapEntry& b) {
                                  return a.dn == b.dn;
                                }),
                    doc.entries.end());
  return doc;
}

std::string render_gridmap(const GridMapDocument& doc) {
  std::string out;
  for (const auto& e : doc.entries) {
    out.push_back('"');
    for (char c : e.dn.str()) {
      if (c == '"') out.push_back('\\');
      out.push_back(c);
    }
    out.append("\" ");
    out.append(e.account);
    out.push_back('\n');
  }
  return out;
}

Result<GridMapDocument> parse_gridmap(std::string_view text) {
  GridMapDocument doc;
  int lineno = 0;
  for (std::string_view line : split_lines(text)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) continue;
    if (line[i] == '#') continue;
    if (line[i] != '"') {
      return make_error(Errc::MalformedLine,
                        "line " + std::to_string(lineno) + ": expected '\"'");
    }
    ++i;
    std::string dn_text;
    bool closed = false;
    while (i < line.size()) {
      char c = line[i];
      if (c == '\\' && i + 1 < line.size() && line[i + 1] == '"') {
        dn_text.push_back('"');
        i += 2;
        continue;
      }
      if (c == '"') {
        closed = true;
        ++i;
        break;
      }
      dn_text.push_back(c);
      ++i;
    }
    if (!closed) {
      return make_error(Errc::MalformedLine,
                        "line " + std::to_string(lineno) + ": unterminated dn");
    }
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::string account(line.substr(i));
    while (!account.empty() &&
           (account.back() == ' ' || account.back() == '\t' ||
            account.back() == '\r')) {
      account.pop_back();
    }
    if (account.empty()) {
      return make_error(Errc::MalformedLine,
                        "line " + std::to_string(lineno) + ": missing account");
    }
    doc.entries.push_back(
        GridMapEntry{DistinguishedName::unchecked(std::move(dn_text)),
                     std::move(account)});
  }
  return doc;
}

Status atomic_write_text(const std::filesystem::path& path,
                         const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) return make_error(Errc::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) return make_error(Errc::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) return make_error(Errc::IoError, ec.message());
  return ok_status();
}

Status atomic_write_gridmap(const GridMapDocument& doc,
                            const std::filesystem::path& path) {
  return atomic_write_text(path, render_gridmap(doc));
}

}  // namespace gums
