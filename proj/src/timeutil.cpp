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

#include "gums/timeutil.hpp"

#include <cstdio>

namespace gums {
namespace {

// Civil-date conversions (proleptic Gregorian), era-based.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = yy + (m <= 2);
}

bool parse_fixed_uint(std::string_view s, size_t pos, size_t len, unsigned& out) {
  unsigned v = 0;
  if (pos + len > s.size()) return false;
  for (size_t i = pos; i < pos + len; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now());
}

std::string format_rfc3339(Timestamp t) {
  std::int64_t secs = t.time_since_epoch().count();
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  unsigned hh = static_cast<unsigned>(rem / 3600);
  unsigned mm = static_cast<unsigned>((rem / 60) % 60);
  unsigned ss = static_cast<unsigned>(rem % 60);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                static_cast<long long>(y), m, d, hh, mm, ss);
  return buf;
}

Result<Timestamp> parse_rfc3339(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ, exactly 20 chars, uppercase T and Z.
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' ||
      text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
      text[19] != 'Z') {
    return make_error(Errc::MalformedLine, "bad timestamp: " + std::string(text));
  }
  unsigned y, mo, d, hh, mm, ss;
  if (!parse_fixed_uint(text, 0, 4, y) || !parse_fixed_uint(text, 5, 2, mo) ||
      !parse_fixed_uint(text, 8, 2, d) || !parse_fixed_uint(text, 11, 2, hh) ||
      !parse_fixed_uint(text, 14, 2, mm) || !parse_fixed_uint(text, 17, 2, ss)) {
    return make_error(Errc::MalformedLine, "bad timestamp: " + std::string(text));
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh > 23 || mm > 59 || ss > 60) {
    return make_error(Errc::MalformedLine, "bad timestamp: " + std::string(text));
  }
  std::int64_t secs = days_from_civil(y, mo, d) * 86400 +
                      static_cast<std::int64_t>(hh) * 3600 + mm * 60 + ss;
  return timestamp_from_unix(secs);
}

}  // namespace gums
