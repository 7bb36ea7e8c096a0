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

#include "gums/wire.hpp"

#include <nlohmann/json.hpp>

namespace gums {

using nlohmann::json;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

namespace {

std::string joined_roles(const std::set<RoleName>& roles) {
  std::string out;
  for (const auto& r : roles) {
    if (!out.empty()) out.push_back(',');
    out.append(r);
  }
  return out;
}

std::set<RoleName> split_roles(std::string_view csv) {
  std::set<RoleName> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t end = csv.find(',', pos);
    if (end == std::string_view::npos) end = csv.size();
    if (end > pos) out.insert(std::string(csv.substr(pos, end - pos)));
    if (end == csv.size()) break;
    pos = end + 1;
  }
  return out;
}

std::string attribute_value(const UserRecord& r, Attribute a) {
  switch (a) {
    case Attribute::Dn: return r.dn.str();
    case Attribute::CertificateRef: return r.certificate_ref;
    case Attribute::RealName: return r.real_name;
    case Attribute::Institution: return r.institution;
    case Attribute::Email: return r.email;
    case Attribute::RegistrarDn: return r.registrar_dn.str();
    case Attribute::AgreementSignedAt:
      return r.agreement_signed_at == Timestamp{}
                 ? std::string{}
                 : format_rfc3339(r.agreement_signed_at);
    case Attribute::Roles: return joined_roles(r.roles);
    case Attribute::VoPath: return r.vo_path;
  }
  return {};
}

Status set_attribute(UserRecord& r, Attribute a, std::string_view value) {
  switch (a) {
    case Attribute::Dn: {
      auto dn = DistinguishedName::parse(value);
      if (!dn.ok()) return dn.error();
      r.dn = dn.take();
      return ok_status();
    }
    case Attribute::CertificateRef: r.certificate_ref = value; return ok_status();
    case Attribute::RealName: r.real_name = value; return ok_status();
    case Attribute::Institution: r.institution = value; return ok_status();
    case Attribute::Email: r.email = value; return ok_status();
    case Attribute::RegistrarDn: {
      auto dn = DistinguishedName::parse(value);
      if (!dn.ok()) return dn.error();
      r.registrar_dn = dn.take();
      return ok_status();
    }
    case Attribute::AgreementSignedAt: {
      auto t = parse_rfc3339(value);
      if (!t.ok()) return t.error();
      r.agreement_signed_at = t.take();
      return ok_status();
    }
    case Attribute::Roles: r.roles = split_roles(value); return ok_status();
    case Attribute::VoPath: r.vo_path = value; return ok_status();
  }
  return make_error(Errc::ProtocolError, "bad attribute");
}

}  // namespace

std::string render_record_block(const UserRecord& r,
                                const AttributeProjection& proj) {
  std::string out;
  for (Attribute a : kAllAttributes) {
    if (!proj.contains(a)) continue;
    std::string value = attribute_value(r, a);
    if (value.empty() && a != Attribute::Dn) continue;
    out.append(attribute_name(a));
    out.append(": ");
    out.append(value);
    out.push_back('\n');
  }
  return out;
}

Result<UserRecord> parse_record_block(
    const std::vector<std::string_view>& lines) {
  UserRecord r;
  bool saw_dn = false;
  for (std::string_view line : lines) {
    if (line.empty()) continue;
    std::size_t colon = line.find(": ");
    if (colon == std::string_view::npos) {
      return make_error(Errc::ProtocolError,
                        "bad block line: " + std::string(line));
    }
    std::string_view key = line.substr(0, colon);
    std::string_view value = line.substr(colon + 2);
    auto attr = attribute_from_name(key);
    if (!attr) {
      return make_error(Errc::ProtocolError,
                        "unknown block key: " + std::string(key));
    }
    if (Status s = set_attribute(r, *attr, value); !s.ok()) return s.error();
    if (*attr == Attribute::Dn) saw_dn = true;
  }
  if (!saw_dn) {
    return make_error(Errc::ProtocolError, "record block without dn");
  }
  return r;
}

std::string render_tombstone_block(const DistinguishedName& dn) {
  return "dn: " + dn.str() + "\nremoved: true\n";
}

Result<std::vector<PushBlock>> parse_push_blocks(std::string_view body) {
  std::vector<PushBlock> out;
  std::vector<std::string_view> block;
  bool removed = false;
  auto flush = [&]() -> Status {
    if (block.empty()) return ok_status();
    auto rec = parse_record_block(block);
    if (!rec.ok()) return rec.error();
    out.push_back(PushBlock{removed, rec.take()});
    block.clear();
    removed = false;
    return ok_status();
  };
  for (std::string_view line : split_lines(body)) {
    if (line.empty()) {
      if (Status s = flush(); !s.ok()) return s.error();
      continue;
    }
    if (line == "removed: true") {
      removed = true;
      continue;
    }
    block.push_back(line);
  }
  if (Status s = flush(); !s.ok()) return s.error();
  return out;
}

std::string render_query_response(const std::vector<UserRecord>& records,
                                  const AttributeProjection& proj) {
  std::string out;
  for (const auto& r : records) {
    out.append(render_record_block(r, proj));
    out.push_back('\n');
  }
  out.append("END count=");
  out.append(std::to_string(records.size()));
  out.push_back('\n');
  return out;
}

Result<std::vector<UserRecord>> parse_query_response(std::string_view text) {
  if (auto err = parse_err(text)) return *err;
  std::vector<UserRecord> out;
  std::vector<std::string_view> block;
  bool terminated = false;
  auto flush = [&]() -> Status {
    if (block.empty()) return ok_status();
    auto rec = parse_record_block(block);
    if (!rec.ok()) return rec.error();
    out.push_back(rec.take());
    block.clear();
    return ok_status();
  };
  for (std::string_view line : split_lines(text)) {
    if (line.rfind("END count=", 0) == 0) {
      if (Status s = flush(); !s.ok()) return s.error();
      std::size_t want = 0;
      try {
        want = std::stoul(std::string(line.substr(10)));
      } catch (const std::exception&) {
        return make_error(Errc::ProtocolError, "bad END line");
      }
      if (want != out.size()) {
        return make_error(Errc::ProtocolError, "END count mismatch");
      }
      terminated = true;
      break;
    }
    if (line.empty()) {
      if (Status s = flush(); !s.ok()) return s.error();
      continue;
    }
    block.push_back(line);
  }
  if (!terminated) {
    return make_error(Errc::ProtocolError, "response not terminated by END");
  }
  return out;
}

std::string render_err(Errc code) {
  return "ERR " + std::string(errc_name(code)) + "\n";
}

std::optional<Error> parse_err(std::string_view text) {
  if (text.rfind("ERR ", 0) != 0) return std::nullopt;
  std::size_t end = text.find('\n');
  std::string_view code =
      text.substr(4, end == std::string_view::npos ? end : end - 4);
  auto c = errc_from_name(code);
  if (!c) return make_error(Errc::ProtocolError, std::string(code));
  return make_error(*c, "remote error");
}

json record_to_json(const UserRecord& r) {
  json j = json::object();
  j["dn"] = r.dn.str();
  if (!r.certificate_ref.empty()) j["cert"] = r.certificate_ref;
  if (!r.real_name.empty()) j["name"] = r.real_name;
  if (!r.institution.empty()) j["inst"] = r.institution;
  if (!r.email.empty()) j["email"] = r.email;
  if (!r.registrar_dn.empty()) j["registrar"] = r.registrar_dn.str();
  if (r.agreement_signed_at != Timestamp{}) {
    j["agreed"] = timestamp_to_unix(r.agreement_signed_at);
  }
  if (!r.roles.empty()) j["roles"] = r.roles;
  if (!r.vo_path.empty()) j["vo"] = r.vo_path;
  return j;
}

Result<UserRecord> record_from_json(const json& j) {
  UserRecord r;
  try {
    r.dn = DistinguishedName::unchecked(j.at("dn").get<std::string>());
    if (j.contains("cert")) r.certificate_ref = j["cert"].get<std::string>();
    if (j.contains("name")) r.real_name = j["name"].get<std::string>();
    if (j.contains("inst")) r.institution = j["inst"].get<std::string>();
    if (j.contains("email")) r.email = j["email"].get<std::string>();
    if (j.contains("registrar")) {
      r.registrar_dn = DistinguishedName::unchecked(j["registrar"].get<std::string>());
    }
    if (j.contains("agreed")) {
      r.agreement_signed_at = timestamp_from_unix(j["agreed"].get<std::int64_t>());
    }
    if (j.contains("roles")) {
      for (const auto& role : j["roles"]) r.roles.insert(role.get<std::string>());
    }
    if (j.contains("vo")) r.vo_path = j["vo"].get<std::string>();
  } catch (const json::exception& e) {
    return make_error(Errc::MalformedLine, e.what());
  }
  return r;
}

}  // namespace gums
