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

#include "gums/domain.hpp"

#include <algorithm>
#include <cctype>

namespace gums {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

const char* const kErrcNames[] = {
    "malformed-dn",       "invalid-record",      "not-a-registrar",
    "unknown-user",       "conflicting-record",  "not-authorized",
    "unknown-peer",       "fingerprint-mismatch", "closed",
    "unreachable",        "protocol-error",      "rejected",
    "already-initialized", "pool-exhausted",     "illegal-transition",
    "not-found",          "duplicate-dn",        "unknown-request",
    "already-closed",     "unknown-request-id",  "io-error",
    "malformed-line",     "config-error",        "handshake-failed",
};

const char* const kAttributeNames[] = {
    "dn",          "certificateRef", "realName", "institution", "email",
    "registrarDn", "agreementSignedAt", "roles", "voPath",
};

const char* const kViolationNames[] = {
    "invalid-dn",        "invalid-email",       "empty-real-name",
    "empty-institution", "empty-certificate-ref", "invalid-role",
};

}  // namespace

std::string_view errc_name(Errc c) {
  return kErrcNames[static_cast<int>(c)];
}

std::optional<Errc> errc_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kErrcNames); ++i) {
    if (name == kErrcNames[i]) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

Result<DistinguishedName> DistinguishedName::parse(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.empty()) {
    return make_error(Errc::MalformedDn, "empty distinguished name");
  }
  if (s.front() != '/') {
    return make_error(Errc::MalformedDn, "missing leading '/': " + std::string(raw));
  }
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  bool any_component = false;
  while (pos < s.size()) {
    while (pos < s.size() && s[pos] == '/') ++pos;  // collapse separators
    if (pos >= s.size()) break;
    std::size_t end = s.find('/', pos);
    if (end == std::string_view::npos) end = s.size();
    std::string_view comp = trim(s.substr(pos, end - pos));
    pos = end;
    if (comp.empty()) continue;
    std::size_t eq = comp.find('=');
    if (eq == std::string_view::npos) {
      return make_error(Errc::MalformedDn,
                        "component lacks '=': " + std::string(comp));
    }
    std::string_view key = trim(comp.substr(0, eq));
    std::string_view val = trim(comp.substr(eq + 1));
    if (key.empty() || val.empty()) {
      return make_error(Errc::MalformedDn,
                        "component with empty key or value: " + std::string(comp));
    }
    out.push_back('/');
    out.append(key);
    out.push_back('=');
    out.append(val);
    any_component = true;
  }
  if (!any_component) {
    return make_error(Errc::MalformedDn, "no components: " + std::string(raw));
  }
  DistinguishedName dn;
  dn.value_ = std::move(out);
  return dn;
}

DistinguishedName DistinguishedName::unchecked(std::string normalized) {
  DistinguishedName dn;
  dn.value_ = std::move(normalized);
  return dn;
}

bool valid_role_name(std::string_view role) {
  if (role.empty()) return false;
  for (char c : role) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
    if (std::isupper(static_cast<unsigned char>(c))) return false;
    if (c == ',') return false;  // commas are the wire separator
  }
  return true;
}

std::string_view attribute_name(Attribute a) {
  return kAttributeNames[static_cast<int>(a)];
}

std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kAttributeNames); ++i) {
    if (name == kAttributeNames[i]) return static_cast<Attribute>(i);
  }
  return std::nullopt;
}

AttributeProjection AttributeProjection::all() {
  AttributeProjection p;
  for (Attribute a : kAllAttributes) p.add(a);
  return p;
}

AttributeProjection AttributeProjection::of(
    std::initializer_list<Attribute> attrs) {
  AttributeProjection p;
  for (Attribute a : attrs) p.add(a);
  return p;
}

Result<AttributeProjection> AttributeProjection::parse(std::string_view csv) {
  AttributeProjection p;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t end = csv.find(',', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view name = trim(csv.substr(pos, end - pos));
    if (!name.empty()) {
      auto a = attribute_from_name(name);
      if (!a) {
        return make_error(Errc::ProtocolError,
                          "unknown attribute: " + std::string(name));
      }
      p.add(*a);
    }
    if (end == csv.size()) break;
    pos = end + 1;
  }
  return p;
}

AttributeProjection AttributeProjection::intersect(
    const AttributeProjection& other) const {
  AttributeProjection p;
  p.bits_ = static_cast<std::uint16_t>(bits_ & other.bits_);
  p.add(Attribute::Dn);
  return p;
}

std::size_t AttributeProjection::size() const {
  std::size_t n = 0;
  for (Attribute a : kAllAttributes) {
    if (contains(a)) ++n;
  }
  return n;
}

std::string AttributeProjection::to_csv() const {
  std::string out;
  for (Attribute a : kAllAttributes) {
    if (!contains(a)) continue;
    if (!out.empty()) out.push_back(',');
    out.append(attribute_name(a));
  }
  return out;
}

UserRecord project_record(const UserRecord& r,
                          const AttributeProjection& required) {
  UserRecord out;
  out.dn = r.dn;
  if (required.contains(Attribute::CertificateRef)) out.certificate_ref = r.certificate_ref;
  if (required.contains(Attribute::RealName)) out.real_name = r.real_name;
  if (required.contains(Attribute::Institution)) out.institution = r.institution;
  if (required.contains(Attribute::Email)) out.email = r.email;
  if (required.contains(Attribute::RegistrarDn)) out.registrar_dn = r.registrar_dn;
  if (required.contains(Attribute::AgreementSignedAt)) out.agreement_signed_at = r.agreement_signed_at;
  if (required.contains(Attribute::Roles)) out.roles = r.roles;
  if (required.contains(Attribute::VoPath)) out.vo_path = r.vo_path;
  return out;
}

AttributeProjection present_attributes(const UserRecord& r) {
  AttributeProjection p;
  if (!r.certificate_ref.empty()) p.add(Attribute::CertificateRef);
  if (!r.real_name.empty()) p.add(Attribute::RealName);
  if (!r.institution.empty()) p.add(Attribute::Institution);
  if (!r.email.empty()) p.add(Attribute::Email);
  if (!r.registrar_dn.empty()) p.add(Attribute::RegistrarDn);
  if (r.agreement_signed_at != Timestamp{}) p.add(Attribute::AgreementSignedAt);
  if (!r.roles.empty()) p.add(Attribute::Roles);
  if (!r.vo_path.empty()) p.add(Attribute::VoPath);
  return p;
}

std::string_view violation_name(Violation v) {
  return kViolationNames[static_cast<int>(v)];
}

namespace {

bool valid_email(const std::string& email) {
  std::size_t at = email.find('@');
  if (at == std::string::npos || at == 0 || at + 1 >= email.size()) return false;
  if (email.find('@', at + 1) != std::string::npos) return false;
  return true;
}

}  // namespace

std::vector<Violation> validate_record(const UserRecord& r,
                                       const AttributeProjection& present) {
  std::vector<Violation> out;
  if (r.dn.empty()) out.push_back(Violation::InvalidDn);
  if (present.contains(Attribute::Email) && !valid_email(r.email)) {
    out.push_back(Violation::InvalidEmail);
  }
  if (present.contains(Attribute::RealName) && r.real_name.empty()) {
    out.push_back(Violation::EmptyRealName);
  }
  if (present.contains(Attribute::Institution) && r.institution.empty()) {
    out.push_back(Violation::EmptyInstitution);
  }
  if (present.contains(Attribute::CertificateRef) && r.certificate_ref.empty()) {
    out.push_back(Violation::EmptyCertificateRef);
  }
  if (present.contains(Attribute::Roles)) {
    for (const auto& role : r.roles) {
      if (!valid_role_name(role)) {
        out.push_back(Violation::InvalidRole);
        break;
      }
    }
  }
  return out;
}

std::vector<Violation> validate_record(const UserRecord& r) {
  return validate_record(r, AttributeProjection::all());
}

std::string violations_to_string(const std::vector<Violation>& vs) {
  std::string out;
  for (Violation v : vs) {
    if (!out.empty()) out.push_back(',');
    out.append(violation_name(v));
  }
  return out;
}

}  // namespace gums
