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
// Shared vocabulary types: distinguished names, user records, attribute
// projections, peer identities, and record validation.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gums/result.hpp"
#include "gums/timeutil.hpp"

namespace gums {

/// Slash-separated certificate subject path, e.g. "/O=Org/OU=Unit/CN=Name".
/// Always held in normalized form: single "/" separators, components trimmed,
/// each component key=value with non-empty key and value. Comparison is exact
/// byte equality of the normalized text.
class DistinguishedName {
 public:
  DistinguishedName() = default;

  /// Normalizes on the way in: collapses repeated "/", trims component and
  /// key/value whitespace. Rejects empty input, input without a leading "/",
  /// and components lacking "=" or with an empty key or value.
  static Result<DistinguishedName> parse(std::string_view raw);

  /// For text already known to be normalized (journal replay, generated ids).
  static DistinguishedName unchecked(std::string normalized);

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const DistinguishedName&) const = default;

 private:
  std::string value_;
};

/// Role tokens are plain strings; `valid_role_name` gives the grammar
/// (non-empty, lowercase, no whitespace).
using RoleName = std::string;
bool valid_role_name(std::string_view role);

enum class Attribute : std::uint16_t {
  Dn = 0,
  CertificateRef,
  RealName,
  Institution,
  Email,
  RegistrarDn,
  AgreementSignedAt,
  Roles,
  VoPath,
};

inline constexpr std::array<Attribute, 9> kAllAttributes = {
    Attribute::Dn,          Attribute::CertificateRef,
    Attribute::RealName,    Attribute::Institution,
    Attribute::Email,       Attribute::RegistrarDn,
    Attribute::AgreementSignedAt, Attribute::Roles,
    Attribute::VoPath,
};

std::string_view attribute_name(Attribute a);
std::optional<Attribute> attribute_from_name(std::string_view name);

/// A set of record attributes in canonical order. "dn" is always a member:
/// records are keyed by DN, so no projection may drop it.
class AttributeProjection {
 public:
  AttributeProjection() : bits_(bit(Attribute::Dn)) {}

  static AttributeProjection all();
  static AttributeProjection of(std::initializer_list<Attribute> attrs);
  /// Parses "dn,email,roles". Unknown names are an error; "dn" is implied.
  static Result<AttributeProjection> parse(std::string_view csv);

  void add(Attribute a) { bits_ |= bit(a); }
  bool contains(Attribute a) const { return (bits_ & bit(a)) != 0; }
  AttributeProjection intersect(const AttributeProjection& other) const;
  std::size_t size() const;

  /// Canonical-order comma list, e.g. "dn,email,roles".
  std::string to_csv() const;

  bool operator==(const AttributeProjection&) const = default;

 private:
  static std::uint16_t bit(Attribute a) {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(a));
  }
  std::uint16_t bits_;
};

/// One VO membership record. Fields outside a projection are left default
/// (empty text, empty role set, epoch timestamp); an empty value and an
/// unprojected value are deliberately indistinguishable.
struct UserRecord {
  DistinguishedName dn;
  std::string certificate_ref;  // opaque token standing in for the certificate
  std::string real_name;
  std::string institution;
  std::string email;
  DistinguishedName registrar_dn;
  Timestamp agreement_signed_at{};
  std::set<RoleName> roles;
  std::string vo_path;

  bool operator==(const UserRecord&) const = default;
};

/// Keeps exactly the attributes in `required`; everything else reset to the
/// default value. The DN always survives.
UserRecord project_record(const UserRecord& r, const AttributeProjection& required);

/// The attributes a record actually carries (non-default fields, plus dn).
AttributeProjection present_attributes(const UserRecord& r);

enum class Violation {
  InvalidDn,
  InvalidEmail,
  EmptyRealName,
  EmptyInstitution,
  EmptyCertificateRef,
  InvalidRole,
};

std::string_view violation_name(Violation v);

/// All violations, not just the first. The one-argument form validates a
/// complete record; the projection form checks only the attributes listed
/// (used for replicated records that legitimately carry a subset).
std::vector<Violation> validate_record(const UserRecord& r);
std::vector<Violation> validate_record(const UserRecord& r,
                                       const AttributeProjection& present);

std::string violations_to_string(const std::vector<Violation>& vs);

/// Authenticated peer. Only handshake code paths construct these.
struct PeerIdentity {
  DistinguishedName dn;
  std::string credential_fingerprint;

  bool operator==(const PeerIdentity&) const = default;
};

}  // namespace gums
