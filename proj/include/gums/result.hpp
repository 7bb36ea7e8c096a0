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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace gums {

/// Error codes shared across all modules. The kebab-case rendering of a code
/// is what goes on the wire in `ERR <code>` lines and in CLI diagnostics.
enum class Errc {
  MalformedDn,
  InvalidRecord,
  NotARegistrar,
  UnknownUser,
  ConflictingRecord,
  NotAuthorized,
  UnknownPeer,
  FingerprintMismatch,
  Closed,
  Unreachable,
  ProtocolError,
  Rejected,
  AlreadyInitialized,
  PoolExhausted,
  IllegalTransition,
  NotFound,
  DuplicateDn,
  UnknownRequest,
  AlreadyClosed,
  UnknownRequestId,
  IoError,
  MalformedLine,
  ConfigError,
  HandshakeFailed,
};

std::string_view errc_name(Errc c);
std::optional<Errc> errc_from_name(std::string_view name);

struct Error {
  Errc code;
  std::string message;

  std::string to_string() const {
    std::string s{errc_name(code)};
    if (!message.empty()) {
      s += ": ";
      s += message;
    }
    return s;
  }
};

inline Error make_error(Errc code, std::string message = {}) {
  return Error{code, std::move(message)};
}

/// Success-or-Error for operations with no payload.
class Status {
 public:
  Status() = default;
  Status(Error e) : err_(std::move(e)) {}  // NOLINT: implicit by design

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return *err_; }

 private:
  std::optional<Error> err_;
};

inline Status ok_status() { return Status{}; }

/// Value-or-Error. Deliberately small: no monadic chaining, callers branch.
template <typename T>
class Result {
 public:
  Result(T v) : v_(std::move(v)) {}      // NOLINT: implicit by design
  Result(Error e) : v_(std::move(e)) {}  // NOLINT: implicit by design

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  T& value() { return std::get<T>(v_); }
  const T& value() const { return std::get<T>(v_); }
  T take() { return std::move(std::get<T>(v_)); }

  const Error& error() const { return std::get<Error>(v_); }

 private:
  std::variant<T, Error> v_;
};

}  // namespace gums
