// Copyright (c) 2025 svkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace svkit {

// Every failure carries a short machine-parseable class string (e.g.
// "input too short", "bad magic") plus an optional human detail.  The kind
// maps to the CLI exit-code contract: usage -> 2, data -> 3, internal -> 4.
class Error : public std::runtime_error {
 public:
  enum class Kind { usage, data, internal };

  Error(Kind kind, std::string error_class, const std::string& detail = "")
      : std::runtime_error(detail.empty() ? error_class
                                          : error_class + ": " + detail),
        kind_(kind),
        class_(std::move(error_class)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& error_class() const noexcept { return class_; }

 private:
  Kind kind_;
  std::string class_;
};

[[noreturn]] inline void throw_usage(const std::string& error_class,
                                     const std::string& detail = "") {
  throw Error(Error::Kind::usage, error_class, detail);
}

[[noreturn]] inline void throw_data(const std::string& error_class,
                                    const std::string& detail = "") {
  throw Error(Error::Kind::data, error_class, detail);
}

[[noreturn]] inline void throw_internal(const std::string& error_class,
                                        const std::string& detail = "") {
  throw Error(Error::Kind::internal, error_class, detail);
}

inline void require_data(bool ok, const std::string& error_class,
                         const std::string& detail = "") {
  if (!ok) throw_data(error_class, detail);
}

}  // namespace svkit
