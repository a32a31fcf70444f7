// Copyright 2026 The Tokenveil Authors.
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

#ifndef TOKENVEIL_FILE_IO_H_
#define TOKENVEIL_FILE_IO_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace tokenveil {

// Reads a whole file. Returns NotFound when the path does not exist.
absl::StatusOr<std::string> ReadFileToString(const std::string& path);

// Writes `contents` to a temporary sibling and renames it over `path`, so
// readers never observe a partially written artifact.
absl::Status WriteFileAtomically(const std::string& path,
                                 std::string_view contents);

}  // namespace tokenveil

#endif  // TOKENVEIL_FILE_IO_H_
