// Copyright 2026 The cdg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CDG_LOG_HPP_
#define CDG_LOG_HPP_

#include <functional>
#include <string_view>

namespace cdg::log {

enum class Level { kInfo, kWarning };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink; the default writes warnings to stderr and
// drops info messages. Passing an empty function restores the default.
void set_sink(Sink sink);

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace cdg::log

#endif  // CDG_LOG_HPP_
