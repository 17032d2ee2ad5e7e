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

// UTF-8 helpers. Every offset in this library counts Unicode code points,
// never bytes.

#ifndef CDG_UNICODE_HPP_
#define CDG_UNICODE_HPP_

#include <cstddef>
#include <string>
#include <string_view>

namespace cdg::unicode {

// Invalid byte sequences decode to U+FFFD.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

std::size_t length(std::string_view utf8);

// Code points [start, end) of `utf8`; clamps to the string length.
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

std::string nfc(std::string_view utf8);

// Lowercase (root locale) followed by NFC.
std::string normalize_token(std::string_view utf8);

bool is_whitespace(char32_t c);
// Whitespace, control characters and any Unicode punctuation category.
bool is_token_boundary(char32_t c);

std::string trim(std::string_view utf8);

}  // namespace cdg::unicode

#endif  // CDG_UNICODE_HPP_
