#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hclm {

// Strict UTF-8 codec (rejects overlong forms, surrogates, truncation).
// Throws hclm::FormatError on invalid input.
std::vector<char32_t> utf8_decode(std::string_view text);

std::string utf8_encode(char32_t cp);
std::string utf8_encode(const std::vector<char32_t>& cps);

bool utf8_valid(std::string_view text);

}  // namespace hclm
