#include "hclm/utf8.hpp"

#include "hclm/errors.hpp"

namespace hclm {

namespace {

constexpr char32_t kMaxCodepoint = 0x10FFFF;

int sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

}  // namespace

std::vector<char32_t> utf8_decode(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char lead = static_cast<unsigned char>(text[i]);
    const int len = sequence_length(lead);
    if (len == 0) throw FormatError("invalid UTF-8 lead byte");
    if (i + static_cast<std::size_t>(len) > text.size())
      throw FormatError("truncated UTF-8 sequence");
    char32_t cp = 0;
    switch (len) {
      case 1:
        cp = lead;
        break;
      case 2:
        cp = lead & 0x1F;
        break;
      case 3:
        cp = lead & 0x0F;
        break;
      default:
        cp = lead & 0x07;
        break;
    }
    for (int k = 1; k < len; ++k) {
      const unsigned char cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) throw FormatError("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinByLen[len]) throw FormatError("overlong UTF-8 encoding");
    if (cp >= 0xD800 && cp <= 0xDFFF) throw FormatError("UTF-8 surrogate codepoint");
    if (cp > kMaxCodepoint) throw FormatError("UTF-8 codepoint out of range");
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp > kMaxCodepoint || (cp >= 0xD800 && cp <= 0xDFFF))
    throw FormatError("cannot encode invalid codepoint");
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) out += utf8_encode(cp);
  return out;
}

bool utf8_valid(std::string_view text) {
  try {
    utf8_decode(text);
    return true;
  } catch (const FormatError&) {
    return false;
  }
}

}  // namespace hclm
