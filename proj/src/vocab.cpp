#include "hclm/vocab.hpp"

#include "hclm/utf8.hpp"

namespace hclm {

Vocabulary::Vocabulary() = default;

Vocabulary Vocabulary::from_chars(const std::vector<char32_t>& chars) {
  Vocabulary v;
  v.chars_ = chars;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    auto [it, inserted] = v.char_to_id_.emplace(chars[i], kNumSpecials + static_cast<int>(i));
    if (!inserted) throw ContractViolation("Vocabulary: duplicate character");
  }
  return v;
}

int Vocabulary::id_of(char32_t c) const {
  auto it = char_to_id_.find(c);
  return it == char_to_id_.end() ? kRare : it->second;
}

char32_t Vocabulary::char_at(int id) const {
  const int idx = id - kNumSpecials;
  if (idx < 0 || idx >= static_cast<int>(chars_.size()))
    throw ContractViolation("Vocabulary: id has no character");
  return chars_[static_cast<std::size_t>(idx)];
}

std::vector<int> Vocabulary::encode(const std::string& utf8_word) const {
  std::vector<int> ids;
  for (char32_t cp : utf8_decode(utf8_word)) ids.push_back(id_of(cp));
  return ids;
}

std::string Vocabulary::display(int id) const {
  switch (id) {
    case kBow:
      return "<s>";
    case kEow:
      return "</w>";
    case kRare:
      return "<rare>";
    default:
      return utf8_encode(char_at(id));
  }
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) out += display(id);
  return out;
}

}  // namespace hclm
