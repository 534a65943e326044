#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hclm/errors.hpp"

namespace hclm {

// Character inventory with the three special symbols. Ids are dense from 0;
// specials occupy 0..2, regular characters follow ordered by descending
// training count with ties broken by codepoint, so the same training data
// always yields the same id assignment.
class Vocabulary {
 public:
  static constexpr int kBow = 0;   // begin-of-word start symbol
  static constexpr int kEow = 1;   // end-of-word terminator / stream boundary
  static constexpr int kRare = 2;  // dummy for thresholded characters
  static constexpr int kNumSpecials = 3;

  Vocabulary();

  // chars must already be filtered and ordered (id kNumSpecials + i -> chars[i]).
  static Vocabulary from_chars(const std::vector<char32_t>& chars);

  int size() const { return kNumSpecials + static_cast<int>(chars_.size()); }

  // Unknown characters map to kRare.
  int id_of(char32_t c) const;
  bool has_char(char32_t c) const { return char_to_id_.count(c) != 0; }
  char32_t char_at(int id) const;  // regular ids only

  bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }

  // Word chars -> ids, no terminator appended.
  std::vector<int> encode(const std::string& utf8_word) const;
  // Ids -> display string; specials render as <s>, </w>, <rare>.
  std::string decode(const std::vector<int>& ids) const;
  std::string display(int id) const;

  const std::vector<char32_t>& chars() const { return chars_; }

  bool operator==(const Vocabulary& other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;  // ordered regular characters
  std::unordered_map<char32_t, int> char_to_id_;
};

}  // namespace hclm
